//! The 24-element single-qubit Clifford group.
//!
//! Group logic runs on exact signed-permutation matrices (the unital blocks
//! of the Clifford PTMs); floating-point PTMs are derived from them, so
//! indices, inverses and the Cayley table carry no rounding ambiguity.

use std::collections::{HashMap, VecDeque};
use std::ops::Mul;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::superop::Superop;

pub const GROUP_ORDER: usize = 24;

/// Exact 3x3 signed permutation acting on Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedPerm(pub [[i8; 3]; 3]);

impl SignedPerm {
    pub const IDENTITY: Self = Self([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
    /// Hadamard: X <-> Z, Y -> -Y.
    pub const HADAMARD: Self = Self([[0, 0, 1], [0, -1, 0], [1, 0, 0]]);
    /// Phase gate: X -> Y, Y -> -X.
    pub const PHASE: Self = Self([[0, -1, 0], [1, 0, 0], [0, 0, 1]]);
    /// Quarter turn about +x.
    pub const X90: Self = Self([[1, 0, 0], [0, 0, -1], [0, 1, 0]]);
    /// Quarter turn about +y.
    pub const Y90: Self = Self([[0, 0, 1], [0, 1, 0], [-1, 0, 0]]);

    pub fn transpose(&self) -> Self {
        let mut out = [[0i8; 3]; 3];
        for (i, row) in self.0.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                out[j][i] = v;
            }
        }
        Self(out)
    }

    pub fn determinant(&self) -> i32 {
        let m = self.0.map(|r| r.map(i32::from));
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn is_signed_permutation(&self) -> bool {
        let rows_ok = self
            .0
            .iter()
            .all(|r| r.iter().filter(|&&v| v != 0).count() == 1 && r.iter().all(|v| v.abs() <= 1));
        rows_ok && self.transpose().0.iter().all(|c| c.iter().filter(|&&v| v != 0).count() == 1)
    }

    /// Full 4x4 PTM with the trivial identity component.
    pub fn to_superop<T: Real>(&self) -> Superop<T> {
        let mut m = DMatrix::<T>::zeros(4, 4);
        m[(0, 0)] = T::one();
        for i in 0..3 {
            for j in 0..3 {
                m[(i + 1, j + 1)] = T::lit(f64::from(self.0[i][j]));
            }
        }
        Superop::from_matrix(2, m).expect("4x4 PTM")
    }

    /// Snaps a near-signed-permutation PTM back to exact form.
    pub fn snap<T: Real>(e: &Superop<T>) -> Option<Self> {
        let m = e.matrix();
        if m.nrows() != 4 {
            return None;
        }
        let tol = 1e-6;
        let mut out = [[0i8; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let v = m[(i + 1, j + 1)].to_f64_lossy();
                let r = v.round();
                if (v - r).abs() > tol || r.abs() > 1.0 {
                    return None;
                }
                out[i][j] = r as i8;
            }
        }
        let p = Self(out);
        p.is_signed_permutation().then_some(p)
    }
}

impl Mul for SignedPerm {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let mut out = [[0i8; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        Self(out)
    }
}

#[derive(Debug, Clone)]
pub struct CliffordGroup<T: Real> {
    gates: Vec<Superop<T>>,
    exact: Vec<SignedPerm>,
    index: HashMap<SignedPerm, usize>,
    inverse_table: Vec<usize>,
    /// `cayley[i][j]` is the index of `g_i . g_j`.
    cayley: Vec<Vec<usize>>,
}

impl<T: Real> CliffordGroup<T> {
    /// Closure of `{H, S}` by breadth-first search from the identity, each
    /// new element `g . h` visited with generators in the order `H, S`.
    pub fn generate() -> Result<Self> {
        let generators = [SignedPerm::HADAMARD, SignedPerm::PHASE];
        let mut exact = vec![SignedPerm::IDENTITY];
        let mut index = HashMap::from([(SignedPerm::IDENTITY, 0usize)]);
        let mut queue = VecDeque::from([SignedPerm::IDENTITY]);
        while let Some(h) = queue.pop_front() {
            for g in generators {
                let next = g * h;
                if !index.contains_key(&next) {
                    if exact.len() == GROUP_ORDER {
                        return Err(Error::ClosureOverflow);
                    }
                    index.insert(next, exact.len());
                    exact.push(next);
                    queue.push_back(next);
                }
            }
        }
        let n = exact.len();
        let cayley: Vec<Vec<usize>> = exact
            .iter()
            .map(|&a| exact.iter().map(|&b| index[&(a * b)]).collect())
            .collect();
        let inverse_table = exact.iter().map(|p| index[&p.transpose()]).collect();
        let gates = exact.iter().map(SignedPerm::to_superop).collect();
        debug_assert_eq!(n, GROUP_ORDER);
        Ok(Self {
            gates,
            exact,
            index,
            inverse_table,
            cayley,
        })
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gates(&self) -> &[Superop<T>] {
        &self.gates
    }

    pub fn gate(&self, i: usize) -> &Superop<T> {
        &self.gates[i]
    }

    pub fn exact(&self, i: usize) -> SignedPerm {
        self.exact[i]
    }

    pub fn inverse(&self, i: usize) -> usize {
        self.inverse_table[i]
    }

    /// Index of `g_i . g_j`.
    pub fn product(&self, i: usize, j: usize) -> usize {
        self.cayley[i][j]
    }

    pub fn cayley(&self) -> &[Vec<usize>] {
        &self.cayley
    }

    pub fn index_of_exact(&self, p: &SignedPerm) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Index of a PTM that is numerically a Clifford.
    pub fn index_of(&self, e: &Superop<T>) -> Option<usize> {
        SignedPerm::snap(e).and_then(|p| self.index_of_exact(&p))
    }

    /// Index of the overall operation of a time-ordered sequence
    /// (`seq[0]` acts first).
    pub fn compose_sequence(&self, seq: &[usize]) -> usize {
        seq.iter().fold(0, |acc, &g| self.cayley[g][acc])
    }

    /// `(1/24) sum_G G E G^dag`.
    pub fn twirl(&self, e: &Superop<T>) -> Superop<T> {
        let n = e.matrix().nrows();
        let mut acc = DMatrix::<T>::zeros(n, n);
        for g in &self.gates {
            acc += g.matrix() * e.matrix() * g.matrix().transpose();
        }
        acc /= T::lit(self.gates.len() as f64);
        Superop::from_matrix(e.dim(), acc).expect("same dimension")
    }
}

/// Clifford twirl of `e` over a freshly generated group.
pub fn clifford_twirl<T: Real>(e: &Superop<T>) -> Superop<T> {
    CliffordGroup::<T>::generate()
        .expect("Clifford closure")
        .twirl(e)
}
