//! Hermitian operator basis and the Pauli-transfer-matrix (Liouville)
//! representation of superoperators.
//!
//! Operators are expanded in the normalized Pauli basis `{1, X, Y, Z}/sqrt(2)`.
//! A superoperator `E` is stored as the real `d^2 x d^2` matrix with entries
//! `E[a][b] = tr(O_a E(O_b))`. For trace-preserving maps the first row is
//! `(1, 0, ..., 0)`, the first column below it is the translation `t`, and
//! the lower-right `D x D` block (`D = d^2 - 1`) is the unital part `E_u`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type CMatrix<T> = DMatrix<Complex<T>>;

fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// Pauli matrices `[1, X, Y, Z]` (unnormalized).
pub fn pauli_matrices<T: Real>() -> [CMatrix<T>; 4] {
    let z = c::<T>(0.0, 0.0);
    let one = c::<T>(1.0, 0.0);
    let i = c::<T>(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[one, z, z, one]),
        CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}

/// Orthonormal Hermitian 1-basis `O_0 = 1/sqrt(d), O_1.. O_D`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBasis<T: Real> {
    dim: usize,
    elements: Vec<CMatrix<T>>,
}

impl<T: Real> OperatorBasis<T> {
    /// Normalized Pauli basis for dimension `d`. Only `d = 2` is supported.
    pub fn pauli(d: usize) -> Result<Self> {
        if d != 2 {
            return Err(Error::UnsupportedDimension(d));
        }
        let norm = Complex::from(T::one() / T::lit(2.0).sqrt());
        let elements = pauli_matrices::<T>()
            .into_iter()
            .map(|p| p * norm)
            .collect();
        Ok(Self { dim: d, elements })
    }

    pub fn qubit() -> Self {
        Self::pauli(2).expect("qubit basis")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `D = d^2 - 1`.
    pub fn unital_dim(&self) -> usize {
        self.dim * self.dim - 1
    }

    pub fn elements(&self) -> &[CMatrix<T>] {
        &self.elements
    }

    /// Expansion coefficients `tr(O_a^dag A)`.
    pub fn coefficients(&self, a: &CMatrix<T>) -> Vec<Complex<T>> {
        self.elements
            .iter()
            .map(|o| (o.adjoint() * a).trace())
            .collect()
    }

    /// Reassembles `sum_a coeffs[a] O_a`.
    pub fn operator(&self, coeffs: &[Complex<T>]) -> CMatrix<T> {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (o, &k) in self.elements.iter().zip(coeffs) {
            out += o * k;
        }
        out
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> T {
        let mut worst = T::zero();
        for (a, oa) in self.elements.iter().enumerate() {
            for (b, ob) in self.elements.iter().enumerate() {
                let g = (oa.adjoint() * ob).trace();
                let target = if a == b { T::one() } else { T::zero() };
                worst = worst.max((g - Complex::from(target)).norm_sqr().sqrt());
            }
        }
        worst
    }
}

/// Real PTM of a superoperator in the normalized Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Superop<T: Real> {
    dim: usize,
    mat: DMatrix<T>,
    is_tp: bool,
    is_unital: bool,
}

impl<T: Real> Superop<T> {
    /// Wraps a `d^2 x d^2` real matrix, caching the TP and unital flags.
    pub fn from_matrix(dim: usize, mat: DMatrix<T>) -> Result<Self> {
        if dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let n = dim * dim;
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: mat.nrows().max(mat.ncols()),
            });
        }
        let tol = T::tol(1e-12);
        let is_tp = tp_deviation(&mat) <= tol;
        let is_unital = (1..n).all(|i| mat[(i, 0)].abs() <= tol);
        Ok(Self {
            dim,
            mat,
            is_tp,
            is_unital,
        })
    }

    /// Qubit PTM from row-major entries.
    pub fn from_rows(rows: &[[f64; 4]; 4]) -> Self {
        let flat: Vec<T> = rows.iter().flatten().map(|&x| T::lit(x)).collect();
        Self::from_matrix(2, DMatrix::from_row_slice(4, 4, &flat)).expect("4x4 qubit PTM")
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_matrix(dim, DMatrix::identity(dim * dim, dim * dim))
    }

    pub fn qubit_identity() -> Self {
        Self::identity(2).expect("qubit identity")
    }

    /// Assembles a TP map from its translation and unital block.
    pub fn from_unital_parts(t: &DVector<T>, eu: &DMatrix<T>) -> Result<Self> {
        let d_u = eu.nrows();
        if eu.ncols() != d_u || t.len() != d_u {
            return Err(Error::DimensionMismatch {
                expected: d_u,
                found: t.len(),
            });
        }
        let n = d_u + 1;
        let mut mat = DMatrix::zeros(n, n);
        mat[(0, 0)] = T::one();
        mat.view_mut((1, 0), (d_u, 1)).copy_from(t);
        mat.view_mut((1, 1), (d_u, d_u)).copy_from(eu);
        Self::from_matrix(dim_from_superop_size(n)?, mat)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.mat
    }

    pub fn is_tp(&self) -> bool {
        self.is_tp
    }

    pub fn is_unital(&self) -> bool {
        self.is_unital
    }

    /// `self . other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Self::from_matrix(self.dim, &self.mat * &other.mat)
    }

    /// Hilbert-Schmidt adjoint, the transpose of the real PTM.
    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            mat: self.mat.transpose(),
            // adjoint of a TP map is unital and vice versa
            is_tp: self.is_unital,
            is_unital: self.is_tp,
        }
    }

    /// Lower-right `D x D` block, without checking trace preservation.
    pub fn unital_block(&self) -> DMatrix<T> {
        let d_u = self.mat.nrows() - 1;
        self.mat.view((1, 1), (d_u, d_u)).into_owned()
    }

    pub fn translation(&self) -> DVector<T> {
        let d_u = self.mat.nrows() - 1;
        self.mat.view((1, 0), (d_u, 1)).column(0).into_owned()
    }

    pub fn unital_decomp(&self) -> Result<UnitalDecomp<T>> {
        let dev = tp_deviation(&self.mat);
        if dev > T::tol(1e-12) {
            return Err(Error::NotTracePreserving(dev.to_f64_lossy()));
        }
        Ok(UnitalDecomp {
            t: self.translation(),
            eu: self.unital_block(),
        })
    }

    pub fn vectorize(&self) -> VecForm<T> {
        VecForm::from_matrix(&self.mat, Sector::Full)
    }

    /// Action on an operator.
    pub fn apply(&self, op: &CMatrix<T>) -> CMatrix<T> {
        let basis = OperatorBasis::<T>::pauli(self.dim).expect("validated dimension");
        let coeffs = basis.coefficients(op);
        let out: Vec<Complex<T>> = (0..coeffs.len())
            .map(|a| {
                coeffs
                    .iter()
                    .enumerate()
                    .fold(Complex::from(T::zero()), |acc, (b, &k)| {
                        acc + k * self.mat[(a, b)]
                    })
            })
            .collect();
        basis.operator(&out)
    }

    /// Choi matrix `J = sum_ij |i><j| (x) E(|i><j|)`, Hermitian iff `E` is
    /// Hermiticity preserving.
    pub fn choi_matrix(&self) -> CMatrix<T> {
        let d = self.dim;
        let mut j = CMatrix::zeros(d * d, d * d);
        for r in 0..d {
            for s in 0..d {
                let mut unit = CMatrix::zeros(d, d);
                unit[(r, s)] = Complex::from(T::one());
                let image = self.apply(&unit);
                j.view_mut((r * d, s * d), (d, d)).copy_from(&image);
            }
        }
        j
    }

    /// Smallest eigenvalue of the (Hermitian part of the) Choi matrix.
    pub fn choi_min_eigenvalue(&self) -> T {
        let j = self.choi_matrix();
        let herm = (&j + j.adjoint()) * Complex::from(T::lit(0.5));
        let eig = SymmetricEigen::new(herm);
        eig.eigenvalues.iter().copied().fold(T::max_value().unwrap(), T::min)
    }

    /// Complete positivity and trace preservation at tolerance `tol`.
    pub fn is_cptp(&self, tol: T) -> bool {
        tp_deviation(&self.mat) <= tol && self.choi_min_eigenvalue() >= -tol
    }
}

fn tp_deviation<T: Real>(mat: &DMatrix<T>) -> T {
    let mut dev = (mat[(0, 0)] - T::one()).abs();
    for j in 1..mat.ncols() {
        dev = dev.max(mat[(0, j)].abs());
    }
    dev
}

fn dim_from_superop_size(n: usize) -> Result<usize> {
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: n,
        });
    }
    Ok(d)
}

/// PTM of the channel `rho -> sum_i K_i rho K_i^dag`.
pub fn ptm_from_kraus<T: Real>(kraus: &[CMatrix<T>]) -> Result<Superop<T>> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::NotCptp("empty Kraus list".into()))?;
    let d = first.nrows();
    let basis = OperatorBasis::<T>::pauli(d)?;
    let mut completeness = CMatrix::<T>::zeros(d, d);
    for k in kraus {
        if k.nrows() != d || k.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: k.nrows().max(k.ncols()),
            });
        }
        completeness += k.adjoint() * k;
    }
    let dev = (completeness - CMatrix::identity(d, d))
        .iter()
        .fold(T::zero(), |m, z| m.max(z.norm_sqr().sqrt()));
    if dev > T::tol(1e-10) {
        return Err(Error::NotTracePreserving(dev.to_f64_lossy()));
    }
    let n = d * d;
    let els = basis.elements();
    let mut mat = DMatrix::zeros(n, n);
    for b in 0..n {
        let mut image = CMatrix::<T>::zeros(d, d);
        for k in kraus {
            image += k * &els[b] * k.adjoint();
        }
        for a in 0..n {
            mat[(a, b)] = (&els[a] * &image).trace().re;
        }
    }
    let mut e = Superop::from_matrix(d, mat)?;
    e.is_tp = true;
    Ok(e)
}

/// Translation and unital block of a TP map.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitalDecomp<T: Real> {
    pub t: DVector<T>,
    pub eu: DMatrix<T>,
}

impl<T: Real> UnitalDecomp<T> {
    pub fn reassemble(&self) -> Result<Superop<T>> {
        Superop::from_unital_parts(&self.t, &self.eu)
    }

    pub fn vectorize(&self) -> VecForm<T> {
        VecForm::from_matrix(&self.eu, Sector::Unital)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// Whole superoperator, length `d^4`.
    Full,
    /// Unital block only, length `D^2`.
    Unital,
}

/// Column-stacked vector form of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VecForm<T: Real> {
    pub v: DVector<T>,
    pub sector: Sector,
    side: usize,
}

impl<T: Real> VecForm<T> {
    pub fn from_matrix(m: &DMatrix<T>, sector: Sector) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "vectorization expects a square matrix");
        // nalgebra storage is column-major, so the raw slice is already column-stacked
        Self {
            v: DVector::from_column_slice(m.as_slice()),
            sector,
            side: m.nrows(),
        }
    }

    pub fn unvec(&self) -> DMatrix<T> {
        DMatrix::from_column_slice(self.side, self.side, self.v.as_slice())
    }

    /// Embeds a unital-sector vector into the full `d^4` space, padding the
    /// components outside the unital block with zeros.
    pub fn embed_full(&self) -> DVector<T> {
        match self.sector {
            Sector::Full => self.v.clone(),
            Sector::Unital => {
                let du = self.side;
                let n = du + 1;
                let mut m = DMatrix::zeros(n, n);
                m.view_mut((1, 1), (du, du)).copy_from(&self.unvec());
                DVector::from_column_slice(m.as_slice())
            }
        }
    }
}

/// Column-stacking `vec` of any square matrix.
pub fn vec<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec<T: Real>(v: &DVector<T>) -> DMatrix<T> {
    let n = (v.len() as f64).sqrt().round() as usize;
    assert_eq!(n * n, v.len(), "unvec needs a perfect-square length");
    DMatrix::from_column_slice(n, n, v.as_slice())
}

/// `B_0`: projector onto the identity component.
pub fn b0<T: Real>(d: usize) -> DMatrix<T> {
    let n = d * d;
    let mut m = DMatrix::zeros(n, n);
    m[(0, 0)] = T::one();
    m
}

/// `B_1`: the unital-sector identity scaled by `1/sqrt(D)`.
pub fn b1<T: Real>(d: usize) -> DMatrix<T> {
    let n = d * d;
    let du = n - 1;
    let s = T::one() / T::lit(du as f64).sqrt();
    let mut m = DMatrix::zeros(n, n);
    for i in 1..n {
        m[(i, i)] = s;
    }
    m
}

/// `|0) = vec(B_0)`.
pub fn ket_zero<T: Real>(d: usize) -> DVector<T> {
    vec(&b0::<T>(d))
}

/// `|1) = vec(B_1)`.
pub fn ket_one<T: Real>(d: usize) -> DVector<T> {
    vec(&b1::<T>(d))
}

/// `|1)` restricted to the unital sector, `vec(1_u)/sqrt(D)` of length `D^2`.
pub fn ket_one_unital<T: Real>(du: usize) -> DVector<T> {
    let s = T::one() / T::lit(du as f64).sqrt();
    vec(&DMatrix::<T>::identity(du, du)) * s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax()
    }

    fn cm(rows: &[[(f64, f64); 2]; 2]) -> CMatrix<f64> {
        CMatrix::from_fn(2, 2, |i, j| Complex::new(rows[i][j].0, rows[i][j].1))
    }

    /// Brute-force oracle: conjugate each basis element by every Kraus
    /// operator and read back the coefficients by explicit traces.
    fn oracle_ptm(kraus: &[CMatrix<f64>]) -> DMatrix<f64> {
        let p = pauli_matrices::<f64>();
        let mut m = DMatrix::zeros(4, 4);
        for a in 0..4 {
            for b in 0..4 {
                let mut s = 0.0;
                for k in kraus {
                    let img = k * &p[b] * k.adjoint();
                    s += (&p[a] * img).trace().re / 2.0;
                }
                m[(a, b)] = s;
            }
        }
        m
    }

    fn pauli_kraus(l: [f64; 3]) -> Vec<CMatrix<f64>> {
        let p = pauli_matrices::<f64>();
        let l0 = 1.0 - l.iter().sum::<f64>();
        vec![
            &p[0] * Complex::from(l0.sqrt()),
            &p[1] * Complex::from(l[0].sqrt()),
            &p[2] * Complex::from(l[1].sqrt()),
            &p[3] * Complex::from(l[2].sqrt()),
        ]
    }

    #[test]
    fn basis_is_orthonormal_and_hermitian() {
        let b = OperatorBasis::<f64>::qubit();
        assert!(b.orthonormality_error() < 1e-14);
        for o in b.elements() {
            assert!((o - o.adjoint()).iter().all(|z| z.norm() < 1e-15));
        }
        let expected = CMatrix::identity(2, 2) * Complex::from(1.0 / 2f64.sqrt());
        assert!((&b.elements()[0] - expected).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn rejects_unsupported_dimension() {
        assert_eq!(
            OperatorBasis::<f64>::pauli(3).unwrap_err(),
            Error::UnsupportedDimension(3)
        );
        assert!(matches!(
            Superop::<f64>::identity(4),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn identity_kraus_gives_identity_ptm() {
        let e = ptm_from_kraus(&[CMatrix::<f64>::identity(2, 2)]).unwrap();
        assert!(max_abs(e.matrix(), &DMatrix::identity(4, 4)) < 1e-15);
        assert!(e.is_tp() && e.is_unital());
    }

    #[test]
    fn pauli_x_conjugation_signs() {
        let x = cm(&[[(0., 0.), (1., 0.)], [(1., 0.), (0., 0.)]]);
        let e = ptm_from_kraus(&[x]).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1., 1., -1., -1.]));
        assert!(max_abs(e.matrix(), &expected) < 1e-15);
    }

    #[test]
    fn depolarizing_kraus_matches_oracle() {
        let k = pauli_kraus([0.1, 0.1, 0.1]);
        let e = ptm_from_kraus(&k).unwrap();
        let oracle = oracle_ptm(&k);
        assert!(max_abs(e.matrix(), &oracle) < 1e-14);
        let eu = e.unital_block();
        assert!(max_abs(&eu, &(DMatrix::identity(3, 3) * 0.6)) < 1e-14);
    }

    #[test]
    fn kraus_completeness_is_checked() {
        let half = CMatrix::<f64>::identity(2, 2) * Complex::from(0.5);
        assert!(matches!(
            ptm_from_kraus(&[half]),
            Err(Error::NotTracePreserving(_))
        ));
        assert!(matches!(
            ptm_from_kraus::<f64>(&[]),
            Err(Error::NotCptp(_))
        ));
    }

    #[test]
    fn amplitude_damping_unital_decomp() {
        let g: f64 = 0.3;
        let k0 = cm(&[[(1., 0.), (0., 0.)], [(0., 0.), ((1. - g).sqrt(), 0.)]]);
        let k1 = cm(&[[(0., 0.), (g.sqrt(), 0.)], [(0., 0.), (0., 0.)]]);
        let e = ptm_from_kraus(&[k0.clone(), k1.clone()]).unwrap();
        assert!(max_abs(e.matrix(), &oracle_ptm(&[k0, k1])) < 1e-14);
        let ud = e.unital_decomp().unwrap();
        assert!((ud.t[0]).abs() < 1e-15 && ud.t[1].abs() < 1e-15);
        assert!((ud.t[2] - g).abs() < 1e-14);
        let s = (1. - g).sqrt();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![s, s, 1. - g]));
        assert!(max_abs(&ud.eu, &expected) < 1e-14);
        assert!(max_abs(ud.reassemble().unwrap().matrix(), e.matrix()) < 1e-15);
        assert!(!e.is_unital());
    }

    #[test]
    fn unital_decomp_rejects_non_tp() {
        let e = Superop::<f64>::from_rows(&[
            [0.9, 0., 0., 0.],
            [0., 1., 0., 0.],
            [0., 0., 1., 0.],
            [0., 0., 0., 1.],
        ]);
        assert!(!e.is_tp());
        assert!(matches!(e.unital_decomp(), Err(Error::NotTracePreserving(_))));
    }

    #[test]
    fn vec_of_b1_is_ket_one() {
        let one = ket_one::<f64>(2);
        let s = 1.0 / 3f64.sqrt();
        for (i, &x) in one.iter().enumerate() {
            let on_diag = [5, 10, 15].contains(&i);
            assert_eq!(x, if on_diag { s } else { 0.0 });
        }
        let v = VecForm::from_matrix(&b1::<f64>(2), Sector::Full);
        assert_eq!(v.v, one);
    }

    #[test]
    fn unital_embedding_pads_with_zeros() {
        let eu = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        let ud = UnitalDecomp {
            t: DVector::zeros(3),
            eu: eu.clone(),
        };
        let full = ud.vectorize().embed_full();
        let m = unvec(&full);
        assert_eq!(m.view((1, 1), (3, 3)).into_owned(), eu);
        assert_eq!(m.row(0).sum() + m.column(0).sum(), 0.0);
    }

    #[test]
    fn choi_checks() {
        assert!(Superop::<f64>::qubit_identity().is_cptp(1e-10));
        let not_cp = Superop::<f64>::from_rows(&[
            [1., 0., 0., 0.],
            [0., 1.5, 0., 0.],
            [0., 0., 1., 0.],
            [0., 0., 0., 1.],
        ]);
        assert!(!not_cp.is_cptp(1e-10));
        let e = ptm_from_kraus(&pauli_kraus([0.2, 0.2, 0.2])).unwrap();
        assert!(e.is_cptp(1e-10));
        // Choi spectrum of a Pauli channel is 2 * (1 - sum l, l_x, l_y, l_z)
        let j = e.choi_matrix();
        let mut ev: Vec<f64> = SymmetricEigen::new(j).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want = vec![0.4, 0.4, 0.4, 0.8];
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn adjoint_is_involutive_and_compose_checks_dims() {
        let e = ptm_from_kraus(&pauli_kraus([0.05, 0.1, 0.02])).unwrap();
        assert_eq!(e.adjoint().adjoint(), e);
        let id = Superop::qubit_identity();
        assert_eq!(e.compose(&id).unwrap().matrix(), e.matrix());
    }

    #[test]
    fn single_precision_instantiation() {
        let b = OperatorBasis::<f32>::qubit();
        assert!(b.orthonormality_error() < 1e-6);
        let e = ptm_from_kraus(&[CMatrix::<f32>::identity(2, 2)]).unwrap();
        assert!(e.is_cptp(f32::tol(1e-10)));
    }
}
