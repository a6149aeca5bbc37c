//! Spectral analysis of the sequence-averaged operator `M = <G (x) G~>`.

mod gauge;
mod geometry;
mod series;

pub use gauge::{same_p_different_q, GaugeComparison};
pub use geometry::{fig1_sweep, infidelity_bound, lgr_geometry, Fig1Row, InfidelityBound};
pub use series::{
    fd_m_coefficients, fd_taylor_coefficients, perturb_series, perturb_series_fd, stencil_weights, taylor_coefficients,
    MatSeries, PerturbSeries, MAX_ORDER,
};

use nalgebra::{Complex, DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{infidelity, rb_number};
use crate::scalar::Real;
use crate::superop::{ket_one_unital, Superop};

/// `M` on the full space and on the unital sector, with the noisy-gate
/// averages that enter its block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct MOperator<T: Real> {
    pub full: DMatrix<T>,
    pub unital: DMatrix<T>,
    pub avg_translation: DVector<T>,
    pub avg_unital: DMatrix<T>,
    pub d: usize,
}

pub fn build_m<T: Real>(ideal: &[Superop<T>], noisy: &[Superop<T>]) -> Result<MOperator<T>> {
    if ideal.len() != noisy.len() || ideal.is_empty() {
        return Err(Error::LengthMismatch {
            left: ideal.len(),
            right: noisy.len(),
        });
    }
    let d = ideal[0].dim();
    let n = ideal[0].matrix().nrows();
    let du = n - 1;
    let mut full = DMatrix::zeros(n * n, n * n);
    let mut unital = DMatrix::zeros(du * du, du * du);
    let mut avg_translation = DVector::zeros(du);
    let mut avg_unital = DMatrix::zeros(du, du);
    for (g, h) in ideal.iter().zip(noisy) {
        if !h.is_tp() || !g.is_tp() {
            return Err(Error::NotTracePreserving(
                h.matrix().row(0).iter().skip(1).fold(0.0, |m, x| m.max(x.to_f64_lossy().abs())),
            ));
        }
        full += g.matrix().kronecker(h.matrix());
        let hu = h.unital_block();
        unital += g.unital_block().kronecker(&hu);
        avg_translation += h.translation();
        avg_unital += hu;
    }
    let k = T::from_usize(ideal.len()).unwrap();
    Ok(MOperator {
        full: full / k,
        unital: unital / k,
        avg_translation: avg_translation / k,
        avg_unital: avg_unital / k,
        d,
    })
}

/// `|0)(0| + |1)(1|` on the full space.
pub fn m_ideal<T: Real>(d: usize) -> DMatrix<T> {
    let n = d * d;
    let zero = crate::superop::ket_zero::<T>(d);
    let one = crate::superop::ket_one::<T>(d);
    debug_assert_eq!(zero.len(), n * n);
    &zero * zero.transpose() + &one * one.transpose()
}

/// Eigenvalues with magnitude-descending order.
pub fn eigenvalues<T: Real>(m: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    let schur = Schur::try_new(m.clone(), T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::EigSolverFailure(format!("Schur iteration on {}x{}", m.nrows(), m.ncols())))?;
    let (_, t) = schur.unpack();
    let mut ev = quasi_triangular_eigenvalues(&t);
    ev.sort_by(|a, b| b.norm_sqr().partial_cmp(&a.norm_sqr()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(ev)
}

// Reads eigenvalues off the 1x1 and 2x2 diagonal blocks of a real Schur form.
fn quasi_triangular_eigenvalues<T: Real>(t: &DMatrix<T>) -> Vec<Complex<T>> {
    let n = t.nrows();
    let half = T::lit(0.5);
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != T::zero() {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let mid = half * (a + d);
            let h = half * (a - d);
            let disc = h * h + b * c;
            if disc >= T::zero() {
                let s = disc.sqrt();
                out.push(Complex::new(mid + s, T::zero()));
                out.push(Complex::new(mid - s, T::zero()));
            } else {
                let s = (-disc).sqrt();
                out.push(Complex::new(mid, s));
                out.push(Complex::new(mid, -s));
            }
            i += 2;
        } else {
            out.push(Complex::new(t[(i, i)], T::zero()));
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRate<T: Real> {
    pub p: T,
    /// Unital-sector spectrum, largest magnitude first.
    pub eigenvalues: Vec<Complex<T>>,
    /// `|p_2| / |p_1|`.
    pub gap: T,
    /// Eigenvalues within 1e-10 of the dominant one, itself included.
    pub cluster_size: usize,
    pub flags: Vec<String>,
}

pub fn decay_rate<T: Real>(m: &MOperator<T>) -> Result<DecayRate<T>> {
    let ev = eigenvalues(&m.unital)?;
    let top = ev[0];
    let p = top.re;
    let top_abs = top.norm_sqr().sqrt();
    let gap = if ev.len() > 1 && top_abs > T::zero() {
        ev[1].norm_sqr().sqrt() / top_abs
    } else {
        T::zero()
    };
    let cluster_size = ev
        .iter()
        .filter(|z| (**z - top).norm_sqr().sqrt() < T::tol(1e-10))
        .count();
    let mut flags = Vec::new();
    if top.im.abs() > T::tol(1e-9) {
        flags.push(format!("dominant eigenvalue has imaginary part {}", top.im));
    }
    if gap > T::lit(0.5) {
        flags.push(format!("spectral gap ratio {gap} exceeds 0.5"));
    }
    if cluster_size > 1 {
        flags.push(format!("dominant eigenvalue is a cluster of {cluster_size}"));
    }
    Ok(DecayRate {
        p,
        eigenvalues: ev,
        gap,
        cluster_size,
        flags,
    })
}

/// `q = (1|M_u|1)`.
pub fn q_from_m<T: Real>(m: &MOperator<T>) -> T {
    let one = ket_one_unital::<T>(m.avg_unital.nrows());
    (one.transpose() * &m.unital * &one)[(0, 0)]
}

fn null_vector<T: Real>(a: DMatrix<T>) -> Result<DVector<T>> {
    let svd = a.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::EigSolverFailure("SVD without right vectors".into()))?;
    let (i, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, T::max_value().unwrap()), |best, (i, &s)| if s < best.1 { (i, s) } else { best });
    Ok(vt.row(i).transpose())
}

/// Right and left eigenvectors of the dominant (real) eigenvalue of `M_u`,
/// scaled so that `(left|right) = 1` and `right` has unit norm.
pub fn dominant_eigenvectors<T: Real>(m: &MOperator<T>) -> Result<(DVector<T>, DVector<T>)> {
    let p = decay_rate(m)?.p;
    let n = m.unital.nrows();
    let shifted = &m.unital - DMatrix::identity(n, n) * p;
    let right = null_vector(shifted.clone())?.normalize();
    let left = null_vector(shifted.transpose())?;
    let overlap = left.dot(&right);
    if overlap.abs() < T::tol(1e-12) {
        return Err(Error::EigSolverFailure("dominant eigenvalue is defective".into()));
    }
    Ok((right, left / overlap))
}

/// Headline numbers for one gate set and noise instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpectralReport<T: Real> {
    pub p: T,
    pub q: T,
    pub r: T,
    pub epsilon: T,
    pub alpha: Option<T>,
    pub beta: Option<T>,
    pub x1: Option<T>,
    pub x2: Option<T>,
    /// `(re, im)` pairs, largest magnitude first.
    pub eigenvalues: Vec<[T; 2]>,
    pub gap: T,
    pub epsilon_over_r: Option<T>,
    pub flags: Vec<String>,
}

impl<T: Real> SpectralReport<T> {
    pub(crate) fn from_pq(p: T, q: T, d: usize) -> Self {
        let r = rb_number(p, d);
        let epsilon = infidelity(q, d);
        Self {
            p,
            q,
            r,
            epsilon,
            alpha: None,
            beta: None,
            x1: None,
            x2: None,
            eigenvalues: Vec::new(),
            gap: T::zero(),
            epsilon_over_r: (r.abs() > T::tol(1e-14)).then(|| epsilon / r),
            flags: Vec::new(),
        }
    }
}

pub fn spectral_report<T: Real>(m: &MOperator<T>) -> Result<SpectralReport<T>> {
    let dr = decay_rate(m)?;
    let mut rep = SpectralReport::from_pq(dr.p, q_from_m(m), m.d);
    rep.eigenvalues = dr.eigenvalues.iter().map(|z| [z.re, z.im]).collect();
    rep.gap = dr.gap;
    rep.flags = dr.flags;
    Ok(rep)
}

/// Largest singular value of the unital block of a CPTP map.
pub fn alpha_qubit_check<T: Real>(e: &Superop<T>) -> Result<T> {
    if e.dim() != 2 {
        return Err(Error::UnsupportedDimension(e.dim()));
    }
    if !e.is_cptp(T::tol(1e-10)) {
        return Err(Error::NotCptp("alpha check input".into()));
    }
    Ok(e.unital_block().singular_values().max())
}

/// Structure of the full-space spectrum of `M` for possibly nonunital noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NonunitalSpectrum<T: Real> {
    pub eigenvalues: Vec<[T; 2]>,
    pub has_unit_eigenvalue: bool,
    pub near_zero_count: usize,
    /// Worst distance between the full spectrum and
    /// `{1} + {0}^D + spec(<G~_u>) + spec(M_u)`.
    pub factorization_error: T,
    pub factorization_ok: bool,
    /// `||M - M_ideal||_2`.
    pub k_norm: T,
    /// Largest distance of an eigenvalue from `{0, 1}`.
    pub max_distance_to_ideal: T,
    pub bauer_fike_ok: bool,
}

pub fn nonunital_spectrum<T: Real>(m: &MOperator<T>) -> Result<NonunitalSpectrum<T>> {
    let full = eigenvalues(&m.full)?;
    let du = m.avg_unital.nrows();
    let mut predicted = vec![Complex::new(T::one(), T::zero())];
    predicted.extend(std::iter::repeat_n(Complex::new(T::zero(), T::zero()), du));
    predicted.extend(eigenvalues(&m.avg_unital)?);
    predicted.extend(eigenvalues(&m.unital)?);

    let mut used = vec![false; predicted.len()];
    let mut factorization_error = T::zero();
    for z in &full {
        let (j, dist) = predicted
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (*z - *w).norm_sqr().sqrt()))
            .fold((usize::MAX, T::max_value().unwrap()), |b, c| if c.1 < b.1 { c } else { b });
        if j == usize::MAX {
            factorization_error = T::max_value().unwrap();
            break;
        }
        used[j] = true;
        factorization_error = factorization_error.max(dist);
    }

    let abs = |z: &Complex<T>| z.norm_sqr().sqrt();
    let one = Complex::new(T::one(), T::zero());
    let k_norm = (&m.full - m_ideal::<T>(m.d)).singular_values().max();
    let max_distance_to_ideal = full
        .iter()
        .map(|z| abs(z).min(abs(&(*z - one))))
        .fold(T::zero(), |a, b| a.max(b));
    Ok(NonunitalSpectrum {
        eigenvalues: full.iter().map(|z| [z.re, z.im]).collect(),
        has_unit_eigenvalue: full.iter().any(|z| abs(&(*z - one)) < T::tol(1e-10)),
        near_zero_count: full.iter().filter(|z| abs(z) < T::tol(1e-9)).count(),
        factorization_ok: factorization_error <= T::tol(1e-9),
        factorization_error,
        k_norm,
        max_distance_to_ideal,
        bauer_fike_ok: max_distance_to_ideal <= k_norm + T::tol(1e-12),
    })
}
