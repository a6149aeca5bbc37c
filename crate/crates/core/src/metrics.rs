//! Fidelity-side quantities: twirls, per-gate and gate-set `q`, average
//! fidelity and infidelity, and a Haar Monte-Carlo check of the fidelity
//! integral.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::superop::Superop;

/// Depolarizing form `diag(t, q, q, q)` of the unitary twirl of `e`, with
/// `t = tr(E(1))/d` and `q = Tr(E_u)/D`.
pub fn twirl_analytic<T: Real>(e: &Superop<T>) -> Superop<T> {
    let m = e.matrix();
    let du = m.nrows() - 1;
    let t = m[(0, 0)];
    let q = unital_trace(m) / T::from_usize(du).unwrap();
    let mut diag = DVector::from_element(du + 1, q);
    diag[0] = t;
    Superop::from_matrix(e.dim(), DMatrix::from_diagonal(&diag)).expect("square diagonal PTM")
}

fn unital_trace<T: Real>(m: &DMatrix<T>) -> T {
    m.trace() - m[(0, 0)]
}

fn check_pair<T: Real>(g: &Superop<T>, noisy: &Superop<T>) -> Result<()> {
    if g.dim() != noisy.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: noisy.dim(),
        });
    }
    Ok(())
}

/// `Tr((G^T G~)_u) / D`, the fidelity parameter of the right residue.
pub fn gate_q<T: Real>(g: &Superop<T>, noisy: &Superop<T>) -> Result<T> {
    check_pair(g, noisy)?;
    let du = g.matrix().nrows() - 1;
    let residue = g.matrix().transpose() * noisy.matrix();
    Ok(unital_trace(&residue) / T::from_usize(du).unwrap())
}

/// Same quantity from the left residue `G~ G^T`.
pub fn gate_q_left<T: Real>(g: &Superop<T>, noisy: &Superop<T>) -> Result<T> {
    check_pair(g, noisy)?;
    let du = g.matrix().nrows() - 1;
    let residue = noisy.matrix() * g.matrix().transpose();
    Ok(unital_trace(&residue) / T::from_usize(du).unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FidelityReport<T: Real> {
    pub q_per_gate: Vec<T>,
    pub q_avg: T,
    #[serde(rename = "F_avg")]
    pub f_avg: T,
    pub epsilon: T,
    pub d: usize,
}

fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |a, &b| a + b) / T::from_usize(xs.len()).unwrap()
}

/// `F = ((d-1) q + 1) / d`.
pub fn average_fidelity<T: Real>(q: T, d: usize) -> T {
    let d = T::from_usize(d).unwrap();
    ((d - T::one()) * q + T::one()) / d
}

/// Average gate-set infidelity `(d-1)(1-q)/d`.
pub fn infidelity<T: Real>(q: T, d: usize) -> T {
    T::one() - average_fidelity(q, d)
}

/// RB number `r = (d-1)(1-p)/d`.
pub fn rb_number<T: Real>(p: T, d: usize) -> T {
    let d = T::from_usize(d).unwrap();
    (d - T::one()) * (T::one() - p) / d
}

fn check_lengths<T: Real>(ideal: &[Superop<T>], noisy: &[Superop<T>]) -> Result<usize> {
    if ideal.len() != noisy.len() || ideal.is_empty() {
        return Err(Error::LengthMismatch {
            left: ideal.len(),
            right: noisy.len(),
        });
    }
    Ok(ideal[0].dim())
}

pub fn gateset_report<T: Real>(ideal: &[Superop<T>], noisy: &[Superop<T>]) -> Result<FidelityReport<T>> {
    let d = check_lengths(ideal, noisy)?;
    let q_per_gate = ideal
        .iter()
        .zip(noisy)
        .map(|(g, n)| gate_q(g, n))
        .collect::<Result<Vec<_>>>()?;
    let q_avg = mean(&q_per_gate);
    let f_avg = average_fidelity(q_avg, d);
    Ok(FidelityReport {
        q_per_gate,
        q_avg,
        f_avg,
        epsilon: T::one() - f_avg,
        d,
    })
}

/// Gate-set `q` computed from left residues.
pub fn gateset_q_left<T: Real>(ideal: &[Superop<T>], noisy: &[Superop<T>]) -> Result<T> {
    check_lengths(ideal, noisy)?;
    let qs = ideal
        .iter()
        .zip(noisy)
        .map(|(g, n)| gate_q_left(g, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&qs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

const HAAR_BLOCK: usize = 2048;

/// Haar-random pure qubit state as a Bloch vector.
pub fn haar_bloch<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n2: f64 = z.iter().map(|x| x * x).sum();
    let (ar, ai, br, bi) = (z[0], z[1], z[2], z[3]);
    // <psi| sigma |psi> for psi = (a, b) / |psi|
    Vector3::new(
        2.0 * (ar * br + ai * bi),
        2.0 * (ar * bi - ai * br),
        ar * ar + ai * ai - br * br - bi * bi,
    ) / n2
}

fn bloch_image(e: &Superop<f64>, a: &Vector3<f64>) -> Vector3<f64> {
    let m = e.matrix();
    Vector3::from_fn(|i, _| m[(i + 1, 0)] + (0..3).map(|j| m[(i + 1, j + 1)] * a[j]).sum::<f64>())
}

/// Monte-Carlo estimate of the Haar average of `tr(G(psi) G~(psi))`.
///
/// Samples are drawn in fixed-size blocks, each from its own ChaCha stream of
/// `seed`, and reduced in block order, so the result depends only on `seed`.
pub fn haar_fidelity_mc(
    g: &Superop<f64>,
    noisy: &Superop<f64>,
    n_samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_pair(g, noisy)?;
    if g.dim() != 2 {
        return Err(Error::UnsupportedDimension(g.dim()));
    }
    if n_samples < 100 {
        return Err(Error::OutOfRange {
            name: "n_samples",
            value: n_samples as f64,
            lo: 100.0,
            hi: f64::INFINITY,
        });
    }
    let blocks = n_samples.div_ceil(HAAR_BLOCK);
    let partial: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = HAAR_BLOCK.min(n_samples - b * HAAR_BLOCK);
            let mut acc = (0.0, 0.0);
            for _ in 0..count {
                let a = haar_bloch(&mut rng);
                let f = 0.5 * (1.0 + bloch_image(g, &a).dot(&bloch_image(noisy, &a)));
                acc.0 += f;
                acc.1 += f * f;
            }
            acc
        })
        .collect();
    let (s, s2) = partial
        .iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = n_samples as f64;
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MonteCarloEstimate {
        mean,
        stderr: (var / n).sqrt(),
        samples: n_samples,
    })
}
