//! End-to-end simulation of the benchmarking protocol: random sequences with
//! an inverting gate, survival probabilities and an exponential fit.

mod fit;

pub use fit::{fit_exponential, fit_exponential_fixed_offset, seed as fit_seed, ExpFit};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{decay_rate, MOperator};
use crate::clifford::CliffordGroup;
use crate::error::{Error, Result};
use crate::superop::{ket_one, Superop};

/// Largest number of sequences enumerated instead of sampled in exact mode.
pub const ENUMERATION_LIMIT: usize = 14_000;
pub const DEFAULT_SEQUENCES: usize = 100;

/// Roughly geometric grid from 1 to 100.
pub fn default_lengths() -> Vec<usize> {
    let mut out: Vec<usize> = (0..12)
        .map(|i| 10f64.powf(2.0 * i as f64 / 11.0).round() as usize)
        .collect();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ExactTag {
    Exact,
}

/// Measurement repetitions per sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Shots {
    /// Exact survival probabilities.
    #[serde(with = "exact_repr")]
    Exact,
    Count(u64),
}

mod exact_repr {
    use super::ExactTag;
    use serde::{Deserialize, Deserializer, Serializer, Serialize};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        ExactTag::Exact.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        ExactTag::deserialize(d).map(|_| ())
    }
}

impl Default for Shots {
    fn default() -> Self {
        Shots::Exact
    }
}

/// Whether the inverting first gate carries noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RbMode {
    #[default]
    Experiment,
    /// First gate noiseless.
    Theory,
}

fn default_psi0() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbConfig {
    /// Sequence lengths `m` (number of random gates); the default grid when absent.
    #[serde(default)]
    pub lengths: Option<Vec<usize>>,
    #[serde(default)]
    pub sequences_per_length: Option<usize>,
    #[serde(default)]
    pub shots: Shots,
    /// Bloch vector of the pure fiducial state.
    #[serde(default = "default_psi0")]
    pub psi0: [f64; 3],
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: RbMode,
    /// Inverse-variance weighting in the fit.
    #[serde(default)]
    pub weighted: bool,
}

impl Default for RbConfig {
    fn default() -> Self {
        Self {
            lengths: None,
            sequences_per_length: None,
            shots: Shots::Exact,
            psi0: default_psi0(),
            seed: 0,
            mode: RbMode::Experiment,
            weighted: false,
        }
    }
}

impl RbConfig {
    pub fn lengths(&self) -> Vec<usize> {
        self.lengths.clone().unwrap_or_else(default_lengths)
    }

    pub fn sequences(&self) -> usize {
        self.sequences_per_length.unwrap_or(DEFAULT_SEQUENCES)
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = self.lengths();
        if lengths.is_empty() || lengths[0] < 1 || lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "lengths must be nonempty, at least 1 and strictly increasing".into(),
            ));
        }
        if self.sequences() < 1 {
            return Err(Error::InvalidConfig("sequences_per_length must be at least 1".into()));
        }
        if matches!(self.shots, Shots::Count(0)) {
            return Err(Error::InvalidConfig("shots must be positive".into()));
        }
        let n: f64 = self.psi0.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("psi0 must be a unit Bloch vector, |psi0| = {n}")));
        }
        Ok(())
    }
}

/// `m + 1` gate indices in time order; the first inverts the other `m`.
pub fn sample_sequence<T: crate::Real, R: Rng + ?Sized>(
    group: &CliffordGroup<T>,
    m: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut seq = vec![0; m + 1];
    for s in seq.iter_mut().skip(1) {
        *s = rng.random_range(0..group.len());
    }
    seq[0] = group.inverse(group.compose_sequence(&seq[1..]));
    seq
}

/// Sequence with the given random part, completed by its inverting gate.
pub fn complete_sequence<T: crate::Real>(group: &CliffordGroup<T>, random: &[usize]) -> Vec<usize> {
    let mut seq = Vec::with_capacity(random.len() + 1);
    seq.push(group.inverse(group.compose_sequence(random)));
    seq.extend_from_slice(random);
    seq
}

fn state_vector(bloch: &[f64; 3]) -> DVector<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![s, s * bloch[0], s * bloch[1], s * bloch[2]])
}

/// Overlap of the sequence output with the fiducial state.
pub fn survival(
    seq: &[usize],
    ideal: &[Superop<f64>],
    noisy: &[Superop<f64>],
    psi0: &[f64; 3],
    mode: RbMode,
) -> f64 {
    let rho = state_vector(psi0);
    let mut v = rho.clone();
    for (i, &g) in seq.iter().enumerate() {
        let gate = if i == 0 && mode == RbMode::Theory { &ideal[g] } else { &noisy[g] };
        v = gate.matrix() * v;
    }
    rho.dot(&v).clamp(0.0, 1.0)
}

/// `(psi0 (x) psi0 | M^m | vec(1))`, the theory-mode mean survival.
pub fn predicted_survival(m_op: &MOperator<f64>, psi0: &[f64; 3], m: usize) -> f64 {
    let rho = state_vector(psi0);
    let bra = rho.kronecker(&rho);
    let d = m_op.d;
    let one = ket_one::<f64>(d);
    let zero = crate::superop::ket_zero::<f64>(d);
    let du = (d * d - 1) as f64;
    // vec of the identity superoperator
    let mut v = zero + one * du.sqrt();
    for _ in 0..m {
        v = &m_op.full * v;
    }
    bra.dot(&v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStat {
    pub m: usize,
    pub mean: f64,
    pub stderr: f64,
    pub sequences: usize,
    pub enumerated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbRun {
    pub per_length: Vec<LengthStat>,
    pub fit: ExpFit,
    pub fit_diverged: bool,
    pub config: RbConfig,
    pub metadata: Vec<String>,
}

impl RbRun {
    pub fn p(&self) -> f64 {
        self.fit.p
    }
}

fn length_stream(length_index: usize, seq_index: usize) -> u64 {
    ((length_index as u64) << 32) | seq_index as u64
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Every random part of length `m`, in lexicographic order.
fn all_sequences(m: usize, base: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = base.pow(m as u32);
    (0..total).map(move |mut idx| {
        let mut s = vec![0; m];
        for slot in s.iter_mut().rev() {
            *slot = idx % base;
            idx /= base;
        }
        s
    })
}

/// Runs the protocol for `noisy` (indexed like `group`).
pub fn run_rb(group: &CliffordGroup<f64>, noisy: &[Superop<f64>], config: &RbConfig) -> Result<RbRun> {
    config.validate()?;
    if noisy.len() != group.len() {
        return Err(Error::LengthMismatch {
            left: group.len(),
            right: noisy.len(),
        });
    }
    let ideal = group.gates();
    let lengths = config.lengths();
    let k = config.sequences();
    let mut metadata = Vec::new();
    if config.lengths.is_none() {
        metadata.push(format!("lengths: default grid {lengths:?}"));
    }
    if config.sequences_per_length.is_none() {
        metadata.push(format!("sequences_per_length: default {DEFAULT_SEQUENCES}"));
    }

    let mut per_length = Vec::with_capacity(lengths.len());
    for (li, &m) in lengths.iter().enumerate() {
        let enumerate = config.shots == Shots::Exact
            && group.len().checked_pow(m as u32).is_some_and(|n| n <= ENUMERATION_LIMIT);
        let stat = if enumerate {
            let values: Vec<f64> = all_sequences(m, group.len())
                .collect::<Vec<_>>()
                .par_iter()
                .map(|r| survival(&complete_sequence(group, r), ideal, noisy, &config.psi0, config.mode))
                .collect();
            LengthStat {
                m,
                mean: values.iter().sum::<f64>() / values.len() as f64,
                stderr: 0.0,
                sequences: values.len(),
                enumerated: true,
            }
        } else {
            let values: Vec<f64> = (0..k)
                .into_par_iter()
                .map(|s| {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(length_stream(li, s));
                    let seq = sample_sequence(group, m, &mut rng);
                    let f = survival(&seq, ideal, noisy, &config.psi0, config.mode);
                    match config.shots {
                        Shots::Exact => f,
                        Shots::Count(n) => {
                            let b = Binomial::new(n, f).expect("probability in [0, 1]");
                            b.sample(&mut rng) as f64 / n as f64
                        }
                    }
                })
                .collect();
            let (mean, stderr) = mean_stderr(&values);
            LengthStat {
                m,
                mean,
                stderr,
                sequences: k,
                enumerated: false,
            }
        };
        per_length.push(stat);
    }

    let ms: Vec<f64> = per_length.iter().map(|s| s.m as f64).collect();
    let ys: Vec<f64> = per_length.iter().map(|s| s.mean).collect();
    let weights: Option<Vec<f64>> = if config.weighted {
        if per_length.iter().all(|s| s.stderr > 0.0) {
            Some(per_length.iter().map(|s| 1.0 / s.stderr).collect())
        } else {
            metadata.push("weighted fit requested but some lengths have zero spread; fit unweighted".into());
            None
        }
    } else {
        None
    };
    let fit = fit_exponential(&ms, &ys, weights.as_deref());
    let fit_diverged = !(fit.residual_rms <= 0.1) || !fit.p.is_finite();
    if fit_diverged {
        metadata.push(format!("fit diverged: residual rms {}", fit.residual_rms));
    }
    Ok(RbRun {
        per_length,
        fit,
        fit_diverged,
        config: config.clone(),
        metadata,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumValidation {
    pub fitted_p: f64,
    pub fitted_sigma: f64,
    pub spectral_p: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Fitted `p` against the dominant eigenvalue, within `max(3 sigma, 1e-3)`.
pub fn validate_against_spectrum(run: &RbRun, m: &MOperator<f64>) -> Result<SpectrumValidation> {
    let spectral_p = decay_rate(m)?.p;
    let fitted_sigma = run.fit.sigma_p();
    let tolerance = (3.0 * fitted_sigma).max(1e-3);
    Ok(SpectrumValidation {
        fitted_p: run.fit.p,
        fitted_sigma,
        spectral_p,
        tolerance,
        passed: (run.fit.p - spectral_p).abs() < tolerance,
    })
}

/// Theory-mode means over all `24^m` sequences, as an exact matrix check.
pub fn enumerated_means(
    group: &CliffordGroup<f64>,
    noisy: &[Superop<f64>],
    psi0: &[f64; 3],
    max_m: usize,
) -> Vec<f64> {
    (1..=max_m)
        .map(|m| {
            let seqs: Vec<Vec<usize>> = all_sequences(m, group.len()).collect();
            let sum: f64 = seqs
                .par_iter()
                .map(|r| survival(&complete_sequence(group, r), group.gates(), noisy, psi0, RbMode::Theory))
                .collect::<Vec<_>>()
                .iter()
                .sum();
            sum / seqs.len() as f64
        })
        .collect()
}

/// Per-length data as a `DMatrix` with columns `(m, mean, stderr)`.
pub fn per_length_table(run: &RbRun) -> DMatrix<f64> {
    DMatrix::from_fn(run.per_length.len(), 3, |i, j| {
        let s = &run.per_length[i];
        [s.m as f64, s.mean, s.stderr][j]
    })
}
