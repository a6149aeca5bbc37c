//! Closed-form geometry of gate-independent `L G R` noise.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::SpectralReport;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::superop::{ket_one_unital, vec, Superop};

/// `p`, `q` and `(alpha, beta, x1, x2)` for `G~ = L G R`, straight from the
/// unital blocks of `L` and `R`.
pub fn lgr_geometry<T: Real>(l: &Superop<T>, r: &Superop<T>) -> Result<SpectralReport<T>> {
    if l.dim() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: r.dim(),
        });
    }
    let d = l.dim();
    let lu = l.unital_block();
    let ru = r.unital_block();
    let du = lu.nrows();
    let dut = T::from_usize(du).unwrap();
    let ln = lu.norm();
    let rn = ru.norm();
    let eps = T::tol(1e-12);
    if ln < eps || rn < eps {
        return Err(Error::DegenerateNoise(format!(
            "unital block norms {} and {}",
            ln.to_f64_lossy(),
            rn.to_f64_lossy()
        )));
    }
    let one = ket_one_unital::<T>(du);
    let lhat = vec(&lu) / ln;
    let rhat = vec(&ru.transpose()) / rn;

    let alpha = ln * rn / dut;
    let beta = lhat.dot(&rhat);
    let x1 = lhat.dot(&one);
    let perp: DVector<T> = &rhat - &lhat * beta;
    let perp_norm = perp.norm();
    let x2 = if perp_norm > eps {
        (perp / perp_norm).dot(&one)
    } else {
        T::zero()
    };
    let p = alpha * beta;
    let sin = (T::one() - beta * beta).max(T::zero()).sqrt();
    let q = alpha * x1 * (beta * x1 + sin * x2);

    let mut rep = SpectralReport::from_pq(p, q, d);
    rep.alpha = Some(alpha);
    rep.beta = Some(beta);
    rep.x1 = Some(x1);
    rep.x2 = Some(x2);
    if !l.is_unital() || !r.is_unital() {
        rep.flags.push("nonunital input: only the unital blocks were used".into());
    }
    if beta < T::zero() {
        rep.flags.push(format!("negative overlap beta = {beta}"));
    }
    let q_over_alpha = q / alpha;
    let half = T::lit(0.5);
    if q_over_alpha < -T::tol(1e-10) || q_over_alpha > half * (T::one() + beta) + T::tol(1e-10) {
        rep.flags.push(format!("q/alpha = {q_over_alpha} outside [0, (1+beta)/2]"));
    }
    Ok(rep)
}

/// Lower bounds on the average gate-set infidelity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct InfidelityBound<T: Real> {
    /// `(d-1)/(2d) (1 - alpha) + r/2`.
    pub general: T,
    /// `r/2`, valid for qubits where `alpha <= 1`.
    pub qubit: Option<T>,
}

pub fn infidelity_bound<T: Real>(alpha: T, r: T, d: usize) -> InfidelityBound<T> {
    let dt = T::from_usize(d).unwrap();
    let half = T::lit(0.5);
    let general = (dt - T::one()) / (T::lit(2.0) * dt) * (T::one() - alpha) + half * r;
    InfidelityBound {
        general,
        qubit: (d == 2 && alpha <= T::one()).then(|| half * r),
    }
}

/// One row of the `(beta, q/alpha)` band plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig1Row {
    pub beta: f64,
    pub p_over_alpha: f64,
    pub q_over_alpha_min: f64,
    pub q_over_alpha_max: f64,
    /// Interior point `x1 = x2 = 1/sqrt(2)`.
    pub q_over_alpha_sample: f64,
}

/// Evenly spaced `beta` in `[0, 1]` with the admissible `q/alpha` band.
pub fn fig1_sweep(grid: usize) -> Result<Vec<Fig1Row>> {
    if grid < 2 {
        return Err(Error::OutOfRange {
            name: "grid",
            value: grid as f64,
            lo: 2.0,
            hi: f64::INFINITY,
        });
    }
    Ok((0..grid)
        .map(|i| {
            let beta = i as f64 / (grid - 1) as f64;
            Fig1Row {
                beta,
                p_over_alpha: beta,
                q_over_alpha_min: 0.0,
                q_over_alpha_max: 0.5 * (1.0 + beta),
                q_over_alpha_sample: 0.5 * (beta + (1.0 - beta * beta).sqrt()),
            }
        })
        .collect())
}
