//! Unitarily related gate sets share `p` but not `q`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{build_m, decay_rate, q_from_m};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::superop::Superop;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GaugeComparison<T: Real> {
    pub p: T,
    pub p_prime: T,
    pub q: T,
    pub q_prime: T,
}

impl<T: Real> GaugeComparison<T> {
    pub fn p_shift(&self) -> T {
        (self.p - self.p_prime).abs()
    }

    pub fn q_shift(&self) -> T {
        (self.q - self.q_prime).abs()
    }
}

/// Compares the gate set `noisy` with `U noisy_k U^T` for a unitary channel `U`.
pub fn same_p_different_q<T: Real>(
    ideal: &[Superop<T>],
    noisy: &[Superop<T>],
    u: &Superop<T>,
) -> Result<GaugeComparison<T>> {
    let n = u.matrix().nrows();
    let dev = (u.matrix().transpose() * u.matrix() - DMatrix::identity(n, n))
        .amax()
        .max(u.translation().amax());
    if dev > T::tol(1e-9) {
        return Err(Error::NotUnitary(dev.to_f64_lossy()));
    }
    let ut = u.adjoint();
    let moved = noisy
        .iter()
        .map(|g| u.compose(g)?.compose(&ut))
        .collect::<Result<Vec<_>>>()?;
    let m = build_m(ideal, noisy)?;
    let m2 = build_m(ideal, &moved)?;
    Ok(GaugeComparison {
        p: decay_rate(&m)?.p,
        p_prime: decay_rate(&m2)?.p,
        q: q_from_m(&m),
        q_prime: q_from_m(&m2),
    })
}
