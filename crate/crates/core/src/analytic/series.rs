//! Small-angle expansion of the decay rate for unitary noise parameterized by
//! one angle `theta`.
//!
//! `M_u(theta) = sum_n M_n theta^n` and, with `M_0 = |1)(1|`, the dominant
//! eigenvalue expands as `1 + sum_n p_n theta^n`. The order-`n` formula is
//! only valid when `p_1 .. p_{n-1}` vanish.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::build_m;
use crate::channels::{cross_matrix, noisy_gateset, GateFactor, NoiseModel};
use crate::clifford::CliffordGroup;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::superop::ket_one_unital;

/// Highest order the bracket formulas are written for.
pub const MAX_ORDER: usize = 4;

const VANISH_TOL: f64 = 1e-9;

/// Power series in `theta` with matrix coefficients, truncated at `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatSeries<T: Real> {
    coeffs: Vec<DMatrix<T>>,
}

impl<T: Real> MatSeries<T> {
    pub fn constant(m: DMatrix<T>, order: usize) -> Self {
        let (r, c) = m.shape();
        let mut coeffs = vec![DMatrix::zeros(r, c); order + 1];
        coeffs[0] = m;
        Self { coeffs }
    }

    /// Rotation by `scale * theta` about unit `axis`, embedded in the 4x4 PTM.
    pub fn rotation(axis: &[T; 3], scale: T, order: usize) -> Self {
        let k = cross_matrix(axis);
        let k2 = &k * &k;
        let mut coeffs = Vec::with_capacity(order + 1);
        coeffs.push(DMatrix::identity(4, 4));
        let mut a_pow_over_fact = T::one();
        for n in 1..=order {
            a_pow_over_fact = a_pow_over_fact * scale / T::from_usize(n).unwrap();
            // R = 1 + sin(x) K + (1 - cos(x)) K^2
            let (block, sign) = if n % 2 == 1 {
                (&k, if (n / 2) % 2 == 0 { T::one() } else { -T::one() })
            } else {
                (&k2, if (n / 2) % 2 == 1 { T::one() } else { -T::one() })
            };
            let mut c = DMatrix::zeros(4, 4);
            c.view_mut((1, 1), (3, 3)).copy_from(&(block * (sign * a_pow_over_fact)));
            coeffs.push(c);
        }
        Self { coeffs }
    }

    pub fn from_factor(f: &GateFactor<T>, order: usize) -> Self {
        match f {
            GateFactor::Fixed(m) => Self::constant(m.clone(), order),
            GateFactor::Rotation { axis, scale } => Self::rotation(axis, *scale, order),
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficient(&self, n: usize) -> &DMatrix<T> {
        &self.coeffs[n]
    }

    pub fn coefficients(&self) -> &[DMatrix<T>] {
        &self.coeffs
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let (r, c) = (self.coeffs[0].nrows(), other.coeffs[0].ncols());
        let coeffs = (0..=order)
            .map(|n| {
                (0..=n).fold(DMatrix::zeros(r, c), |acc, i| {
                    acc + &self.coeffs[i] * &other.coeffs[n - i]
                })
            })
            .collect();
        Self { coeffs }
    }

    pub fn evaluate(&self, theta: T) -> DMatrix<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(DMatrix::zeros(self.coeffs[0].nrows(), self.coeffs[0].ncols()), |acc, c| acc * theta + c)
    }
}

/// Exact Taylor coefficients `M_0 .. M_order` of the unital-sector `M(theta)`.
pub fn taylor_coefficients<T: Real>(
    group: &CliffordGroup<T>,
    model: &NoiseModel<T>,
    order: usize,
) -> Result<Vec<DMatrix<T>>> {
    let factors = model.gate_factors(group)?.ok_or_else(|| {
        Error::InvalidConfig("series expansion needs a per-gate unitary or primitive-compiled model".into())
    })?;
    let du = 3;
    let mut out = vec![DMatrix::zeros(du * du, du * du); order + 1];
    for (g, fs) in group.gates().iter().zip(&factors) {
        let series = fs
            .iter()
            .fold(MatSeries::constant(DMatrix::identity(4, 4), order), |acc, f| {
                acc.mul(&MatSeries::from_factor(f, order))
            });
        let gu = g.unital_block();
        for (n, c) in series.coefficients().iter().enumerate() {
            out[n] += gu.kronecker(&c.view((1, 1), (du, du)).into_owned());
        }
    }
    let k = T::from_usize(group.len()).unwrap();
    Ok(out.into_iter().map(|m| m / k).collect())
}

const STENCIL: i32 = 4;
const FD_STEP: f64 = 1e-2;

/// Central-difference weights on offsets `-4..=4` for the `n`-th derivative
/// (unit step).
pub fn stencil_weights(n: usize) -> Result<[f64; 9]> {
    if n > 8 {
        return Err(Error::OutOfRange {
            name: "derivative order",
            value: n as f64,
            lo: 0.0,
            hi: 8.0,
        });
    }
    let a = DMatrix::from_fn(9, 9, |i, j| ((j as i32 - STENCIL) as f64).powi(i as i32));
    let mut b = DVector::zeros(9);
    b[n] = (1..=n).map(|k| k as f64).product();
    let w = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::TaylorIllConditioned("singular stencil system".into()))?;
    Ok(std::array::from_fn(|i| w[i]))
}

/// Leading truncation order of the 9-point stencil for derivative `n`.
fn stencil_accuracy(n: usize) -> i32 {
    if n % 2 == 1 {
        9 - n as i32
    } else {
        10 - n as i32
    }
}

/// Taylor coefficients of `f` at 0 by 9-point central differences at steps
/// `1e-2` and `5e-3`, combined by one Richardson step.
pub fn fd_taylor_coefficients<T, F>(f: F, order: usize) -> Result<Vec<DMatrix<T>>>
where
    T: Real,
    F: Fn(T) -> Result<DMatrix<T>>,
{
    if order > 8 {
        return Err(Error::OutOfRange {
            name: "order",
            value: order as f64,
            lo: 0.0,
            hi: 8.0,
        });
    }
    let f0 = f(T::zero())?;
    let steps = [FD_STEP, FD_STEP / 2.0];
    let samples: Vec<Vec<DMatrix<T>>> = steps
        .iter()
        .map(|&h| {
            (-STENCIL..=STENCIL)
                .map(|j| f(T::lit(j as f64 * h)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let scale = samples
        .iter()
        .flatten()
        .fold(T::zero(), |m, x| m.max(x.amax()))
        .to_f64_lossy()
        .max(1.0);
    let eps = T::default_epsilon().to_f64_lossy();

    let mut out = vec![f0];
    let mut factorial = 1.0;
    for n in 1..=order {
        factorial *= n as f64;
        let w = stencil_weights(n)?;
        let roundoff = eps * w.iter().map(|x| x.abs()).sum::<f64>() * scale / steps[1].powi(n as i32) / factorial;
        if !(roundoff < 1e-3) {
            return Err(Error::TaylorIllConditioned(format!(
                "order {n}: estimated roundoff {roundoff:.1e}"
            )));
        }
        let deriv = |level: usize| -> DMatrix<T> {
            let h = steps[level];
            samples[level]
                .iter()
                .zip(&w)
                .fold(DMatrix::zeros(out[0].nrows(), out[0].ncols()), |acc, (s, &wj)| acc + s * T::lit(wj))
                / T::lit(h.powi(n as i32) * factorial)
        };
        let (coarse, fine) = (deriv(0), deriv(1));
        let r = 2f64.powi(stencil_accuracy(n));
        let c = (fine * T::lit(r) - coarse) / T::lit(r - 1.0);
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::TaylorIllConditioned(format!("order {n}: non-finite coefficient")));
        }
        out.push(c);
    }
    Ok(out)
}

/// Coefficients `p_1 ..` of the dominant eigenvalue together with the
/// bracket values `(1|...|1)` they are assembled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PerturbSeries<T: Real> {
    /// `p_1 ..= p_valid_to`.
    pub coeffs: Vec<T>,
    pub brackets: BTreeMap<String, T>,
    /// Highest order whose formula preconditions held.
    pub valid_to: usize,
    pub max_order: usize,
    /// Formula values for every order up to `max_order`, valid or not.
    formula_values: Vec<T>,
}

impl<T: Real> PerturbSeries<T> {
    /// Assembles the series from `M_0 .. M_max_order` (unital sector).
    pub fn from_coefficients(ms: &[DMatrix<T>], max_order: usize) -> Result<Self> {
        if max_order == 0 || max_order > MAX_ORDER || ms.len() <= max_order {
            return Err(Error::OutOfRange {
                name: "max_order",
                value: max_order as f64,
                lo: 1.0,
                hi: MAX_ORDER.min(ms.len().saturating_sub(1)) as f64,
            });
        }
        let du = (ms[0].nrows() as f64).sqrt().round() as usize;
        let one = ket_one_unital::<T>(du);
        let bra = |m: &DMatrix<T>| -> T { (one.transpose() * m * &one)[(0, 0)] };
        let zero = DMatrix::zeros(ms[0].nrows(), ms[0].ncols());
        let m = |n: usize| if n < ms.len() { ms[n].clone() } else { zero.clone() };
        let (m1, m2, m3, m4) = (m(1), m(2), m(3), m(4));

        let mut b = BTreeMap::new();
        let mut put = |k: &str, v: T| {
            b.insert(k.to_string(), v);
            v
        };
        let m1_1 = put("(1|M1|1)", bra(&m1));
        let m11 = put("(1|M1^2|1)", bra(&(&m1 * &m1)));
        let m2_1 = put("(1|M2|1)", bra(&m2));
        let m12 = put("(1|M1 M2|1)", bra(&(&m1 * &m2)));
        let m21 = put("(1|M2 M1|1)", bra(&(&m2 * &m1)));
        let m3_1 = put("(1|M3|1)", bra(&m3));
        let m111 = put("(1|M1^3|1)", bra(&(&m1 * &m1 * &m1)));
        let m1111 = put("(1|M1^4|1)", bra(&(&m1 * &m1 * &m1 * &m1)));
        let m22 = put("(1|M2^2|1)", bra(&(&m2 * &m2)));
        let m4_1 = put("(1|M4|1)", bra(&m4));
        let m13 = put("(1|M1 M3 + M3 M1|1)", bra(&(&m1 * &m3 + &m3 * &m1)));
        let m112 = put(
            "(1|M1^2 M2 + M2 M1^2 + M1 M2 M1|1)",
            bra(&(&m1 * &m1 * &m2 + &m2 * &m1 * &m1 + &m1 * &m2 * &m1)),
        );

        let formula_values: Vec<T> = vec![
            m1_1,
            m11 + m2_1,
            m111 + m3_1 + m12 + m21,
            m1111 + m22 + m4_1 + m13 + m112,
        ]
        .into_iter()
        .take(max_order)
        .collect();

        let tol = T::tol(VANISH_TOL);
        let valid_to = formula_values
            .iter()
            .position(|v| v.abs() > tol)
            .map_or(max_order, |i| i + 1);
        Ok(Self {
            coeffs: formula_values[..valid_to].to_vec(),
            brackets: b,
            valid_to,
            max_order,
            formula_values,
        })
    }

    /// `p_n`, or why its formula does not apply.
    pub fn coefficient(&self, n: usize) -> Result<T> {
        if n == 0 || n > self.max_order {
            return Err(Error::OutOfRange {
                name: "order",
                value: n as f64,
                lo: 1.0,
                hi: self.max_order as f64,
            });
        }
        if n <= self.valid_to {
            return Ok(self.coeffs[n - 1]);
        }
        let lower = self.valid_to;
        Err(Error::FormulaPreconditionViolated {
            order: n,
            lower,
            value: self.formula_values[lower - 1].to_f64_lossy(),
        })
    }

    pub fn bracket(&self, name: &str) -> Option<T> {
        self.brackets.get(name).copied()
    }

    /// `1 + sum_{n <= valid_to} p_n theta^n`.
    pub fn evaluate(&self, theta: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| (acc + c) * theta)
            + T::one()
    }
}

/// Series from exact Taylor coefficients of the model's rotation factors.
pub fn perturb_series<T: Real>(
    group: &CliffordGroup<T>,
    model: &NoiseModel<T>,
    max_order: usize,
) -> Result<PerturbSeries<T>> {
    let ms = taylor_coefficients(group, model, max_order)?;
    PerturbSeries::from_coefficients(&ms, max_order)
}

/// Series from finite differences of `M_u(theta)`; works for any model with a
/// scalar angle.
pub fn perturb_series_fd<T: Real>(
    group: &CliffordGroup<T>,
    model: &NoiseModel<T>,
    max_order: usize,
) -> Result<PerturbSeries<T>> {
    let ms = fd_m_coefficients(group, model, max_order)?;
    PerturbSeries::from_coefficients(&ms, max_order)
}

/// Finite-difference Taylor coefficients of the unital-sector `M(theta)`.
pub fn fd_m_coefficients<T: Real>(
    group: &CliffordGroup<T>,
    model: &NoiseModel<T>,
    order: usize,
) -> Result<Vec<DMatrix<T>>> {
    if model.theta().is_none() {
        return Err(Error::InvalidConfig("model has no scalar angle".into()));
    }
    let ideal = group.gates();
    fd_taylor_coefficients(
        |theta| {
            let m = model.with_theta(theta).expect("angle model");
            Ok(build_m(ideal, &noisy_gateset(group, &m)?)?.unital)
        },
        order,
    )
}
