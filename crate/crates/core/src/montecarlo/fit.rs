//! Levenberg-Marquardt fit of `f(m) = a p^m + b`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    /// Covariance of `(a, p, b)`.
    pub cov: [[f64; 3]; 3],
    /// Root-mean-square of the unweighted residuals.
    pub residual_rms: f64,
    pub iterations: usize,
}

impl ExpFit {
    pub fn sigma_p(&self) -> f64 {
        self.cov[1][1].max(0.0).sqrt()
    }

    pub fn sigmas(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.cov[i][i].max(0.0).sqrt())
    }

    pub fn eval(&self, m: f64) -> f64 {
        self.a * self.p.powf(m) + self.b
    }
}

/// Starting point: `a0 = F(m_min) - F(m_max)`, `b0 = F(m_max)` and `p0` from
/// the log-slope of `F - b0` over the points where it is positive.
pub fn seed(ms: &[f64], ys: &[f64]) -> [f64; 3] {
    let n = ms.len();
    let a0 = ys[0] - ys[n - 1];
    let b0 = ys[n - 1];
    let pts: Vec<(f64, f64)> = ms
        .iter()
        .zip(ys)
        .take(n - 1)
        .filter_map(|(&m, &y)| {
            let z = (y - b0) * a0.signum();
            (z > 0.0).then(|| (m, z.ln()))
        })
        .collect();
    let p0 = if pts.len() >= 2 && a0.abs() > 1e-12 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            (sxy / sxx).exp().clamp(1e-3, 1.0)
        } else {
            1.0
        }
    } else {
        1.0
    };
    [a0, p0, b0]
}

fn model_and_jacobian(m: f64, th: &Vector3<f64>) -> (f64, Vector3<f64>) {
    let (a, p) = (th[0], th[1]);
    let pm = p.powf(m);
    let dp = if m == 0.0 { 0.0 } else { a * m * p.powf(m - 1.0) };
    (a * pm + th[2], Vector3::new(pm, dp, 1.0))
}

/// Least-squares fit; `weights` multiply the residuals (use `1/sigma_i` for
/// inverse-variance weighting).
pub fn fit_exponential(ms: &[f64], ys: &[f64], weights: Option<&[f64]>) -> ExpFit {
    fit_impl(ms, ys, weights, None)
}

/// Two-parameter fit with the asymptote held at `b` (`1/d` for unital noise).
/// Needed when `1 - p` is so small that the data only show the linear part of
/// the decay, where `a` and `b` are otherwise not separately identifiable.
pub fn fit_exponential_fixed_offset(ms: &[f64], ys: &[f64], weights: Option<&[f64]>, b: f64) -> ExpFit {
    fit_impl(ms, ys, weights, Some(b))
}

fn fixed_seed(ms: &[f64], ys: &[f64], b: f64) -> [f64; 3] {
    let a0 = ys[0] - b;
    let pts: Vec<(f64, f64)> = ms
        .iter()
        .zip(ys)
        .filter_map(|(&m, &y)| {
            let z = (y - b) / a0;
            (z > 0.0 && a0 != 0.0).then(|| (m, z.ln()))
        })
        .collect();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let p0 = if sxx > 0.0 { (sxy / sxx).exp().clamp(1e-3, 1.0) } else { 1.0 };
    [a0, p0, b]
}

fn fit_impl(ms: &[f64], ys: &[f64], weights: Option<&[f64]>, fixed_b: Option<f64>) -> ExpFit {
    let n = ms.len();
    let free = if fixed_b.is_some() { 2 } else { 3 };
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let cost_and_normal = |th: &Vector3<f64>| {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        let mut cost = 0.0;
        for i in 0..n {
            let (f, mut j) = model_and_jacobian(ms[i], th);
            if fixed_b.is_some() {
                j[2] = 0.0;
            }
            let wi = w(i);
            let r = wi * (ys[i] - f);
            let jw = j * wi;
            cost += r * r;
            jtj += jw * jw.transpose();
            jtr += jw * r;
        }
        if fixed_b.is_some() {
            jtj[(2, 2)] = 1.0;
        }
        (cost, jtj, jtr)
    };

    let mut th = Vector3::from(match fixed_b {
        Some(b) => fixed_seed(ms, ys, b),
        None => seed(ms, ys),
    });
    let (mut cost, mut jtj, mut jtr) = cost_and_normal(&th);
    let mut mu = 1e-3;
    let mut iterations = 0;
    for it in 0..500 {
        iterations = it + 1;
        if cost == 0.0 {
            break;
        }
        let scale = jtj.diagonal().map(|x| x.max(1e-12 * jtj.amax().max(1e-300)));
        let a = jtj + Matrix3::from_diagonal(&(scale * mu));
        let Some(step) = a.lu().solve(&jtr) else {
            mu *= 10.0;
            continue;
        };
        let trial = th + step;
        let (c2, j2, r2) = cost_and_normal(&trial);
        if c2.is_finite() && c2 <= cost {
            let rel = step.norm() / (th.norm() + 1e-30);
            let improvement = cost - c2;
            th = trial;
            (cost, jtj, jtr) = (c2, j2, r2);
            mu = (mu / 10.0).max(1e-15);
            if rel < 1e-14 || improvement <= 1e-30 * (1.0 + cost) {
                break;
            }
        } else {
            mu *= 10.0;
            if mu > 1e16 {
                break;
            }
        }
    }

    let rms = (0..n)
        .map(|i| (ys[i] - model_and_jacobian(ms[i], &th).0).powi(2))
        .sum::<f64>()
        / n as f64;
    let dof = n.saturating_sub(free);
    let s2 = if dof > 0 { cost / dof as f64 } else { 0.0 };
    let mut cov = match weights {
        // with inverse-variance weights the residual scale is already known
        Some(_) => jtj.pseudo_inverse(1e-14).unwrap_or_else(|_| Matrix3::zeros()),
        None => jtj.pseudo_inverse(1e-14).unwrap_or_else(|_| Matrix3::zeros()) * s2,
    };
    if fixed_b.is_some() {
        cov.row_mut(2).fill(0.0);
        cov.column_mut(2).fill(0.0);
    }
    ExpFit {
        a: th[0],
        p: th[1],
        b: th[2],
        cov: std::array::from_fn(|i| std::array::from_fn(|j| cov[(i, j)])),
        residual_rms: rms.sqrt(),
        iterations,
    }
}
