//! Seeded random qubit channels for property tests and sweeps.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channels::{pauli_channel, rotation_channel, PauliParams, RotationParams};
use crate::superop::{pauli_matrices, ptm_from_kraus, CMatrix, Superop};

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniformly random unit vector in three dimensions.
pub fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [normal(rng), normal(rng), normal(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return v.map(|x| x / n);
        }
    }
}

/// Haar-random element of SU(2), from a uniformly random unit quaternion.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> CMatrix<f64> {
    let mut q = [normal(rng), normal(rng), normal(rng), normal(rng)];
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    q.iter_mut().for_each(|x| *x /= n);
    let p = pauli_matrices::<f64>();
    let i = Complex::new(0.0, 1.0);
    &p[0] * Complex::from(q[0]) - (&p[1] * Complex::from(q[1]) + &p[2] * Complex::from(q[2]) + &p[3] * Complex::from(q[3])) * i
}

pub fn haar_unitary_channel<R: Rng + ?Sized>(rng: &mut R) -> Superop<f64> {
    ptm_from_kraus(&[haar_unitary(rng)]).expect("unitaries are trace preserving")
}

/// Random CPTP map with `rank` Kraus operators, from a Gaussian isometry.
pub fn random_cptp<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> Superop<f64> {
    let rank = rank.max(1);
    let g = DMatrix::from_fn(2 * rank, 2, |_, _| Complex::new(normal(rng), normal(rng)));
    let q = g.qr().q();
    let kraus: Vec<CMatrix<f64>> = (0..rank).map(|k| q.rows(2 * k, 2).into_owned()).collect();
    ptm_from_kraus(&kraus).expect("isometry blocks are complete")
}

/// Pauli probabilities with total at most `max_total`.
pub fn random_pauli_params<R: Rng + ?Sized>(rng: &mut R, max_total: f64) -> PauliParams<f64> {
    let l: [f64; 3] = std::array::from_fn(|_| rng.random::<f64>() * max_total / 3.0);
    PauliParams::new(l).expect("scaled into the simplex")
}

/// Unital channel close to the identity: a Pauli channel after a random
/// mixture of small rotations. Both the unital-block trace and the overlap
/// with any other such channel stay positive for `strength <= 0.5`.
pub fn random_weak_unital<R: Rng + ?Sized>(rng: &mut R, strength: f64) -> Superop<f64> {
    let terms = rng.random_range(1..=3);
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 0.1).collect();
    let total: f64 = weights.iter().sum();
    let mut mixed = DMatrix::zeros(4, 4);
    for w in &weights {
        let r = RotationParams::new(random_axis(rng), strength * rng.random::<f64>()).expect("unit axis");
        mixed += rotation_channel(&r).expect("unit axis").into_matrix() * (w / total);
    }
    let mixed = Superop::from_matrix(2, mixed).expect("4x4");
    pauli_channel(&random_pauli_params(rng, strength / 2.0))
        .compose(&mixed)
        .expect("same dimension")
}
