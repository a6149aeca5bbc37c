//! Superoperator tools for comparing randomized-benchmarking decay rates with
//! average gate fidelities on single-qubit Clifford gate sets.
//!
//! Everything in the linear-algebra core is generic over [`Real`] (`f32` or
//! `f64`); the `*64` aliases below are what most callers want. Random
//! generation and protocol simulation work in `f64`.

pub mod analytic;
pub mod channels;
pub mod clifford;
pub mod error;
pub mod metrics;
pub mod montecarlo;
pub mod random;
pub mod scalar;
pub mod superop;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Superop64 = superop::Superop<f64>;
pub type Superop32 = superop::Superop<f32>;
pub type CliffordGroup64 = clifford::CliffordGroup<f64>;
pub type NoiseModel64 = channels::NoiseModel<f64>;
pub type ChannelSpec64 = channels::ChannelSpec<f64>;
pub type MOperator64 = analytic::MOperator<f64>;
pub type SpectralReport64 = analytic::SpectralReport<f64>;
pub type PerturbSeries64 = analytic::PerturbSeries<f64>;
pub type FidelityReport64 = metrics::FidelityReport<f64>;
