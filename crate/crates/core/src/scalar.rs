//! Scalar abstraction shared by every numeric module.

use std::fmt;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the linear algebra is generic over (`f32` or `f64`).
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + Default
    + fmt::Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// A tolerance of nominal size `x`, floored at a small multiple of the
    /// type's machine epsilon so single precision does not demand the
    /// impossible.
    fn tol(x: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(64.0);
        let t = Self::lit(x);
        if t > floor {
            t
        } else {
            floor
        }
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
