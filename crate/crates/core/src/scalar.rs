//! Scalar abstraction for the analytic side of the crate.
//!
//! The chain and traffic math is written against [`Scalar`] so it can run in
//! `f32` or `f64`; the concrete aliases at the crate root pick `f64`, which is
//! what the simulator and the CLI use throughout.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the traffic and chain modules.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + 'static {
    /// Shorthand for lossless-enough conversion from `f64` literals.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }
}

impl<T> Scalar for T where T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + 'static {}
