//! Predictor-based event-triggered stabilization of single-input plants with
//! time-varying actuation delay and delayed, sampled state feedback.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the numerical
//! core: plant models and ISS certificates, delay channels, signal buffers,
//! the three predictor strategies plus the linear closed form, the event
//! trigger, the Lyapunov-Krasovskii monitor, the linear-case
//! communication/convergence trade-off and the fixed-step simulation engine.
//! File formats, configuration and the command line live in the `etpf` crate.

#![no_std]

extern crate alloc;

#[allow(unused_imports)]
use num_traits::Float;

pub mod delay;
mod error;
pub mod linalg;
pub mod model;
pub mod monitor;
pub mod predictor;
pub mod signal;
pub mod sim;
pub mod tradeoff;
pub mod trigger;

pub use error::{Error, Result};

/// Euclidean norm of a vector slice.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
