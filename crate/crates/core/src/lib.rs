//! Operator calculus for evolutionary equations posed in exponentially
//! weighted spaces `L2_rho`.
//!
//! Signals are sampled on a uniform window and treated as zero outside it.
//! The time derivative acts as the multiplier `i xi + rho` after the
//! Fourier–Laplace transform, which gives fractional powers, commutator
//! estimates and a frequency-domain solver. The time stepper works directly
//! on nodal values.

pub mod coefficients;
pub mod diagnostics;
mod error;
pub mod fourier_laplace;
pub mod fractional;
pub mod linalg;
pub mod quadrature;
pub mod scenarios;
pub mod solver;
pub mod spatial;
mod toeplitz;
pub mod verification;
pub mod weighted_space;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use weighted_space::{Signal, TemporalGrid};
