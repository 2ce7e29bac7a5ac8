//! Multi-product extrapolation of symmetric splitting integrators for
//! `q'' = a(q)`, with exact rational weights, closed-form single-pass
//! variants, and Kepler/harmonic testbeds for precession and order studies.

pub mod coeffs;
pub mod dd;
pub mod error;
pub mod method;
pub mod mpe;
pub mod orbit;
pub mod rkn;
pub mod scalar;
pub mod state;
pub mod steppers;

pub use coeffs::{
    natural_sequence, optimal_sequence, vandermonde_residual, weights, weights_via_lagrange,
    Rational, Sequence, Weights,
};
pub use dd::DoubleDouble;
pub use error::{Error, Result};
pub use method::{integrate, Method, MethodSpec, RunReport};
pub use mpe::{mpe_step, nested_t6_step, MpeMethod};
pub use scalar::Real;
pub use state::{AccelField, PhaseState};
pub use steppers::Base;
