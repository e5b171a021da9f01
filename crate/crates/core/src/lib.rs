//! Spectral laboratory for a fractional phase-field gradient flow coupled to
//! a nutrient field.
//!
//! The state `(φ, σ)` evolves as the gradient flow of
//! `E^ε(φ, σ) = M^ε(φ - σ) + F(φ, σ)` in the `H^{-s} x L²` metric, where
//! `M^ε` is the Modica–Mortola energy and `F` couples the order parameter
//! `u = φ - σ` to the nutrient through the fractional Neumann Laplacian `A^s`.
//!
//! * [`spectral`]: Neumann eigenbasis on a box, `A^s`, `A^{-s}`, derivatives.
//! * [`potential`]: double well, energies, chemical potential, initial data.
//! * [`movements`]: implicit minimizing-movements scheme with a dissipation ledger.
//! * [`diagnostics`]: interface extraction and sharp-interface measurements.
//! * [`oracle`]: radial finite-difference reference for the sharp limit.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the double-precision instantiation used by the CLI.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod movements;
pub mod oracle;
pub mod potential;
mod real;
pub mod spectral;

pub use error::{Error, Result};
pub use real::Real;

pub type Grid = spectral::GridSpec<f64>;
pub type Field = spectral::ScalarField<f64>;
pub type Operator = spectral::FractionalOperator<f64>;
pub type Field32 = spectral::ScalarField<f32>;
pub type Operator32 = spectral::FractionalOperator<f32>;
pub type State = movements::FlowState<f64>;
pub type Flow = movements::GradientFlow<f64>;
