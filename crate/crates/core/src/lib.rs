//! Radiation trapping in coherently prepared ⁸⁷Rb vapor: analytic Λ
//! propagation, a multilevel density-matrix solver, and inference of the
//! incoherent pumping rate from transmission and rotation data.
//!
//! The numerical core is generic over the scalar type; the aliases below fix
//! it to `f64` for ordinary use.

// `!(x > 0)` style checks are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atomic;
pub mod cli;
pub mod error;
pub mod inference;
pub mod lambda;
pub mod multilevel;
pub mod num;
pub mod trapping;

pub use error::{Error, ErrorClass, Result};

/// `f64` instantiations of the generic core.
pub type Medium = lambda::MediumParams<f64>;
pub type Field = lambda::FieldState<f64>;
pub type Observable = inference::ObservablePoint<f64>;
pub type Scheme = atomic::LevelScheme<f64>;
pub type Units = atomic::RateUnits<f64>;
pub type Solver = multilevel::SolverConfig<f64>;
pub type MultilevelPropagator = multilevel::Propagator<f64>;
pub type Trapping = trapping::TrappingModel<f64>;
