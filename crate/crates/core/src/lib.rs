//! Z_M-gradations of the classical Lie algebras, the loop-group Toda field
//! equations they produce in block-matrix form, folding reductions of those
//! equations, and a light-cone integrator with sine/sinh-Gordon oracles.

pub mod check;
pub mod error;
pub mod folding;
pub mod gradation;
pub mod lie_core;
pub mod sampling;
pub mod solver;
pub mod toda_builder;

pub use error::{Result, TodaError};
