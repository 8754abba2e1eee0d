//! Simulation of weak-value measurements built on probe-controlled system
//! transformations.
//!
//! - [`linalg`]: dense complex matrices, Jacobi eigensolver, DFT.
//! - [`framework`]: joint outcome probabilities and the complex value they encode.
//! - [`diagram`]: four-node operator loops, their rewrites and compilation.
//! - [`protocols`]: the concrete measurement methods as exact pipelines.
//! - [`sampling`]: finite-shot Monte Carlo with delta-method uncertainties.
//! - [`wavefunction`]: scanning and scan-free direct wavefunction measurement.
//! - [`cli`]: the `wvsim` command-line driver.

pub mod cli;
pub mod diagram;
pub mod ensembles;
pub mod error;
pub mod framework;
pub mod linalg;
pub mod protocols;
pub mod sampling;
pub mod wavefunction;

pub use error::{Error, ErrorClass, Result};
pub use linalg::{ComplexScalar, Ket, Operator};
