//! Stochastic shape-gradient method for identifying material interfaces in
//! a two-dimensional diffusion problem with random coefficients.
//!
//! The building blocks are layered bottom-up:
//!
//! * [`mesh`]: labeled triangulations of the unit square, generation,
//!   validation, quality and point location.
//! * [`stochastics`]: reproducible random streams and scenario sampling.
//! * [`fem`]: P1 assembly and conjugate-gradient solvers.
//! * [`shape_calculus`]: state, adjoint, objective and the volume shape
//!   derivative.
//! * [`deformation`]: the elasticity-based gradient representative.
//! * [`optimizer`]: the stochastic gradient loop and step-size rules.
//! * [`cli`]: configuration files, commands and output writers used by the
//!   `ssgm` binary.

pub mod cli;
pub mod deformation;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod optimizer;
pub mod shape_calculus;
pub mod stochastics;

pub use error::{Error, Result};
