//! Finite-volume solver and free-energy diagnostics for the Fokker-Planck
//! equation
//!
//! ```text
//! df/dt = div( (f / pi) grad(D log f + phi) )
//! ```
//!
//! with inhomogeneous diffusion `D(x)` and variable mobility `pi(x, t)` on the
//! box `[-1, 1]^n`, `n` in 1..=3, under periodic or no-flux boundaries.

pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod grid;
pub mod oracle;
pub mod params;
pub mod solver;

pub use equilibrium::{equilibrium_state, solve_normalization, EquilibriumState};
pub use error::{Error, Result};
pub use grid::{face_gradient, integrate, Boundary, FaceField, ScalarField, TensorGrid};
pub use params::{DiffusionField, MobilityField, ParameterSet, PotentialField};
pub use solver::{backward_euler_step, run, EnergyTrace, SolverConfig, TraceRow};
