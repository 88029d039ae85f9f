//! Numerical laboratory for the focusing inhomogeneous nonlinear Schrödinger
//! equation `i u_t + Δu + μ|x|^{-b}|u|^α u = 0`.

mod banded;
pub mod cutoffs;
pub mod error;
pub mod evolution;
pub mod field;
pub mod grid;
pub mod ground_state;
pub mod observables;
mod ode;
pub mod parallel;
pub mod params;
pub mod scenarios;
pub mod virial;
mod zeta;

pub use error::{InlsError, Result};
pub use grid::{Geometry, RadialGrid};
pub use params::{PhysParams, Regime};
pub use field::Field;
pub use observables::{observables, Observables};
