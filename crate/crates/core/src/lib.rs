//! Grids, solvers and numerical checks for the ε-regularized infinity
//! Laplace equation `-Δ∞u - εΔu = 0` in the plane.
//!
//! - [`grid`]: node fields, stencils, regions and quadrature
//! - [`solver`]: Dirichlet solver for the regularized equation and an
//!   independent AMLE scheme
//! - [`analytic`]: closed-form reference functions and exponent fits
//! - [`estimates`]: determinant identities and interior estimates
//! - [`capacity`]: p-capacity duality and the dual 1-Laplacian equation

pub mod analytic;
pub mod capacity;
pub mod estimates;
pub mod grid;
pub mod solver;
mod sparse;

use thiserror::Error;

pub use analytic::{ReferenceFunction, Smooth2};
pub use grid::{GridSpec, Region, ScalarField};
pub use solver::{BoundaryData, RegularizationParams, SolverConfig};

/// Any error raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Grid(#[from] grid::GridError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error(transparent)]
    Analytic(#[from] analytic::AnalyticError),
    #[error(transparent)]
    Estimate(#[from] estimates::EstimateError),
    #[error(transparent)]
    Capacity(#[from] capacity::CapacityError),
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
