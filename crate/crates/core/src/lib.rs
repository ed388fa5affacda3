//! Numerical laboratory for quadratic nonlinearities in conductivity laws.
//!
//! The crate solves the nonlinear conductivity equation `∇·C(x,∇u) = 0` on
//! the unit square or cube, computes Dirichlet-to-Neumann maps, extracts
//! the second-order boundary fingerprint of the quadratic part of `C`, and
//! recovers the quadratic coefficients from complex exponential probes and
//! from singular probes localized at a boundary point.

pub mod asymptotics;
pub mod cgo;
pub mod elliptic;
pub mod error;
pub mod extrapolate;
pub mod forward;
pub mod grid;
pub mod material;
pub mod quadrature;
pub mod singular;

pub use error::{Error, Result};
pub use grid::{
    gradient, integrate_boundary, integrate_volume, make_grid, BoundarySample, BoundaryTrace,
    CVec, DomainKind, GridSpec, Point, ScalarField, VectorField, C64,
};
pub use material::{MaterialLaw, QuadCoeffs, ResidualSpec};
