//! Subcell-enriched Galerkin (EG) discretization of the linear advection
//! equation `∂ₜu + ∇·(a u) = f` on triangulations of planar domains.
//!
//! The approximation space is the sum of a continuous Lagrange space on a
//! coarse mesh, a broken modal space on the same coarse mesh, and a broken
//! modal space on a locally red-refined two-level mesh with hanging nodes.
//! Interelement coupling uses upwind fluxes; time integration is explicit
//! strong-stability-preserving Runge–Kutta.
//!
//! Module map:
//!
//! * [`mesh`]: unit-square triangulations, red refinement, the two-level
//!   mesh and its face skeleton.
//! * [`polybasis`]: reference-triangle bases and quadrature.
//! * [`egspace`]: the enriched space as a generating system with an exact
//!   embedding into the broken leaf space.
//! * [`projection`]: L² projections, nodal interpolation and the EG initial
//!   projection.
//! * [`advop`]: mass operator, upwind residual, condensed mass solver.
//! * [`timestep`]: SSP Runge–Kutta schemes.
//! * [`experiments`]: manufactured-solution convergence sweeps, solid body
//!   rotation, error norms and CSV/VTK output.

pub mod advop;
pub mod egspace;
mod error;
pub mod experiments;
pub mod linalg;
pub mod mesh;
mod par;
pub mod polybasis;
pub mod projection;
pub mod selftest;
pub mod timestep;

pub use error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];
