//! Semi-discrete advection operator: mass matrix, upwind residual and the
//! singular-mass solver.

mod flux;
mod mass;
mod operator;
mod problem;

pub use flux::upwind_flux;
pub use operator::{BoundaryClassification, DiscreteOperator, FieldStats, PointRole};
pub use problem::{InflowCondition, InitialFn, ProblemSpec, ScalarFn, VectorFn};
