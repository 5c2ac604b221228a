//! Reference-triangle polynomial bases and quadrature rules.

mod basis;
mod quadrature;

pub use basis::{dim, BasisKind, ReferenceBasis, Tabulation, MAX_DEGREE};
pub use quadrature::{
    cell_rule, edge_rule, CellRule, EdgeRule, QuadratureRule, MAX_CELL_EXACTNESS,
    MAX_EDGE_EXACTNESS,
};

/// Exactness used by the solver for bilinear-form integrands of degree `k`.
pub fn solver_exactness(k: usize) -> u32 {
    2 * k as u32 + 2
}

/// Exactness used for error norms.
pub fn error_exactness(k: usize) -> u32 {
    2 * k as u32 + 4
}
