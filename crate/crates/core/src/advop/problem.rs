use std::fmt;
use std::sync::Arc;

use crate::mesh::BoundaryTag;
use crate::Point;

/// Time-dependent scalar field `g(t, x)`.
pub type ScalarFn = Arc<dyn Fn(f64, Point) -> f64 + Send + Sync>;
/// Time-dependent vector field `a(t, x)`.
pub type VectorFn = Arc<dyn Fn(f64, Point) -> [f64; 2] + Send + Sync>;
/// Time-independent scalar field.
pub type InitialFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Data prescribed on the inflow part of the boundary.
#[derive(Clone)]
pub enum InflowCondition {
    /// `u = u_D`.
    Dirichlet(ScalarFn),
    /// `|a·ν| u = g_F`.
    Flux(ScalarFn),
}

impl fmt::Debug for InflowCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dirichlet(_) => f.write_str("Dirichlet"),
            Self::Flux(_) => f.write_str("Flux"),
        }
    }
}

/// An advection problem `∂ₜu + ∇·(a u) = f` with inflow data, initial datum
/// and final time. Boundary points with `a·ν < 0` at `t = 0` form the inflow
/// boundary; every other boundary point is outflow.
#[derive(Clone)]
pub struct ProblemSpec {
    pub velocity: VectorFn,
    pub source: ScalarFn,
    pub initial: InitialFn,
    /// Condition on inflow points whose tag has no override.
    pub inflow: InflowCondition,
    pub inflow_by_tag: Vec<(BoundaryTag, InflowCondition)>,
    pub final_time: f64,
    /// Flux conditions require `a·ν ≤ -flux_delta`.
    pub flux_delta: f64,
    /// `a` does not depend on `t`; the solver may sample it once.
    pub steady_velocity: bool,
}

impl ProblemSpec {
    /// Homogeneous Dirichlet inflow and no per-tag overrides.
    pub fn new(velocity: VectorFn, source: ScalarFn, initial: InitialFn, final_time: f64) -> Self {
        Self {
            velocity,
            source,
            initial,
            inflow: InflowCondition::Dirichlet(Arc::new(|_, _| 0.0)),
            inflow_by_tag: Vec::new(),
            final_time,
            flux_delta: 1e-8,
            steady_velocity: false,
        }
    }

    /// Declares the velocity time-independent.
    pub fn with_steady_velocity(mut self) -> Self {
        self.steady_velocity = true;
        self
    }

    pub fn with_inflow(mut self, condition: InflowCondition) -> Self {
        self.inflow = condition;
        self
    }

    pub fn with_tag_condition(mut self, tag: BoundaryTag, condition: InflowCondition) -> Self {
        self.inflow_by_tag.retain(|(t, _)| *t != tag);
        self.inflow_by_tag.push((tag, condition));
        self
    }

    pub fn inflow_condition(&self, tag: BoundaryTag) -> &InflowCondition {
        self.inflow_by_tag
            .iter()
            .find(|(t, _)| *t == tag)
            .map_or(&self.inflow, |(_, c)| c)
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("inflow", &self.inflow)
            .field("inflow_by_tag", &self.inflow_by_tag)
            .field("final_time", &self.final_time)
            .field("flux_delta", &self.flux_delta)
            .field("steady_velocity", &self.steady_velocity)
            .finish_non_exhaustive()
    }
}
