use std::f64::consts::PI;
use std::sync::Arc;

use crate::advop::{InflowCondition, ProblemSpec};
use crate::Point;

const WAVE: f64 = 7.0;

/// Smooth solution `u = cos(7x) cos(7y) + e^{-t}`.
pub fn manufactured_solution(t: f64, x: Point) -> f64 {
    (WAVE * x[0]).cos() * (WAVE * x[1]).cos() + (-t).exp()
}

/// Velocity `a = (e^{x/2 + y/2}, e^{x/2 - y/2})`.
pub fn manufactured_velocity(x: Point) -> [f64; 2] {
    [(0.5 * x[0] + 0.5 * x[1]).exp(), (0.5 * x[0] - 0.5 * x[1]).exp()]
}

/// `f = ∂ₜu + a·∇u + u ∇·a` for the manufactured solution.
pub fn manufactured_source(t: f64, x: Point) -> f64 {
    let a = manufactured_velocity(x);
    let (s0, c0) = (WAVE * x[0]).sin_cos();
    let (s1, c1) = (WAVE * x[1]).sin_cos();
    let decay = (-t).exp();
    let grad = [-WAVE * s0 * c1, -WAVE * c0 * s1];
    let div_a = 0.5 * a[0] - 0.5 * a[1];
    -decay + a[0] * grad[0] + a[1] * grad[1] + (c0 * c1 + decay) * div_a
}

/// Manufactured problem on the unit square up to `T = 1/2`, Dirichlet data
/// from the exact solution on the inflow boundary.
pub fn manufactured_problem() -> ProblemSpec {
    ProblemSpec::new(
        Arc::new(|_, x| manufactured_velocity(x)),
        Arc::new(manufactured_source),
        Arc::new(|x| manufactured_solution(0.0, x)),
        0.5,
    )
    .with_inflow(InflowCondition::Dirichlet(Arc::new(manufactured_solution)))
    .with_steady_velocity()
}

/// Squared radius of the three bodies.
const BODY_R2: f64 = 0.0225;

fn scaled_distance(x: Point, x0: Point) -> f64 {
    (x[0] - x0[0]).hypot(x[1] - x0[1]) / 0.15
}

fn dist2(x: Point, x0: Point) -> f64 {
    (x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2)
}

/// Slotted cylinder, cone and hump.
pub fn solid_body_initial(x: Point) -> f64 {
    if dist2(x, [0.5, 0.75]) <= BODY_R2 && (x[0] <= 0.475 || x[0] >= 0.525 || x[1] >= 0.85) {
        1.0
    } else if dist2(x, [0.5, 0.25]) <= BODY_R2 {
        1.0 - scaled_distance(x, [0.5, 0.25])
    } else if dist2(x, [0.25, 0.5]) <= BODY_R2 {
        0.25 * (1.0 + (PI * scaled_distance(x, [0.25, 0.5])).cos())
    } else {
        0.0
    }
}

/// Exact solution of the rotation: the initial datum rotated by angle `t`
/// counterclockwise about `(1/2, 1/2)`.
pub fn solid_body_solution(t: f64, x: Point) -> f64 {
    let (s, c) = t.sin_cos();
    let (dx, dy) = (x[0] - 0.5, x[1] - 0.5);
    solid_body_initial([0.5 + c * dx + s * dy, 0.5 - s * dx + c * dy])
}

/// Rotation about `(1/2, 1/2)` through one full turn, zero inflow data and
/// no source.
pub fn solid_body_problem() -> ProblemSpec {
    ProblemSpec::new(
        Arc::new(|_, x| [0.5 - x[1], x[0] - 0.5]),
        Arc::new(|_, _| 0.0),
        Arc::new(solid_body_initial),
        2.0 * PI,
    )
    .with_steady_velocity()
}
