//! Property checks run at start-up by `subcell-eg selftest`: flux
//! formula, mass matrix against pointwise Gram assembly, energy identity,
//! constant preservation, projection properties and SSP orders.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::advop::{upwind_flux, DiscreteOperator, InflowCondition, ProblemSpec};
use crate::egspace::{Degrees, EgSpace};
use crate::linalg::{dot, rank};
use crate::mesh::{build_unit_square_mesh, TwoLevelMesh};
use crate::polybasis::{cell_rule, error_exactness};
use crate::projection::{eg_project_initial, interpolate_cg};
use crate::timestep::{integrate, SemiDiscrete, SspScheme};
use crate::Result;

/// Outcome of one property check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, value: f64, tol: f64) -> Check {
    Check {
        name,
        passed: value <= tol,
        detail: format!("{value:.3e} (tolerance {tol:.0e})"),
    }
}

fn space(level: u32, marks: &[u32], degrees: Degrees) -> Result<EgSpace> {
    let coarse = build_unit_square_mesh(level)?;
    let depth = marks.iter().copied().max().unwrap_or(0);
    EgSpace::new(TwoLevelMesh::build(coarse, marks, depth)?, degrees)
}

fn random_marks(n: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    (0..n).map(|_| rng.random_range(0..3)).collect()
}

/// Runs every check. Errors indicate a broken setup rather than a failed
/// property.
pub fn run_all() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    Ok(vec![
        flux_examples(),
        mass_against_gram()?,
        mass_rank()?,
        energy_identity(&mut rng)?,
        constant_preservation()?,
        projection_orthogonality(&mut rng)?,
        best_approximation(&mut rng)?,
        projection_reproduction()?,
        ssp_orders()?,
    ])
}

fn flux_examples() -> Check {
    let err = (upwind_flux(2.0, 3.0, 1.0) - 6.0).abs()
        + (upwind_flux(-2.0, 3.0, 1.0) + 2.0).abs()
        + upwind_flux(0.0, 3.0, 1.0).abs();
    check("upwind flux", err, 0.0)
}

/// Gram matrix of the generators by pointwise evaluation on the fine mesh.
fn pointwise_gram(space: &EgSpace) -> Result<DMatrix<f64>> {
    let n = space.size();
    let mut g = DMatrix::zeros(n, n);
    let mesh = space.mesh();
    let fine = mesh.fine_mesh();
    let rule = cell_rule(2 * space.degrees().k as u32)?;
    for f in 0..fine.num_elements() {
        let tri = fine.triangle(f);
        let leaf = mesh.leaf_of_fine_cell(f);
        for (xi, w) in rule.iter() {
            let vals = space.generator_values(leaf, tri.map(*xi))?;
            for &(i, vi) in &vals {
                for &(j, vj) in &vals {
                    g[(i, j)] += w * tri.det_jacobian() * vi * vj;
                }
            }
        }
    }
    Ok(g)
}

fn mass_against_gram() -> Result<Check> {
    let mut worst = 0.0f64;
    for (marks, d) in [
        ([0, 0, 0, 0], Degrees::new(1, 0, 0)?),
        ([1, 0, 2, 1], Degrees::new(1, 1, 0)?),
        ([0, 2, 1, 1], Degrees::new(2, 1, 1)?),
    ] {
        let s = space(1, &marks, d)?;
        let dense = pointwise_gram(&s)?;
        let op = DiscreteOperator::new(s)?;
        worst = worst.max((op.mass_matrix().to_dense() - dense).amax());
    }
    Ok(check("mass matrix = pointwise Gram", worst, 1e-12))
}

fn mass_rank() -> Result<Check> {
    let op = DiscreteOperator::new(space(1, &[0; 4], Degrees::new(1, 0, 0)?)?)?;
    let r = rank(&op.mass_matrix().to_dense(), 1e-10);
    Ok(Check {
        name: "rank of M for V^1_{0,0}, level 1",
        passed: r == 8,
        detail: format!("{r} (expected 8)"),
    })
}

fn rotation() -> ProblemSpec {
    ProblemSpec::new(
        Arc::new(|_, x| [0.5 - x[1], x[0] - 0.5]),
        Arc::new(|_, _| 0.0),
        Arc::new(|_| 0.0),
        1.0,
    )
}

fn energy_identity(rng: &mut ChaCha8Rng) -> Result<Check> {
    let problem = rotation();
    let mut worst = 0.0f64;
    let mut sign_ok = true;
    for d in [Degrees::new(1, 0, 0)?, Degrees::new(2, 1, 1)?, Degrees::new(2, 2, 0)?] {
        let marks = random_marks(16, rng);
        let op = DiscreteOperator::new(space(2, &marks, d)?)?;
        let boundary = op.classify_boundary(&problem)?;
        let mut r = vec![0.0; op.space().size()];
        for _ in 0..20 {
            let c: Vec<f64> = (0..r.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            op.residual(&problem, &boundary, 0.0, &c, &mut r)?;
            let lhs = dot(&c, &r);
            let rhs = -op.upwind_dissipation(&problem, 0.0, &c)?;
            worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
            sign_ok &= lhs <= 1e-12;
        }
    }
    let mut c = check("energy identity cᵀr = -½Σ∫|a·ν|[U]²", worst, 1e-10);
    c.passed &= sign_ok;
    Ok(c)
}

fn constant_preservation() -> Result<Check> {
    let problem = ProblemSpec::new(
        Arc::new(|_, _| [1.0, 0.5]),
        Arc::new(|_, _| 0.0),
        Arc::new(|_| 1.0),
        1.0,
    )
    .with_inflow(InflowCondition::Dirichlet(Arc::new(|_, _| 1.0)));
    let mut worst = 0.0f64;
    for (marks, d) in [
        (vec![1; 16], Degrees::new(1, 0, 0)?),
        (vec![0, 1, 2, 0, 0, 0, 1, 0, 0, 0, 0, 2, 0, 1, 0, 0], Degrees::new(2, 1, 1)?),
    ] {
        let op = DiscreteOperator::new(space(2, &marks, d)?)?;
        let boundary = op.classify_boundary(&problem)?;
        let c = op.space().constant_one();
        let mut r = vec![0.0; c.len()];
        op.residual(&problem, &boundary, 0.0, &c, &mut r)?;
        worst = worst.max(op.field_stats(&op.solve_mass(&r)?)?.l2_norm);
    }
    Ok(check("constant state is stationary", worst, 1e-10))
}

fn smooth(x: crate::Point) -> f64 {
    (7.0 * x[0]).cos() * (7.0 * x[1]).cos() + 1.0
}

/// `∫ w f` over the leaves with the error quadrature.
fn leaf_integrals<F: Fn(usize, crate::Point) -> f64>(space: &EgSpace, f: F) -> Result<Vec<f64>> {
    let rule = cell_rule(error_exactness(space.degrees().k))?;
    Ok(space
        .mesh()
        .leaves()
        .iter()
        .enumerate()
        .map(|(i, leaf)| {
            rule.iter()
                .map(|(xi, w)| w * f(i, leaf.triangle.map(*xi)))
                .sum::<f64>()
                * leaf.triangle.det_jacobian()
        })
        .collect())
}

fn projection_orthogonality(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0f64;
    for d in [Degrees::new(1, 0, 0)?, Degrees::new(2, 1, 1)?, Degrees::new(2, 2, 0)?] {
        let s = space(2, &random_marks(16, rng), d)?;
        let c = eg_project_initial(&s, smooth)?;
        for g in s.l_range().chain(s.m_range()) {
            let ip = leaf_integrals(&s, |leaf, x| {
                let vals = s.generator_values(leaf, x).expect("point inside leaf");
                let phi = vals.iter().find(|(i, _)| *i == g).map_or(0.0, |(_, v)| *v);
                let u: f64 = vals.iter().map(|(i, v)| c[*i] * v).sum();
                (u - smooth(x)) * phi
            })?;
            worst = worst.max(ip.iter().sum::<f64>().abs());
        }
    }
    Ok(check("projection residual ⟂ broken generators", worst, 1e-10))
}

fn best_approximation(rng: &mut ChaCha8Rng) -> Result<Check> {
    let d = Degrees::new(2, 1, 1)?;
    let s = space(2, &random_marks(16, rng), d)?;
    let c = eg_project_initial(&s, smooth)?;
    let err2 = |coeffs: &[f64]| -> Result<f64> {
        Ok(leaf_integrals(&s, |leaf, x| {
            (s.evaluate(coeffs, leaf, x).expect("point inside leaf") - smooth(x)).powi(2)
        })?
        .iter()
        .sum())
    };
    let best = err2(&c)?;
    let trials = 100;
    let mut wins = 0;
    for _ in 0..trials {
        let scale = 10f64.powf(rng.random_range(-4.0..0.0));
        let mut other = c.clone();
        for g in s.l_range().chain(s.m_range()) {
            other[g] += scale * rng.random_range(-1.0..1.0);
        }
        if best <= err2(&other)? + 1e-12 {
            wins += 1;
        }
    }
    Ok(Check {
        name: "best approximation against random competitors",
        passed: wins == trials,
        detail: format!("{wins}/{trials}"),
    })
}

fn projection_reproduction() -> Result<Check> {
    let mut worst = 0.0f64;
    for d in [Degrees::new(1, 0, 0)?, Degrees::new(2, 1, 1)?, Degrees::new(2, -1, -1)?] {
        let s = space(2, &[1, 0, 2, 0, 0, 1, 0, 0, 0, 0, 2, 0, 0, 0, 0, 1], d)?;
        let k = d.k;
        // A continuous piecewise polynomial: the interpolant of a smooth field.
        let nodal = interpolate_cg(s.mesh().coarse(), k, smooth)?;
        let mut reference = vec![0.0; s.size()];
        reference[..nodal.len()].copy_from_slice(&nodal);
        let field = |x: crate::Point| {
            let leaf = s.mesh().locate(x).expect("point in domain");
            s.evaluate(&reference, leaf, x).expect("point inside leaf")
        };
        let c = eg_project_initial(&s, field)?;
        let a = s.embed_leaves(&c)?;
        let b = s.embed_leaves(&reference)?;
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(check("EG projection reproduces continuous P_k", worst, 1e-12))
}

struct Decay;

impl SemiDiscrete for Decay {
    fn dim(&self) -> usize {
        1
    }

    fn derivative(&mut self, _t: f64, c: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = -c[0];
        Ok(())
    }
}

fn ssp_orders() -> Result<Check> {
    let mut worst = f64::INFINITY;
    for scheme in [SspScheme::Ssp2, SspScheme::Ssp3] {
        let mut errors = Vec::new();
        for dt in [0.1, 0.05, 0.025] {
            let mut c = [1.0];
            integrate(scheme, &mut Decay, &mut c, 0.0, 1.0, dt, |_, _| Ok(()))?;
            errors.push((c[0] - (-1.0f64).exp()).abs());
        }
        for w in errors.windows(2) {
            worst = worst.min((w[0] / w[1]).log2() - scheme.order() as f64);
        }
    }
    Ok(Check {
        name: "SSP Runge-Kutta formal orders",
        passed: worst >= -0.1,
        detail: format!("observed minus formal order {worst:.3}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_all().unwrap() {
            assert!(c.passed, "{c}");
        }
    }
}
