use std::path::Path;
use std::time::Instant;

use super::convergence::{uniform_space, RunRecord};
use super::norms::l2_error;
use super::output::{save_cross_section, save_vtk, CrossSample};
use super::problems::{solid_body_initial, solid_body_problem};
use crate::advop::{DiscreteOperator, FieldStats};
use crate::egspace::Degrees;
use crate::polybasis::error_exactness;
use crate::projection::l2_project_leaf_constants;
use crate::timestep::{run, Probe, RunOptions};
use crate::{Error, Point, Result};

/// Samples per cross-section.
pub const CROSS_SAMPLES: usize = 1024;

/// Final state of a solid body rotation run.
#[derive(Debug)]
pub struct SolidBodyRun {
    pub op: DiscreteOperator,
    pub coeffs: Vec<f64>,
    pub record: RunRecord,
    /// Minimum and maximum at the final time (quadrature points).
    pub final_stats: FieldStats,
    pub probes: Vec<Probe>,
    pub steps: usize,
}

/// One full turn of the rotation with `V^1_{0,0}` on `(R, r)`, starting from
/// the leafwise constant projection of the initial datum.
pub fn run_solid_body(big_r: u32, r: u32, cfl: f64, probe_every: usize) -> Result<SolidBodyRun> {
    run_solid_body_with(Degrees::new(1, 0, 0)?, big_r, r, cfl, probe_every)
}

/// [`run_solid_body`] in another space; the space needs `m ≥ 0`.
pub fn run_solid_body_with(
    degrees: Degrees,
    big_r: u32,
    r: u32,
    cfl: f64,
    probe_every: usize,
) -> Result<SolidBodyRun> {
    let start = Instant::now();
    let space = uniform_space(degrees, big_r, r)?;
    let problem = solid_body_problem();
    let c0 = l2_project_leaf_constants(&space, solid_body_initial, error_exactness(degrees.k))?;
    let op = DiscreteOperator::new(space)?;
    let out = run(&op, &problem, &c0, problem.final_time, RunOptions { cfl, probe_every })?;
    // After a full turn the exact solution is the initial datum again.
    let err = l2_error(op.space(), &out.coeffs, solid_body_initial)?;
    let final_stats = out.probes.last().expect("final probe").stats;
    Ok(SolidBodyRun {
        record: RunRecord {
            k: degrees.k,
            l: degrees.l_int(),
            m: degrees.m_int(),
            coarse_level: big_r,
            r,
            dofs: op.space().size(),
            l2_error: err,
            seconds: start.elapsed().as_secs_f64(),
        },
        coeffs: out.coeffs,
        final_stats,
        probes: out.probes,
        steps: out.steps,
        op,
    })
}

/// Cross-section direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Line {
    /// `x₁ = const`, parameter `x₂`.
    X(f64),
    /// `x₂ = const`, parameter `x₁`.
    Y(f64),
}

impl Line {
    pub fn point(&self, s: f64) -> Point {
        match *self {
            Self::X(x) => [x, s],
            Self::Y(y) => [s, y],
        }
    }
}

impl SolidBodyRun {
    /// `samples` uniform samples of the numerical and exact solution along
    /// `line`, endpoints included.
    pub fn cross_section(&self, line: Line, samples: usize) -> Result<Vec<CrossSample>> {
        let space = self.op.space();
        (0..samples)
            .map(|i| {
                let s = if samples > 1 { i as f64 / (samples - 1) as f64 } else { 0.5 };
                let x = line.point(s);
                let leaf = space.mesh().locate(x).ok_or(Error::PointOutsideElement {
                    element: usize::MAX,
                    x: x[0],
                    y: x[1],
                })?;
                Ok(CrossSample {
                    s,
                    u_num: space.evaluate(&self.coeffs, leaf, x)?,
                    u_exact: solid_body_initial(x),
                })
            })
            .collect()
    }

    /// Whether the L² norm never grew by more than `rel_tol` between
    /// consecutive probes.
    pub fn norm_nonincreasing(&self, rel_tol: f64) -> bool {
        self.probes
            .windows(2)
            .all(|w| w[1].stats.l2_norm <= w[0].stats.l2_norm * (1.0 + rel_tol))
    }

    /// Writes `PREFIX.csv`, `PREFIX.vtk`, `PREFIX_cross_x.csv` and
    /// `PREFIX_cross_y.csv`.
    pub fn save(&self, prefix: &Path) -> Result<()> {
        let with = |suffix: &str| {
            let mut s = prefix.as_os_str().to_owned();
            s.push(suffix);
            std::path::PathBuf::from(s)
        };
        let report = super::convergence::ExperimentReport {
            records: vec![self.record.clone()],
        };
        report.save_csv(&with(".csv"))?;
        save_vtk(self.op.space(), &self.coeffs, &with(".vtk"))?;
        save_cross_section(&self.cross_section(Line::X(0.5), CROSS_SAMPLES)?, &with("_cross_x.csv"))?;
        save_cross_section(&self.cross_section(Line::Y(0.75), CROSS_SAMPLES)?, &with("_cross_y.csv"))?;
        Ok(())
    }
}
