use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use super::norms::l2_error;
use super::problems::{manufactured_problem, manufactured_solution};
use crate::advop::DiscreteOperator;
use crate::egspace::{Degrees, EgSpace};
use crate::mesh::{build_unit_square_mesh, TwoLevelMesh};
use crate::projection::eg_project_initial;
use crate::timestep::{run, RunOptions};
use crate::{Error, Result};

/// Default CFL number of the convergence sweeps.
pub const CONVERGENCE_CFL: f64 = 0.1;

/// Which `(R, r)` pairs a sweep visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Every `R ≤ r`.
    Table,
    /// `h = H/4`, i.e. `r = R + 2`.
    HQuarter,
    /// `h = 2H²`, i.e. `r = 2R − 2`.
    HSquare,
    /// `H = 1/2` (`R = 2`) and `r = 2, 3, …`.
    FixedH,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Self::Table),
            "h-quarter" => Ok(Self::HQuarter),
            "h-square" => Ok(Self::HSquare),
            "fixed-H" | "fixed-h" => Ok(Self::FixedH),
            _ => Err(Error::InvalidArgument(format!(
                "unknown strategy {s:?} (expected table, h-quarter, h-square or fixed-H)"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Table => "table",
            Self::HQuarter => "h-quarter",
            Self::HSquare => "h-square",
            Self::FixedH => "fixed-H",
        })
    }
}

/// Coarse level of `H = 1/2`: level `R` has element diameter `2^{1-R}`.
pub const FIXED_H_LEVEL: u32 = 2;

/// `(R, r)` pairs of a sweep, in run order.
pub fn strategy_levels(strategy: Strategy, big_r_max: u32, r_max: u32) -> Vec<(u32, u32)> {
    match strategy {
        Strategy::Table => (1..=big_r_max)
            .flat_map(|big| (big..=r_max).map(move |r| (big, r)))
            .collect(),
        Strategy::HQuarter => (1..=big_r_max)
            .map(|big| (big, big + 2))
            .filter(|&(_, r)| r <= r_max)
            .collect(),
        Strategy::HSquare => (2..=big_r_max)
            .map(|big| (big, 2 * big - 2))
            .filter(|&(big, r)| r >= big && r <= r_max)
            .collect(),
        Strategy::FixedH => (FIXED_H_LEVEL..=r_max).map(|r| (FIXED_H_LEVEL, r)).collect(),
    }
}

/// One row of a convergence report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub k: usize,
    pub l: i32,
    pub m: i32,
    #[serde(rename = "R")]
    pub coarse_level: u32,
    pub r: u32,
    pub dofs: usize,
    pub l2_error: f64,
    pub seconds: f64,
}

/// Observed order between two runs differing in one refinement level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rate {
    pub from: (u32, u32),
    pub to: (u32, u32),
    pub rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<RunRecord>,
}

impl ExperimentReport {
    fn find(&self, k: usize, l: i32, m: i32, big: u32, r: u32) -> Option<&RunRecord> {
        self.records
            .iter()
            .find(|x| (x.k, x.l, x.m, x.coarse_level, x.r) == (k, l, m, big, r))
    }

    /// `log₂(e_prev / e_next)` for every pair of runs of the same space
    /// whose `(R, r)` differ by one in exactly one entry.
    pub fn rates(&self) -> Vec<Rate> {
        let mut out = Vec::new();
        for a in &self.records {
            for (db, dr) in [(0, 1), (1, 0)] {
                if let Some(b) = self.find(a.k, a.l, a.m, a.coarse_level + db, a.r + dr) {
                    out.push(Rate {
                        from: (a.coarse_level, a.r),
                        to: (b.coarse_level, b.r),
                        rate: (a.l2_error / b.l2_error).log2(),
                    });
                }
            }
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Least-squares slope of `−log₂ e` against `level`: the observed order
/// when the mesh width halves per level.
pub fn fit_order(levels: &[f64], errors: &[f64]) -> f64 {
    let n = levels.len() as f64;
    let y: Vec<f64> = errors.iter().map(|e| -e.log2()).collect();
    let mx = levels.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = levels.iter().zip(&y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = levels.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Space on the level-`big_r` unit-square mesh with every coarse element
/// refined to depth `r − R`.
pub fn uniform_space(degrees: Degrees, big_r: u32, r: u32) -> Result<EgSpace> {
    if r < big_r {
        return Err(Error::InvalidArgument(format!(
            "fine level r = {r} below coarse level R = {big_r}"
        )));
    }
    let mesh = TwoLevelMesh::uniform(build_unit_square_mesh(big_r)?, r - big_r)?;
    EgSpace::new(mesh, degrees)
}

/// Solves the manufactured problem on `(R, r)` and returns the final-time
/// L² error.
pub fn run_manufactured(degrees: Degrees, big_r: u32, r: u32, cfl: f64) -> Result<RunRecord> {
    let start = Instant::now();
    let space = uniform_space(degrees, big_r, r)?;
    let problem = manufactured_problem();
    let c0 = eg_project_initial(&space, |x| manufactured_solution(0.0, x))?;
    let op = DiscreteOperator::new(space)?;
    let t_end = problem.final_time;
    let out = run(&op, &problem, &c0, t_end, RunOptions { cfl, probe_every: 0 })?;
    let err = l2_error(op.space(), &out.coeffs, |x| manufactured_solution(t_end, x))?;
    Ok(RunRecord {
        k: degrees.k,
        l: degrees.l_int(),
        m: degrees.m_int(),
        coarse_level: big_r,
        r,
        dofs: op.space().size(),
        l2_error: err,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs the manufactured problem over the `(R, r)` pairs of `strategy`.
/// `on_record` sees every record as soon as it is available.
pub fn run_convergence<F>(
    degrees: Degrees,
    big_r_max: u32,
    r_max: u32,
    strategy: Strategy,
    cfl: f64,
    mut on_record: F,
) -> Result<ExperimentReport>
where
    F: FnMut(&RunRecord),
{
    let mut report = ExperimentReport::default();
    for (big, r) in strategy_levels(strategy, big_r_max, r_max) {
        let rec = run_manufactured(degrees, big, r, cfl)?;
        on_record(&rec);
        report.records.push(rec);
    }
    Ok(report)
}
