use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use subcell_eg::egspace::Degrees;
use subcell_eg::experiments::{run_convergence, run_solid_body, Strategy, CONVERGENCE_CFL};
use subcell_eg::selftest;
use subcell_eg::timestep::RunOptions;

/// Subcell-enriched Galerkin solver for linear advection.
#[derive(Debug, Parser)]
#[command(name = "subcell-eg", version)]
struct Cli {
    /// TOML file with `[converge]` and `[rotate]` tables; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Manufactured-solution convergence sweep.
    Converge(ConvergeArgs),
    /// Solid body rotation through one full turn.
    Rotate(RotateArgs),
    /// Run the built-in property checks.
    Selftest,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ConvergeArgs {
    /// Polynomial degree of the continuous part.
    #[arg(long)]
    k: Option<usize>,
    /// Coarse enrichment degree (-1 for none).
    #[arg(long, allow_negative_numbers = true)]
    l: Option<i32>,
    /// Subcell enrichment degree (-1 for none).
    #[arg(long, allow_negative_numbers = true)]
    m: Option<i32>,
    /// Largest coarse level.
    #[arg(long = "R-max")]
    #[serde(rename = "R-max")]
    big_r_max: Option<u32>,
    /// Largest fine level.
    #[arg(long)]
    r_max: Option<u32>,
    /// table, h-quarter, h-square or fixed-H.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Output CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct RotateArgs {
    /// Coarse level.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    big_r: Option<u32>,
    /// Fine level.
    #[arg(long)]
    r: Option<u32>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Prefix of the CSV, VTK and cross-section files.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
    /// Record the field norm every N steps (0: start and end only).
    #[arg(long)]
    probe_every: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    #[serde(default)]
    converge: ConvergeArgs,
    #[serde(default)]
    rotate: RotateArgs,
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn merge<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

fn converge(args: ConvergeArgs, config: ConvergeArgs) -> Result<()> {
    let k = merge(args.k, config.k, 1);
    let l = merge(args.l, config.l, 0);
    let m = merge(args.m, config.m, 0);
    let big_r_max = merge(args.big_r_max, config.big_r_max, 5);
    let r_max = merge(args.r_max, config.r_max, 7);
    let strategy: Strategy = merge(args.strategy, config.strategy, "table".into()).parse()?;
    let cfl = merge(args.cfl, config.cfl, CONVERGENCE_CFL);
    let out = merge(args.out, config.out, PathBuf::from("convergence.csv"));
    let degrees = Degrees::new(k as i32, l, m)?;
    if big_r_max == 0 || r_max == 0 {
        bail!("levels start at 1");
    }

    println!("{degrees}, strategy {strategy}, cfl {cfl}");
    let report = run_convergence(degrees, big_r_max, r_max, strategy, cfl, |rec| {
        println!(
            "R={} r={} dofs={} l2_error={:.4e} ({:.2}s)",
            rec.coarse_level, rec.r, rec.dofs, rec.l2_error, rec.seconds
        );
    })?;
    if report.records.is_empty() {
        bail!("strategy {strategy} has no runs with R <= {big_r_max}, r <= {r_max}");
    }
    for rate in report.rates() {
        println!("rate {:?} -> {:?}: {:.3}", rate.from, rate.to, rate.rate);
    }
    report.save_csv(&out).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn rotate(args: RotateArgs, config: RotateArgs) -> Result<()> {
    let big_r = merge(args.big_r, config.big_r, 4);
    let r = merge(args.r, config.r, 4);
    let cfl = merge(args.cfl, config.cfl, RunOptions::default().cfl);
    let prefix = merge(args.out_prefix, config.out_prefix, PathBuf::from("rotate"));
    let probe_every = merge(args.probe_every, config.probe_every, 10);
    if big_r == 0 {
        bail!("levels start at 1");
    }

    let run = run_solid_body(big_r, r, cfl, probe_every)?;
    println!(
        "R={big_r} r={r} dofs={} steps={} l2_error={:.4e} ({:.2}s)",
        run.record.dofs, run.steps, run.record.l2_error, run.record.seconds
    );
    println!("range at t=2pi: [{:.4}, {:.4}]", run.final_stats.min, run.final_stats.max);
    if !run.norm_nonincreasing(1e-6) {
        println!("warning: L2 norm grew between probes");
    }
    run.save(&prefix).with_context(|| format!("writing {}.*", prefix.display()))?;
    println!("wrote {}.{{csv,vtk}} and cross-sections", prefix.display());
    Ok(())
}

fn selftest() -> Result<bool> {
    let checks = selftest::run_all()?;
    for c in &checks {
        println!("{c}");
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let unstable = err
        .chain()
        .any(|e| matches!(e.downcast_ref(), Some(subcell_eg::Error::Unstable { .. })));
    if unstable {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = load_config(cli.config.as_deref()).and_then(|config| match cli.command {
        Command::Converge(args) => converge(args, config.converge).map(|_| true),
        Command::Rotate(args) => rotate(args, config.rotate).map(|_| true),
        Command::Selftest => selftest(),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
