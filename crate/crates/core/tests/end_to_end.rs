use std::path::PathBuf;
use std::sync::Arc;

use proptest::prelude::*;
use subcell_eg::advop::{DiscreteOperator, InflowCondition, ProblemSpec};
use subcell_eg::egspace::{Degrees, EgSpace};
use subcell_eg::experiments::{
    manufactured_problem, manufactured_solution, run_convergence, run_manufactured, run_solid_body,
    uniform_space, ExperimentReport, Line, Strategy, CROSS_SAMPLES,
};
use subcell_eg::mesh::{build_unit_square_mesh, TwoLevelMesh};
use subcell_eg::projection::eg_project_initial;
use subcell_eg::timestep::{run, RunOptions};
use subcell_eg::Error;

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("subcell-eg-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn marked_space(level: u32, marks: &[u32], k: i32, l: i32, m: i32) -> EgSpace {
    let depth = marks.iter().copied().max().unwrap_or(0);
    let mesh = TwoLevelMesh::build(build_unit_square_mesh(level).unwrap(), marks, depth).unwrap();
    EgSpace::new(mesh, Degrees::new(k, l, m).unwrap()).unwrap()
}

#[test]
fn constant_state_survives_many_steps() {
    let problem = ProblemSpec::new(
        Arc::new(|_, _| [1.0, 0.5]),
        Arc::new(|_, _| 0.0),
        Arc::new(|_| 1.0),
        1.0,
    )
    .with_inflow(InflowCondition::Dirichlet(Arc::new(|_, _| 1.0)));
    let marks = [0, 1, 2, 1, 0, 0, 1, 2, 0, 0, 0, 1, 2, 0, 1, 0];
    for (k, l, m) in [(1, 0, 0), (2, 1, 1)] {
        let op = DiscreteOperator::new(marked_space(2, &marks, k, l, m)).unwrap();
        let c0 = op.space().constant_one();
        let out = run(&op, &problem, &c0, 1.0, RunOptions::default()).unwrap();
        assert!(out.steps > 100);
        let stats = op.field_stats(&out.coeffs).unwrap();
        assert!((stats.min - 1.0).abs() < 1e-8 && (stats.max - 1.0).abs() < 1e-8, "{stats:?}");
    }
}

#[test]
fn halving_cfl_barely_changes_the_error() {
    for (k, l, m) in [(1, 0, 0), (2, 1, 1)] {
        let d = Degrees::new(k, l, m).unwrap();
        let coarse = run_manufactured(d, 3, 3, 0.1).unwrap().l2_error;
        let fine = run_manufactured(d, 3, 3, 0.05).unwrap().l2_error;
        assert!((coarse - fine).abs() / fine < 0.01, "{d}: {coarse} vs {fine}");
    }
}

#[test]
fn diagonal_errors_decrease_with_level() {
    for (k, l, m) in [(1, 0, 0), (1, 1, 0), (1, 1, 1), (2, 0, 0), (2, 1, 0), (2, 1, 1), (2, 2, 2)] {
        let d = Degrees::new(k, l, m).unwrap();
        let errors: Vec<f64> = (1..=4).map(|lv| run_manufactured(d, lv, lv, 0.1).unwrap().l2_error).collect();
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "{d}: {errors:?}");
    }
}

#[test]
fn subcell_refinement_improves_piecewise_constant_enrichment() {
    let d = Degrees::new(1, 0, 0).unwrap();
    let errors: Vec<f64> = (3..=5).map(|r| run_manufactured(d, 1, r, 0.1).unwrap().l2_error).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn convergence_sweep_writes_csv() {
    let d = Degrees::new(1, 0, 0).unwrap();
    let mut seen = 0;
    let report = run_convergence(d, 2, 3, Strategy::Table, 0.1, |_| seen += 1).unwrap();
    assert_eq!(seen, 5);
    assert_eq!(report.records.len(), 5);
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,l,m,R,r,dofs,l2_error,seconds"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[..5], &["1", "0", "0", "1", "1"]);
    assert_eq!(text.lines().count(), 6);
    // (1,1)->(1,2), (1,2)->(1,3), (1,2)->(2,2), (1,3)->(2,3), (2,2)->(2,3)
    assert_eq!(report.rates().len(), 5);

    let path = scratch_dir("sweep").join("table.csv");
    report.save_csv(&path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn infeasible_levels_are_rejected() {
    let d = Degrees::new(1, 0, 0).unwrap();
    assert!(matches!(uniform_space(d, 3, 2), Err(Error::InvalidArgument(_))));
    let report = run_convergence(d, 3, 2, Strategy::HQuarter, 0.1, |_| {}).unwrap();
    assert_eq!(report, ExperimentReport::default());
}

#[test]
fn oversized_time_step_is_reported_as_instability() {
    let space = uniform_space(Degrees::new(1, 0, 0).unwrap(), 3, 5).unwrap();
    let problem = manufactured_problem();
    let c0 = eg_project_initial(&space, |x| manufactured_solution(0.0, x)).unwrap();
    let op = DiscreteOperator::new(space).unwrap();
    let err = run(&op, &problem, &c0, 50.0, RunOptions { cfl: 5.0, probe_every: 0 }).unwrap_err();
    assert!(matches!(err, Error::Unstable { .. }), "{err}");
}

#[test]
fn solid_body_outputs() {
    let run = run_solid_body(3, 4, 0.2, 5).unwrap();
    assert!(run.norm_nonincreasing(1e-6));
    assert!(run.final_stats.max <= 1.0 + 0.2 && run.final_stats.min >= -0.2);
    assert!(run.probes.len() > 2);

    let prefix = scratch_dir("rotate").join("sb");
    run.save(&prefix).unwrap();
    let read = |suffix: &str| std::fs::read_to_string(format!("{}{suffix}", prefix.display())).unwrap();
    assert!(read(".csv").starts_with("k,l,m,R,r,dofs,l2_error,seconds\n1,0,0,3,4,"));
    assert!(read(".vtk").starts_with("# vtk DataFile Version 3.0"));
    for suffix in ["_cross_x.csv", "_cross_y.csv"] {
        let text = read(suffix);
        assert_eq!(text.lines().next(), Some("s,u_num,u_exact"));
        assert_eq!(text.lines().count(), CROSS_SAMPLES + 1);
    }

    // The slot of the cylinder lies on x = 0.5: the exact profile there is
    // zero between the cone and the slot top.
    let cross = run.cross_section(Line::X(0.5), 101).unwrap();
    assert_eq!(cross.len(), 101);
    assert_eq!(cross[50].u_exact, 0.0);
    assert!((cross[25].u_exact - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rotation_never_creates_energy(marks in proptest::collection::vec(0u32..3, 16), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let problem = ProblemSpec::new(
            Arc::new(|_, x| [0.5 - x[1], x[0] - 0.5]),
            Arc::new(|_, _| 0.0),
            Arc::new(|_| 0.0),
            1.0,
        );
        let op = DiscreteOperator::new(marked_space(2, &marks, 2, 1, 0)).unwrap();
        let boundary = op.classify_boundary(&problem).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..op.space().size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut r = vec![0.0; c.len()];
        op.residual(&problem, &boundary, 0.0, &c, &mut r).unwrap();
        let power: f64 = c.iter().zip(&r).map(|(a, b)| a * b).sum();
        prop_assert!(power <= 1e-12);
    }

    #[test]
    fn condensed_solve_satisfies_mass_equation(marks in proptest::collection::vec(0u32..3, 4), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let op = DiscreteOperator::new(marked_space(1, &marks, 2, 1, 1)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x0: Vec<f64> = (0..op.space().size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = op.mass_matrix().mul_vec(&x0);
        let x = op.solve_mass(&r).unwrap();
        let back = op.mass_matrix().mul_vec(&x);
        let scale = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in back.iter().zip(&r) {
            prop_assert!((a - b).abs() <= 1e-8 * scale);
        }
    }
}
