use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use subcell_eg::advop::DiscreteOperator;
use subcell_eg::egspace::Degrees;
use subcell_eg::experiments::{manufactured_problem, manufactured_solution, uniform_space};
use subcell_eg::projection::eg_project_initial;
use subcell_eg::timestep::{stable_dt, step, EgSystem, SspScheme};

const CASES: [((i32, i32, i32), u32, u32); 3] = [((1, 0, 0), 5, 5), ((2, 1, 1), 4, 5), ((2, 1, 0), 2, 6)];

/// The global pool and a one-thread pool; without the `parallel` feature only
/// the sequential fallback.
fn modes() -> Vec<(&'static str, Option<rayon_pool::Pool>)> {
    rayon_pool::modes()
}

#[cfg(feature = "parallel")]
mod rayon_pool {
    pub type Pool = rayon::ThreadPool;

    pub fn modes() -> Vec<(&'static str, Option<Pool>)> {
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        vec![("rayon", None), ("rayon-1thread", Some(single))]
    }

    pub fn install<R: Send>(pool: &Option<Pool>, f: impl FnOnce() -> R + Send) -> R {
        match pool {
            Some(p) => p.install(f),
            None => f(),
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod rayon_pool {
    pub enum Pool {}

    pub fn modes() -> Vec<(&'static str, Option<Pool>)> {
        vec![("sequential", None)]
    }

    pub fn install<R: Send>(_: &Option<Pool>, f: impl FnOnce() -> R + Send) -> R {
        f()
    }
}

fn bench_solver(c: &mut Criterion) {
    let problem = manufactured_problem();
    let modes = modes();
    for ((k, l, m), big_r, r) in CASES {
        let degrees = Degrees::new(k, l, m).unwrap();
        let space = uniform_space(degrees, big_r, r).unwrap();
        let c0 = eg_project_initial(&space, |x| manufactured_solution(0.0, x)).unwrap();
        let op = DiscreteOperator::new(space).unwrap();
        let boundary = op.classify_boundary(&problem).unwrap();
        let dt = stable_dt(&op, &problem, 0.1).unwrap();
        let scheme = SspScheme::for_degree(k as usize).unwrap();
        let label = format!("{degrees} R={big_r} r={r}");

        let mut group = c.benchmark_group("residual");
        for (mode, pool) in &modes {
            let mut out = vec![0.0; c0.len()];
            group.bench_function(BenchmarkId::new(*mode, &label), |b| {
                b.iter(|| rayon_pool::install(pool, || op.residual(&problem, &boundary, 0.1, &c0, &mut out).unwrap()))
            });
        }
        group.finish();

        let mut group = c.benchmark_group("mass_solve");
        let mut rhs = vec![0.0; c0.len()];
        op.residual(&problem, &boundary, 0.1, &c0, &mut rhs).unwrap();
        for (mode, pool) in &modes {
            let mut x = vec![0.0; c0.len()];
            group.bench_function(BenchmarkId::new(*mode, &label), |b| {
                b.iter(|| rayon_pool::install(pool, || op.solve_mass_into(&rhs, &mut x).unwrap()))
            });
        }
        group.finish();

        let mut group = c.benchmark_group("ssp_step");
        group.sample_size(20);
        for (mode, pool) in &modes {
            let mut system = EgSystem::new(&op, &problem).unwrap();
            let mut u = c0.clone();
            group.bench_function(BenchmarkId::new(*mode, &label), |b| {
                b.iter(|| rayon_pool::install(pool, || step(scheme, &mut system, 0.0, dt, &mut u).unwrap()))
            });
        }
        group.finish();
    }
}

criterion_group!(benches, bench_solver);
criterion_main!(benches);
