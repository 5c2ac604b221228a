//! Explicit strong-stability-preserving Runge–Kutta integration of
//! `M ċ = r(c, t)`.

use crate::advop::{BoundaryClassification, DiscreteOperator, FieldStats, ProblemSpec};
use crate::{Error, Result};

/// A semi-discrete system `ċ = F(t, c)`.
pub trait SemiDiscrete {
    fn dim(&self) -> usize;
    fn derivative(&mut self, t: f64, c: &[f64], out: &mut [f64]) -> Result<()>;
}

/// Shu–Osher form: stage `i` is
/// `u⁽ⁱ⁾ = α₀ u⁰ + α₁ u⁽ⁱ⁻¹⁾ + β dt F(t + γ dt, u⁽ⁱ⁻¹⁾)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage {
    pub alpha_initial: f64,
    pub alpha_previous: f64,
    pub beta: f64,
    /// Time offset of the previous stage value, in units of `dt`.
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SspScheme {
    /// Heun's method.
    Ssp2,
    /// Shu–Osher third-order scheme.
    Ssp3,
}

const SSP2: [Stage; 2] = [
    Stage { alpha_initial: 1.0, alpha_previous: 0.0, beta: 1.0, gamma: 0.0 },
    Stage { alpha_initial: 0.5, alpha_previous: 0.5, beta: 0.5, gamma: 1.0 },
];

const SSP3: [Stage; 3] = [
    Stage { alpha_initial: 1.0, alpha_previous: 0.0, beta: 1.0, gamma: 0.0 },
    Stage { alpha_initial: 0.75, alpha_previous: 0.25, beta: 0.25, gamma: 1.0 },
    Stage { alpha_initial: 1.0 / 3.0, alpha_previous: 2.0 / 3.0, beta: 2.0 / 3.0, gamma: 0.5 },
];

impl SspScheme {
    /// The scheme with `k + 1` stages.
    pub fn for_degree(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Self::Ssp2),
            2 => Ok(Self::Ssp3),
            _ => Err(Error::InvalidArgument(format!("no SSP scheme for k = {k}"))),
        }
    }

    pub fn stages(&self) -> &'static [Stage] {
        match self {
            Self::Ssp2 => &SSP2,
            Self::Ssp3 => &SSP3,
        }
    }

    pub fn order(&self) -> usize {
        self.stages().len()
    }
}

/// Advances `c` by one step of size `dt` from time `t`.
pub fn step<S: SemiDiscrete>(scheme: SspScheme, system: &mut S, t: f64, dt: f64, c: &mut [f64]) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if c.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            actual: c.len(),
        });
    }
    let u0 = c.to_vec();
    let mut f = vec![0.0; c.len()];
    for s in scheme.stages() {
        system.derivative(t + s.gamma * dt, c, &mut f)?;
        for ((ci, u0i), fi) in c.iter_mut().zip(&u0).zip(&f) {
            *ci = s.alpha_initial * u0i + s.alpha_previous * *ci + s.beta * dt * fi;
        }
    }
    Ok(())
}

/// Integrates from `t0` to `t_end` with steps of size `dt`, clipping the last
/// step to land on `t_end`. `on_step(t, c)` runs after every step and may
/// abort the run by returning an error.
pub fn integrate<S, F>(
    scheme: SspScheme,
    system: &mut S,
    c: &mut [f64],
    t0: f64,
    t_end: f64,
    dt: f64,
    mut on_step: F,
) -> Result<usize>
where
    S: SemiDiscrete,
    F: FnMut(f64, &[f64]) -> Result<()>,
{
    let mut t = t0;
    let mut steps = 0;
    while t < t_end {
        let h = if t + dt >= t_end * (1.0 - 1e-14) { t_end - t } else { dt };
        step(scheme, system, t, h, c)?;
        t = if h == t_end - t { t_end } else { t + h };
        steps += 1;
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unstable { time: t });
        }
        on_step(t, c)?;
    }
    Ok(steps)
}

/// Observation recorded by [`run`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub time: f64,
    pub stats: FieldStats,
}

/// The EG semi-discretisation of an advection problem as an ODE system.
/// Mass solves are warm-started from the previous derivative.
#[derive(Debug)]
pub struct EgSystem<'a> {
    pub op: &'a DiscreteOperator,
    pub problem: &'a ProblemSpec,
    pub boundary: BoundaryClassification,
    residual: Vec<f64>,
    last: Vec<f64>,
    cg_iterations: usize,
}

impl<'a> EgSystem<'a> {
    pub fn new(op: &'a DiscreteOperator, problem: &'a ProblemSpec) -> Result<Self> {
        let n = op.space().size();
        Ok(Self {
            boundary: op.classify_boundary(problem)?,
            op,
            problem,
            residual: vec![0.0; n],
            last: vec![0.0; n],
            cg_iterations: 0,
        })
    }

    /// Total condensed-CG iterations spent so far.
    pub fn cg_iterations(&self) -> usize {
        self.cg_iterations
    }
}

impl SemiDiscrete for EgSystem<'_> {
    fn dim(&self) -> usize {
        self.op.space().size()
    }

    fn derivative(&mut self, t: f64, c: &[f64], out: &mut [f64]) -> Result<()> {
        self.op.residual(self.problem, &self.boundary, t, c, &mut self.residual)?;
        let stats = self.op.solve_mass_into(&self.residual, &mut self.last)?;
        self.cg_iterations += stats.iterations;
        out.copy_from_slice(&self.last);
        Ok(())
    }
}

/// Settings of [`run`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub cfl: f64,
    /// Record a probe every this many steps (and at the final time); zero
    /// records only the final state.
    pub probe_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            cfl: 0.2,
            probe_every: 0,
        }
    }
}

/// Result of [`run`].
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub coeffs: Vec<f64>,
    pub steps: usize,
    pub dt: f64,
    pub probes: Vec<Probe>,
    /// Condensed-CG iterations over all stages.
    pub cg_iterations: usize,
}

/// Time step `cfl · h_min / ((2k + 1) · sup |a|)`.
pub fn stable_dt(op: &DiscreteOperator, problem: &ProblemSpec, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0) {
        return Err(Error::InvalidArgument(format!("cfl must be positive, got {cfl}")));
    }
    let k = op.space().degrees().k as f64;
    let speed = op.max_speed(problem);
    let h = op.space().mesh().min_leaf_diameter();
    Ok(if speed > 0.0 {
        cfl * h / ((2.0 * k + 1.0) * speed)
    } else {
        cfl * h
    })
}

/// Integrates `problem` from `c0` at `t = 0` to `t_end` with the `k + 1`
/// stage SSP scheme. The inflow classification is re-checked at every probe.
pub fn run(
    op: &DiscreteOperator,
    problem: &ProblemSpec,
    c0: &[f64],
    t_end: f64,
    options: RunOptions,
) -> Result<RunOutput> {
    let scheme = SspScheme::for_degree(op.space().degrees().k)?;
    let dt = stable_dt(op, problem, options.cfl)?;
    let mut system = EgSystem::new(op, problem)?;
    let mut c = c0.to_vec();
    let mut probes = vec![Probe {
        time: 0.0,
        stats: op.field_stats(&c)?,
    }];
    let boundary = system.boundary.clone();
    let mut count = 0;
    let steps = integrate(scheme, &mut system, &mut c, 0.0, t_end, dt, |t, c| {
        count += 1;
        let last = t >= t_end;
        if last || (options.probe_every > 0 && count % options.probe_every == 0) {
            op.check_inflow(problem, &boundary, t)?;
            probes.push(Probe {
                time: t,
                stats: op.field_stats(c)?,
            });
        }
        Ok(())
    })?;
    Ok(RunOutput {
        coeffs: c,
        steps,
        dt,
        probes,
        cg_iterations: system.cg_iterations(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

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

    struct Zero;

    impl SemiDiscrete for Zero {
        fn dim(&self) -> usize {
            3
        }

        fn derivative(&mut self, _t: f64, _c: &[f64], out: &mut [f64]) -> Result<()> {
            out.fill(0.0);
            Ok(())
        }
    }

    /// `ċ = t`, exact `c = t²/2`.
    struct Clock;

    impl SemiDiscrete for Clock {
        fn dim(&self) -> usize {
            1
        }

        fn derivative(&mut self, t: f64, _c: &[f64], out: &mut [f64]) -> Result<()> {
            out[0] = t;
            Ok(())
        }
    }

    #[test]
    fn stages_are_convex() {
        for scheme in [SspScheme::Ssp2, SspScheme::Ssp3] {
            for s in scheme.stages() {
                assert!(s.alpha_initial >= 0.0 && s.alpha_previous >= 0.0 && s.beta >= 0.0);
                assert!((s.alpha_initial + s.alpha_previous - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn heun_step_on_decay() {
        let mut c = [1.0];
        step(SspScheme::Ssp2, &mut Decay, 0.0, 0.1, &mut c).unwrap();
        assert!((c[0] - 0.905).abs() < 1e-15);
    }

    #[test]
    fn reproduces_exponential_taylor_series() {
        // Amplification factor of one step on ċ = −c is the Taylor
        // polynomial of exp(−dt) up to the formal order.
        let dt: f64 = 0.3;
        let mut c = [1.0];
        step(SspScheme::Ssp3, &mut Decay, 0.0, dt, &mut c).unwrap();
        let taylor = 1.0 - dt + dt * dt / 2.0 - dt.powi(3) / 6.0;
        assert!((c[0] - taylor).abs() < 1e-15);
    }

    #[test]
    fn zero_derivative_leaves_state() {
        let mut c = [1.0, -2.0, 3.5];
        step(SspScheme::Ssp3, &mut Zero, 0.0, 0.5, &mut c).unwrap();
        for (a, b) in c.iter().zip([1.0, -2.0, 3.5]) {
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
    }

    #[test]
    fn observed_orders() {
        for (scheme, order) in [(SspScheme::Ssp2, 2.0), (SspScheme::Ssp3, 3.0)] {
            let errors: Vec<f64> = [0.1, 0.05, 0.025]
                .iter()
                .map(|&dt| {
                    let mut c = [1.0];
                    integrate(scheme, &mut Decay, &mut c, 0.0, 1.0, dt, |_, _| Ok(())).unwrap();
                    (c[0] - (-1.0f64).exp()).abs()
                })
                .collect();
            for w in errors.windows(2) {
                let p = (w[0] / w[1]).log2();
                assert!(p >= order - 0.1, "{scheme:?}: order {p}");
            }
        }
    }

    #[test]
    fn stage_times_are_consistent() {
        for scheme in [SspScheme::Ssp2, SspScheme::Ssp3] {
            let mut c = [0.0];
            integrate(scheme, &mut Clock, &mut c, 0.0, 1.0, 0.1, |_, _| Ok(())).unwrap();
            assert!((c[0] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn last_step_is_clipped() {
        let mut c = [1.0];
        let mut times = Vec::new();
        let mut ends = Vec::new();
        let steps = integrate(SspScheme::Ssp2, &mut Recorder(&mut times), &mut c, 0.0, 1.0, 0.3, |t, _| {
            ends.push(t);
            Ok(())
        })
        .unwrap();
        assert_eq!(steps, 4);
        assert_eq!(*ends.last().unwrap(), 1.0);
        assert!(times.iter().all(|&t| t <= 1.0));
    }

    /// Records the stage times.
    struct Recorder<'a>(&'a mut Vec<f64>);

    impl SemiDiscrete for Recorder<'_> {
        fn dim(&self) -> usize {
            1
        }

        fn derivative(&mut self, t: f64, _c: &[f64], out: &mut [f64]) -> Result<()> {
            self.0.push(t);
            out[0] = 0.0;
            Ok(())
        }
    }

    #[test]
    fn zero_final_time_returns_initial_state() {
        let mut c = [4.0];
        let steps = integrate(SspScheme::Ssp2, &mut Decay, &mut c, 0.0, 0.0, 0.1, |_, _| Ok(())).unwrap();
        assert_eq!((steps, c[0]), (0, 4.0));
    }

    #[test]
    fn nonfinite_state_is_unstable() {
        struct Blow;
        impl SemiDiscrete for Blow {
            fn dim(&self) -> usize {
                1
            }
            fn derivative(&mut self, _t: f64, _c: &[f64], out: &mut [f64]) -> Result<()> {
                out[0] = f64::INFINITY;
                Ok(())
            }
        }
        let mut c = [0.0];
        let err = integrate(SspScheme::Ssp2, &mut Blow, &mut c, 0.0, 1.0, 0.5, |_, _| Ok(()));
        assert!(matches!(err, Err(Error::Unstable { .. })));
    }

    #[test]
    fn rejects_nonpositive_step() {
        let mut c = [1.0];
        assert!(step(SspScheme::Ssp2, &mut Decay, 0.0, 0.0, &mut c).is_err());
    }
}
