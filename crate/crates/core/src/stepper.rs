//! Time integration of u_t = -K_δ D_x (u + u^{p+1}) with classical RK4, plus
//! conservation and H^s-energy diagnostics.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{AbortReason, ConfigError, StepError};
use crate::kernel::KernelSpec;
use crate::spectral::{Field, Grid, NormOrder, Spectral};

pub const DEFAULT_CFL: f64 = 0.5;
pub const DEFAULT_SAFETY: f64 = 1e-8;
/// Relative slack allowed for rounding in the energy/norm sandwich check.
pub const SANDWICH_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// cfl·dx / (‖α‖_{L¹}(1 + (p+1) max|u0|^p)) with cfl = 0.5.
    Auto,
    Fixed(f64),
}

/// Analytic initial profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// a·exp(-(x/width)²)
    Gaussian { amplitude: f64, width: f64 },
    /// a·sin(πm x / L): a single resolved Fourier mode.
    Sine { amplitude: f64, mode: u32 },
}

impl InitialData {
    /// Default profile for rate experiments: amplitude 0.1, width 3.
    pub const DEFAULT: InitialData = InitialData::Gaussian {
        amplitude: 0.1,
        width: 3.0,
    };

    pub fn sample(&self, grid: Grid) -> Field {
        match *self {
            InitialData::Gaussian { amplitude, width } => {
                Field::from_fn(grid, |x| amplitude * (-(x / width).powi(2)).exp())
            }
            InitialData::Sine { amplitude, mode } => {
                let xi = PI * mode as f64 / grid.half_length();
                Field::from_fn(grid, |x| amplitude * (xi * x).sin())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub kernel: KernelSpec,
    pub delta: f64,
    pub p: u32,
    pub grid: Grid,
    pub u0: Field,
    pub s: NormOrder,
    pub t_end: f64,
    pub dt: StepSize,
    pub snapshot_stride: usize,
    /// Drop u^{p+1}, leaving the linear equation u_t + K_δ u_x = 0.
    pub linearize: bool,
    /// Abort once the tail-band energy fraction exceeds this.
    pub safety: f64,
}

impl SimConfig {
    /// p = 1, s = 2, T = 1, automatic step, every step recorded.
    pub fn new(kernel: KernelSpec, delta: f64, u0: Field) -> Self {
        SimConfig {
            kernel,
            delta,
            p: 1,
            grid: *u0.grid(),
            u0,
            s: NormOrder::new(2.0).expect("valid order"),
            t_end: 1.0,
            dt: StepSize::Auto,
            snapshot_stride: 1,
            linearize: false,
            safety: DEFAULT_SAFETY,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(ConfigError::invalid(
                "delta",
                format!("must be positive, got {}", self.delta),
            ));
        }
        if self.p == 0 {
            return Err(ConfigError::invalid("p", "must be a positive integer"));
        }
        if *self.u0.grid() != self.grid {
            return Err(ConfigError::invalid(
                "u0",
                "initial field is not defined on the configured grid",
            ));
        }
        if !self.s.is_admissible() {
            return Err(ConfigError::invalid(
                "s",
                format!("must exceed 3/2, got {}", self.s.value()),
            ));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(ConfigError::invalid(
                "t_end",
                format!("must be positive, got {}", self.t_end),
            ));
        }
        if let StepSize::Fixed(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0 && dt <= self.t_end) {
                return Err(ConfigError::invalid(
                    "dt",
                    format!("must lie in (0, t_end], got {dt}"),
                ));
            }
        }
        if self.snapshot_stride == 0 {
            return Err(ConfigError::invalid(
                "snapshot_stride",
                "must be at least 1",
            ));
        }
        if self.safety.is_nan() || self.safety <= 0.0 {
            return Err(ConfigError::invalid("safety", "must be positive"));
        }
        Ok(())
    }

    pub fn auto_dt(&self) -> f64 {
        self.auto_dt_for(self.kernel.mass_bound())
    }

    pub(crate) fn auto_dt_for(&self, mass_bound: f64) -> f64 {
        let amp = self.u0.max_abs().powi(self.p as i32);
        DEFAULT_CFL * self.grid.dx() / (mass_bound * (1.0 + (self.p + 1) as f64 * amp))
    }

    /// Number of steps and the uniform step that lands exactly on t_end.
    pub fn step_plan(&self) -> (usize, f64) {
        let requested = match self.dt {
            StepSize::Auto => self.auto_dt().min(self.t_end),
            StepSize::Fixed(dt) => dt,
        };
        let steps = ((self.t_end / requested) - 1e-9).ceil().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }
}

/// Per-snapshot monitors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub mass: f64,
    pub hs_norm: f64,
    pub max_abs: f64,
    pub alias_frac: f64,
    pub boundary_mag: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Completed,
    Aborted { reason: AbortReason, time: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    pub diagnostics: Vec<Diagnostics>,
    pub outcome: Outcome,
    /// Step actually used.
    pub dt: f64,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.outcome == Outcome::Completed
    }

    pub fn final_state(&self) -> &Field {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory holds the initial time")
    }

    /// max_t |M(t) - M(0)| / (1 + |M(0)|) over the snapshots.
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.diagnostics[0].mass;
        self.diagnostics
            .iter()
            .map(|d| (d.mass - m0).abs() / (1.0 + m0.abs()))
            .fold(0.0, f64::max)
    }
}

/// Prepared right-hand side: transform plans and the mode multiplier
/// -iξ_m α̂(δξ_m) (zero at the Nyquist slot).
pub struct Solver {
    cfg: SimConfig,
    ops: Spectral,
    multiplier: Vec<Complex64>,
    cutoff: i64,
}

impl Solver {
    pub fn new(cfg: &SimConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let ops = Spectral::new(cfg.grid);
        let nyquist = cfg.grid.n() / 2;
        let multiplier = ops
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                if i == nyquist {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -xi * cfg.kernel.symbol_eval(cfg.delta, xi))
                }
            })
            .collect();
        Ok(Solver {
            cutoff: cfg.grid.dealias_cutoff(cfg.p) as i64,
            cfg: cfg.clone(),
            ops,
            multiplier,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn spectral(&self) -> &Spectral {
        &self.ops
    }

    fn rhs_values(&self, u: &[f64]) -> Result<Vec<f64>, AbortReason> {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(AbortReason::Blowup);
        }
        let mut total = self.ops.transform(u);
        if !self.cfg.linearize {
            let power = self.cfg.p as i32 + 1;
            let nonlinear: Vec<f64> = u.iter().map(|v| v.powi(power)).collect();
            let nh = self.ops.transform(&nonlinear);
            let grid = self.ops.grid();
            for (i, (t, n)) in total.iter_mut().zip(nh).enumerate() {
                if grid.mode(i).abs() <= self.cutoff {
                    *t += n;
                }
            }
        }
        for (t, m) in total.iter_mut().zip(&self.multiplier) {
            *t *= m;
        }
        Ok(self.ops.untransform(total))
    }

    /// -K_δ D_x(u + dealias(u^{p+1})).
    pub fn rhs(&self, u: &Field) -> Result<Field, AbortReason> {
        self.rhs_values(u.values())
            .map(|v| Field::from_raw(self.cfg.grid, v))
    }

    fn rk4_step(&self, u: &[f64], dt: f64) -> Result<Vec<f64>, AbortReason> {
        let axpy = |a: &[f64], h: f64, k: &[f64]| -> Vec<f64> {
            a.iter().zip(k).map(|(a, k)| a + h * k).collect()
        };
        let k1 = self.rhs_values(u)?;
        let k2 = self.rhs_values(&axpy(u, 0.5 * dt, &k1))?;
        let k3 = self.rhs_values(&axpy(u, 0.5 * dt, &k2))?;
        let k4 = self.rhs_values(&axpy(u, dt, &k3))?;
        Ok((0..u.len())
            .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }

    fn diagnostics(&self, f: &Field) -> Diagnostics {
        Diagnostics {
            mass: f.mass(),
            hs_norm: self.ops.sobolev_norm(f, self.cfg.s),
            max_abs: f.max_abs(),
            alias_frac: self.ops.tail_energy_fraction(f, self.cfg.p),
            boundary_mag: f.boundary_magnitude(),
        }
    }

    /// Fixed-step RK4 from 0 to t_end. Snapshots every `snapshot_stride`
    /// steps and at the final time; stops early on non-finite values or when
    /// the tail-band energy fraction exceeds `safety`.
    pub fn integrate(&self) -> Trajectory {
        let (steps, dt) = self.cfg.step_plan();
        let stride = self.cfg.snapshot_stride;
        let mut traj = Trajectory {
            times: vec![0.0],
            states: vec![self.cfg.u0.clone()],
            diagnostics: vec![self.diagnostics(&self.cfg.u0)],
            outcome: Outcome::Completed,
            dt,
        };
        let mut u = self.cfg.u0.values().to_vec();
        for n in 1..=steps {
            let t = n as f64 * dt;
            let next = match self.rk4_step(&u, dt) {
                Ok(v) if v.iter().all(|x| x.is_finite()) => v,
                _ => {
                    traj.outcome = Outcome::Aborted {
                        reason: AbortReason::Blowup,
                        time: t,
                    };
                    return traj;
                }
            };
            let field = Field::from_raw(self.cfg.grid, next);
            let diag = self.diagnostics(&field);
            let exhausted = diag.alias_frac > self.cfg.safety;
            if exhausted || n % stride == 0 || n == steps {
                u.copy_from_slice(field.values());
                traj.times.push(t);
                traj.states.push(field);
                traj.diagnostics.push(diag);
            } else {
                u = field.into_values();
            }
            if exhausted {
                traj.outcome = Outcome::Aborted {
                    reason: AbortReason::ResolutionExhausted,
                    time: t,
                };
                return traj;
            }
        }
        traj
    }
}

/// Right-hand side -K_δ D_x(u + u^{p+1}) for a single state.
pub fn rhs(cfg: &SimConfig, u: &Field) -> Result<Field, StepError> {
    Ok(Solver::new(cfg)?.rhs(u)?)
}

/// Runs the configured simulation. Configuration errors are returned;
/// numerical aborts are recorded in [`Trajectory::outcome`].
pub fn integrate(cfg: &SimConfig) -> Result<Trajectory, ConfigError> {
    Ok(Solver::new(cfg)?.integrate())
}

/// H^s energy E_s² = ½∫(1+w)(Λ^s u)² dx with w = (p+1)u^p, per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// ‖u‖_{H^s}, evaluated by the same quadrature as the energy.
    pub norm: Vec<f64>,
    /// min / max of 1 + w at each snapshot.
    pub c1_at: Vec<f64>,
    pub c2_at: Vec<f64>,
    /// min / max of 1 + w over the whole trajectory.
    pub c1: f64,
    pub c2: f64,
    /// Largest Δlog E_s / Δt over consecutive snapshots.
    pub growth_rate: Option<f64>,
    /// Set when 1 + w ≤ 0 somewhere: the smallness assumption failed.
    pub hyperbolicity_lost: bool,
}

impl EnergyTrace {
    /// Checks (c1/2)‖u‖² ≤ E_s² ≤ (c2/2)‖u‖² at every snapshot, up to
    /// [`SANDWICH_SLACK`] relative rounding.
    pub fn sandwich_holds(&self) -> bool {
        self.sandwich_violations().is_empty()
    }

    /// Snapshot indices where the sandwich inequality fails.
    pub fn sandwich_violations(&self) -> Vec<usize> {
        (0..self.times.len())
            .filter(|&i| {
                let e2 = self.energy[i] * self.energy[i];
                let n2 = self.norm[i] * self.norm[i];
                let slack = SANDWICH_SLACK * n2 * self.c2_at[i].abs().max(1.0);
                e2 < 0.5 * self.c1_at[i] * n2 - slack || e2 > 0.5 * self.c2_at[i] * n2 + slack
            })
            .collect()
    }
}

pub fn energy_report(traj: &Trajectory, cfg: &SimConfig) -> EnergyTrace {
    let ops = Spectral::new(cfg.grid);
    let dx = cfg.grid.dx();
    let mut out = EnergyTrace {
        times: traj.times.clone(),
        energy: Vec::with_capacity(traj.states.len()),
        norm: Vec::with_capacity(traj.states.len()),
        c1_at: Vec::with_capacity(traj.states.len()),
        c2_at: Vec::with_capacity(traj.states.len()),
        c1: f64::INFINITY,
        c2: f64::NEG_INFINITY,
        growth_rate: None,
        hyperbolicity_lost: false,
    };
    for state in &traj.states {
        let v = ops.bessel_potential(state, cfg.s);
        let weight: Vec<f64> = state
            .values()
            .iter()
            .map(|u| {
                if cfg.linearize {
                    1.0
                } else {
                    1.0 + (cfg.p + 1) as f64 * u.powi(cfg.p as i32)
                }
            })
            .collect();
        let weighted: f64 = weight.iter().zip(v.values()).map(|(a, v)| a * v * v).sum();
        let plain: f64 = v.values().iter().map(|v| v * v).sum();
        let c1 = weight.iter().copied().fold(f64::INFINITY, f64::min);
        let c2 = weight.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.energy.push((0.5 * dx * weighted).max(0.0).sqrt());
        out.norm.push((dx * plain).sqrt());
        out.c1_at.push(c1);
        out.c2_at.push(c2);
        out.c1 = out.c1.min(c1);
        out.c2 = out.c2.max(c2);
    }
    out.hyperbolicity_lost = out.c1 <= 0.0;
    out.growth_rate = out
        .times
        .windows(2)
        .zip(out.energy.windows(2))
        .filter(|(t, e)| e[0] > 0.0 && e[1] > 0.0 && t[1] > t[0])
        .map(|(t, e)| (e[1].ln() - e[0].ln()) / (t[1] - t[0]))
        .fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |a| a.max(r)))
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(256, 30.0).unwrap()
    }

    fn cfg(kernel: KernelSpec, u0: Field) -> SimConfig {
        SimConfig::new(kernel, 0.2, u0)
    }

    #[test]
    fn rhs_of_constants_vanishes() {
        let g = grid();
        let c = cfg(KernelSpec::bbm(), Field::zeros(g));
        assert!(rhs(&c, &Field::zeros(g)).unwrap().max_abs() == 0.0);
        let r = rhs(&c, &Field::from_fn(g, |_| 0.3)).unwrap();
        assert!(r.max_abs() < 1e-15);
    }

    #[test]
    fn rhs_single_mode_linear() {
        let g = grid();
        let xi1 = PI * 3.0 / g.half_length();
        let eps = 1e-3;
        let u = Field::from_fn(g, |x| eps * (xi1 * x).sin());
        for kernel in crate::kernel::catalog() {
            let mut c = cfg(kernel.clone(), u.clone());
            c.linearize = true;
            let r = rhs(&c, &u).unwrap();
            let speed = kernel.symbol_eval(c.delta, xi1);
            for (j, v) in r.values().iter().enumerate() {
                let exact = -speed * xi1 * eps * (xi1 * g.x(j)).cos();
                assert!((v - exact).abs() < 1e-12, "{kernel}");
            }
        }
    }

    #[test]
    fn rhs_has_zero_mean() {
        let g = grid();
        let u = Field::from_fn(g, |x| {
            0.2 * (-(x - 1.0).powi(2)).exp() + 0.05 * (x / 3.0).cos()
        });
        for p in 1..=3 {
            let mut c = cfg(KernelSpec::rosenau(), u.clone());
            c.p = p;
            let r = rhs(&c, &u).unwrap();
            let ops = Spectral::new(g);
            assert!(r.spectrum(&ops)[0].norm() < 1e-17);
        }
    }

    #[test]
    fn rhs_rejects_non_finite() {
        let g = grid();
        let c = cfg(KernelSpec::bbm(), Field::zeros(g));
        let solver = Solver::new(&c).unwrap();
        let mut v = vec![0.0; g.n()];
        v[7] = f64::INFINITY;
        assert_eq!(solver.rhs_values(&v), Err(AbortReason::Blowup));
    }

    #[test]
    fn config_validation() {
        let g = grid();
        let base = cfg(KernelSpec::bbm(), Field::zeros(g));
        let mut c = base.clone();
        c.delta = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.s = NormOrder::new(1.0).unwrap();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.dt = StepSize::Fixed(2.0);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.u0 = Field::zeros(Grid::new(64, 30.0).unwrap());
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.p = 0;
        assert!(c.validate().is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn step_plan_lands_on_t_end() {
        let g = grid();
        let mut c = cfg(KernelSpec::bbm(), InitialData::DEFAULT.sample(g));
        c.dt = StepSize::Fixed(0.3);
        let (n, dt) = c.step_plan();
        assert_eq!(n, 4);
        assert!((n as f64 * dt - 1.0).abs() < 1e-15);
        c.dt = StepSize::Fixed(0.25);
        assert_eq!(c.step_plan().0, 4);
        let auto = c.auto_dt();
        assert!((auto - 0.5 * g.dx() / 1.2).abs() < 1e-15);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = grid();
        let c = cfg(KernelSpec::rosenau(), Field::zeros(g));
        let traj = integrate(&c).unwrap();
        assert!(traj.is_complete());
        assert!(traj.states.iter().all(|s| s.max_abs() == 0.0));
        let e = energy_report(&traj, &c);
        assert!(e.energy.iter().all(|&v| v == 0.0));
        assert_eq!((e.c1, e.c2), (1.0, 1.0));
        assert_eq!(e.growth_rate, None);
    }

    #[test]
    fn snapshots_follow_stride() {
        let g = grid();
        let mut c = cfg(KernelSpec::bbm(), InitialData::DEFAULT.sample(g));
        c.dt = StepSize::Fixed(0.1);
        c.snapshot_stride = 3;
        let traj = integrate(&c).unwrap();
        let t: Vec<f64> = traj
            .times
            .iter()
            .map(|t| (t * 10.0).round() / 10.0)
            .collect();
        assert_eq!(t, vec![0.0, 0.3, 0.6, 0.9, 1.0]);
    }

    #[test]
    fn linear_energy_is_half_norm() {
        let g = grid();
        let mut c = cfg(KernelSpec::bbm(), InitialData::DEFAULT.sample(g));
        c.linearize = true;
        let traj = integrate(&c).unwrap();
        let e = energy_report(&traj, &c);
        for (en, n) in e.energy.iter().zip(&e.norm) {
            assert!((en - n / 2f64.sqrt()).abs() <= 1e-14 * n);
        }
        // The quadrature norm agrees with the spectral one.
        for (n, d) in e.norm.iter().zip(&traj.diagnostics) {
            assert!((n - d.hs_norm).abs() < 1e-12 * d.hs_norm);
        }
        assert!(e.sandwich_holds());
    }

    #[test]
    fn small_gaussian_stays_hyperbolic() {
        let g = grid();
        let u0 = InitialData::Gaussian {
            amplitude: 0.1,
            width: 1.0,
        }
        .sample(g);
        let c = cfg(KernelSpec::bbm(), u0);
        let traj = integrate(&c).unwrap();
        let e = energy_report(&traj, &c);
        assert!(e.c1 >= 0.7, "c1 = {}", e.c1);
        assert!(!e.hyperbolicity_lost);
        assert!(e.sandwich_holds());
        assert!(e.growth_rate.is_some());
    }

    #[test]
    fn hopf_shock_exhausts_resolution() {
        // Characteristics of u0 = e^{-x²} under (u + u²)_x cross at
        // t* = 1 / max(-2u0') ≈ 0.583.
        let g = Grid::new(1024, 30.0).unwrap();
        let u0 = InitialData::Gaussian {
            amplitude: 1.0,
            width: 1.0,
        }
        .sample(g);
        let mut c = SimConfig::new(KernelSpec::dirac(), 0.1, u0);
        c.t_end = 3.0;
        let traj = integrate(&c).unwrap();
        match traj.outcome {
            Outcome::Aborted {
                reason: AbortReason::ResolutionExhausted,
                time,
            } => assert!(time > 0.2 && time < 0.6, "t = {time}"),
            other => panic!("unexpected outcome {other:?}"),
        }
        assert!(traj.diagnostics.iter().all(|d| d.alias_frac.is_finite()));
    }
}
