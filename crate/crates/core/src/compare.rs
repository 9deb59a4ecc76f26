//! Kernel-pair comparison: run two kernels from the same initial data, track
//! ‖u₁(t) − u₂(t)‖_{H^s}, and fit the decay rate of the difference in δ.

use rayon::prelude::*;

use crate::error::{AbortReason, CompareError};
use crate::kernel::{matching_order, KernelSpec, MatchingOrder};
use crate::numerics::{fit_line, LineFit};
use crate::spectral::Spectral;
use crate::stepper::{energy_report, Outcome, SimConfig, Solver, StepSize, Trajectory};

/// Practical noise floor relative to ‖u0‖_{H^s}.
pub const NOISE_FLOOR_REL: f64 = 1e-12;
/// d(T) must exceed the noise floor by this factor at every δ.
pub const NOISE_MARGIN: f64 = 1e3;
pub const MIN_DELTAS: usize = 4;
pub const MIN_DELTA_SPAN: f64 = 8.0;

/// Default slope tolerance: ±0.2 below rate 3, ±0.3 from rate 4 up.
pub fn slope_tolerance(predicted: f64) -> f64 {
    if predicted < 3.0 {
        0.2
    } else {
        0.3
    }
}

/// Health summary of one member run of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub kernel: String,
    pub outcome: Outcome,
    pub dt: f64,
    pub mass_drift: f64,
    pub c1: f64,
    pub c2: f64,
    pub sandwich_ok: bool,
    pub growth_rate: Option<f64>,
    pub max_boundary: f64,
}

impl RunSummary {
    fn from_run(traj: &Trajectory, cfg: &SimConfig) -> Self {
        let energy = energy_report(traj, cfg);
        RunSummary {
            kernel: cfg.kernel.name().to_string(),
            outcome: traj.outcome,
            dt: traj.dt,
            mass_drift: traj.max_mass_drift(),
            c1: energy.c1,
            c2: energy.c2,
            sandwich_ok: energy.sandwich_holds(),
            growth_rate: energy.growth_rate,
            max_boundary: traj
                .diagnostics
                .iter()
                .map(|d| d.boundary_mag)
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub kernel: String,
    pub reason: AbortReason,
    pub time: f64,
}

/// d(t) = ‖u₁(t) − u₂(t)‖_{H^s} at the snapshot times shared by both runs.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceCurve {
    pub kernels: (String, String),
    pub delta: f64,
    pub s: f64,
    pub times: Vec<f64>,
    pub d: Vec<f64>,
    pub runs: [RunSummary; 2],
    /// Set when either run stopped early; the curve ends at the earlier stop.
    pub truncated: Option<Truncation>,
}

impl DivergenceCurve {
    pub fn final_divergence(&self) -> f64 {
        *self.d.last().expect("curve holds t = 0")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("curve holds t = 0")
    }

    /// max over t ∈ [T/10, T] of |d(t) / (t·d(T)/T) − 1|: zero for a
    /// difference growing exactly linearly in time.
    pub fn linearity_score(&self) -> f64 {
        let t_end = self.final_time();
        let d_end = self.final_divergence();
        if d_end == 0.0 || t_end == 0.0 {
            return 0.0;
        }
        self.times
            .iter()
            .zip(&self.d)
            .filter(|(t, _)| **t >= 0.1 * t_end - 1e-12 && **t > 0.0)
            .map(|(t, d)| (d / (t * d_end / t_end) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Resolves an automatic step to a fixed one valid for every listed kernel.
fn shared_step(cfg: &SimConfig, kernels: &[&KernelSpec]) -> StepSize {
    match cfg.dt {
        StepSize::Fixed(dt) => StepSize::Fixed(dt),
        StepSize::Auto => {
            let mass = kernels.iter().map(|k| k.mass_bound()).fold(1.0, f64::max);
            StepSize::Fixed(cfg.auto_dt_for(mass).min(cfg.t_end))
        }
    }
}

/// Integrates both kernels from `cfg`'s initial data with identical grid,
/// δ, p, step and horizon, and measures their H^s distance over time.
pub fn run_pair(
    k1: &KernelSpec,
    k2: &KernelSpec,
    cfg: &SimConfig,
) -> Result<DivergenceCurve, CompareError> {
    let mut base = cfg.clone();
    base.dt = shared_step(cfg, &[k1, k2]);
    let mut c1 = base.clone();
    c1.kernel = k1.clone();
    let mut c2 = base;
    c2.kernel = k2.clone();
    let s1 = Solver::new(&c1)?;
    let s2 = Solver::new(&c2)?;
    let (t1, t2) = rayon::join(|| s1.integrate(), || s2.integrate());

    let ops: &Spectral = s1.spectral();
    let shared = t1.times.len().min(t2.times.len());
    let d = (0..shared)
        .map(|i| ops.sobolev_norm(&t1.states[i].sub(&t2.states[i]), cfg.s))
        .collect();
    let stop = |t: &Trajectory, k: &KernelSpec| match t.outcome {
        Outcome::Aborted { reason, time } => Some(Truncation {
            kernel: k.name().to_string(),
            reason,
            time,
        }),
        Outcome::Completed => None,
    };
    let truncated = match (stop(&t1, k1), stop(&t2, k2)) {
        (Some(a), Some(b)) => Some(if b.time < a.time { b } else { a }),
        (a, b) => a.or(b),
    };
    Ok(DivergenceCurve {
        kernels: (k1.name().to_string(), k2.name().to_string()),
        delta: cfg.delta,
        s: cfg.s.value(),
        times: t1.times[..shared].to_vec(),
        d,
        runs: [
            RunSummary::from_run(&t1, &c1),
            RunSummary::from_run(&t2, &c2),
        ],
        truncated,
    })
}

/// Fitted decay of d(T) in δ for one kernel pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub kernels: (String, String),
    pub s: f64,
    /// Strictly decreasing.
    pub deltas: Vec<f64>,
    pub d_t: Vec<f64>,
    pub fit: LineFit,
    pub predicted: MatchingOrder,
    pub tolerance: f64,
    pub linearity: Vec<f64>,
    pub noise_floor: f64,
    pub curves: Vec<DivergenceCurve>,
}

impl RateReport {
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }

    /// exp(intercept): the constant C in d(T) ≈ C δ^rate.
    pub fn constant(&self) -> f64 {
        self.fit.intercept.exp()
    }

    pub fn predicted_rate(&self) -> f64 {
        self.predicted.rate().unwrap_or(0.0)
    }

    pub fn passed(&self) -> bool {
        (self.slope() - self.predicted_rate()).abs() <= self.tolerance
    }

    /// Every member run stayed hyperbolic with the energy sandwich intact.
    pub fn runs(&self) -> impl Iterator<Item = &RunSummary> {
        self.curves.iter().flat_map(|c| c.runs.iter())
    }
}

/// Fits log d(T) against log δ from already measured values.
pub fn fit_rate(deltas: &[f64], d_t: &[f64]) -> Option<LineFit> {
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = d_t.iter().map(|d| d.ln()).collect();
    fit_line(&xs, &ys)
}

/// Checks a δ list for a sweep and returns it in decreasing order.
pub fn validate_deltas(deltas: &[f64]) -> Result<Vec<f64>, CompareError> {
    if deltas.len() < MIN_DELTAS {
        return Err(CompareError::TooFewDeltas(deltas.len()));
    }
    if deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(CompareError::BadDeltas);
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(CompareError::BadDeltas);
    }
    let span = sorted[0] / sorted[sorted.len() - 1];
    if span < MIN_DELTA_SPAN * (1.0 - 1e-12) {
        return Err(CompareError::NarrowSpan(span));
    }
    Ok(sorted)
}

/// Sweeps δ with everything else fixed (including the time step, resolved
/// once for the whole sweep) and fits the slope of log d(T) against log δ.
pub fn sweep_rate(
    k1: &KernelSpec,
    k2: &KernelSpec,
    base: &SimConfig,
    deltas: &[f64],
) -> Result<RateReport, CompareError> {
    let deltas = validate_deltas(deltas)?;
    let predicted = matching_order(k1, k2)?;
    if predicted == MatchingOrder::Identical {
        return Err(CompareError::NoRate(k1.name().into(), k2.name().into()));
    }
    let mut cfg = base.clone();
    cfg.dt = shared_step(base, &[k1, k2]);
    cfg.validate()?;

    let curves: Vec<DivergenceCurve> = deltas
        .par_iter()
        .map(|&delta| {
            let mut c = cfg.clone();
            c.delta = delta;
            run_pair(k1, k2, &c)
        })
        .collect::<Result<_, _>>()?;
    if let Some((curve, t)) = curves
        .iter()
        .find_map(|c| c.truncated.as_ref().map(|t| (c, t)))
    {
        return Err(CompareError::Aborted {
            kernel: t.kernel.clone(),
            delta: curve.delta,
            time: t.time,
            reason: t.reason,
        });
    }

    // Control pair: identical dynamics bound the accumulated solver noise.
    let mut control_cfg = cfg.clone();
    control_cfg.delta = *deltas.last().expect("checked non-empty");
    let control = run_pair(k1, k1, &control_cfg)?.final_divergence();
    let u0_norm = Spectral::new(cfg.grid).sobolev_norm(&cfg.u0, cfg.s);
    let noise_floor = control.max(NOISE_FLOOR_REL * u0_norm);

    let d_t: Vec<f64> = curves
        .iter()
        .map(DivergenceCurve::final_divergence)
        .collect();
    for (&delta, &d) in deltas.iter().zip(&d_t) {
        if d.is_nan() || d < NOISE_MARGIN * noise_floor {
            return Err(CompareError::BelowNoiseFloor {
                delta,
                d_t: d,
                floor: noise_floor,
            });
        }
    }
    let fit = fit_rate(&deltas, &d_t).ok_or(CompareError::BadDeltas)?;
    let rate = predicted.rate().expect("non-identical");
    Ok(RateReport {
        kernels: (k1.name().to_string(), k2.name().to_string()),
        s: cfg.s.value(),
        linearity: curves
            .iter()
            .map(DivergenceCurve::linearity_score)
            .collect(),
        deltas,
        d_t,
        fit,
        predicted,
        tolerance: slope_tolerance(rate),
        noise_floor,
        curves,
    })
}

/// Sweeps each kernel against the Dirac kernel (the Hopf limit).
pub fn zero_dispersion_suite(
    kernels: &[KernelSpec],
    base: &SimConfig,
    deltas: &[f64],
) -> Result<Vec<RateReport>, CompareError> {
    let dirac = KernelSpec::dirac();
    kernels
        .par_iter()
        .map(|k| sweep_rate(k, &dirac, base, deltas))
        .collect()
}
