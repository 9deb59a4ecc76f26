//! Pseudospectral solver for the nonlocal wave equation
//! `u_t + α_δ ∗ (u + u^{p+1})_x = 0` on a periodic grid, with tools for
//! measuring how fast solutions for two kernels separate as δ → 0.

pub mod compare;
pub mod error;
pub mod io;
pub mod kernel;
pub mod numerics;
pub mod spectral;
pub mod stepper;

pub use compare::{
    fit_rate, run_pair, slope_tolerance, sweep_rate, validate_deltas, zero_dispersion_suite,
    DivergenceCurve, RateReport, RunSummary, Truncation,
};
pub use error::{AbortReason, CompareError, ConfigError, GridError, KernelError, StepError};
pub use kernel::{
    catalog, lookup, matching_order, moment, KernelKind, KernelSpec, MatchingOrder, Moment,
    MomentMethod, MomentTable,
};
pub use numerics::LineFit;
pub use spectral::{Field, Grid, NormOrder, Spectral};
pub use stepper::{
    energy_report, integrate, rhs, Diagnostics, EnergyTrace, InitialData, Outcome, SimConfig,
    Solver, StepSize, Trajectory,
};
