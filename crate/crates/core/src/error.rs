use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("unknown kernel `{name}` (known: {known})")]
    UnknownKernel { name: String, known: String },
    #[error("invalid parameter for kernel `{kernel}`: {reason}")]
    InvalidParameter { kernel: String, reason: String },
    #[error("moment m_{order} of `{kernel}` is undefined: symbol is only {smooth_order} times differentiable at 0")]
    MomentUndefined {
        kernel: String,
        order: u32,
        smooth_order: u32,
    },
    #[error("symbols differ but their Taylor coefficients agree through order {depth}")]
    Indistinguishable { depth: u32 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid size must be an even number >= 16, got {0}")]
    BadSize(usize),
    #[error("domain half-length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("field has {got} values, grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field contains a non-finite value at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl ConfigError {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

/// Why an integration stopped before the final time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AbortReason {
    /// Energy reached the top of the retained spectral band: the solution is
    /// steepening beyond what the grid resolves.
    #[error("resolution exhausted")]
    ResolutionExhausted,
    #[error("blowup")]
    Blowup,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Abort(#[from] AbortReason),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("run with kernel `{kernel}` at delta={delta} aborted at t={time}: {reason}")]
    Aborted {
        kernel: String,
        delta: f64,
        time: f64,
        reason: AbortReason,
    },
    #[error("need >= 4 deltas, got {0}")]
    TooFewDeltas(usize),
    #[error("deltas must span at least a factor of 8, got ratio {0}")]
    NarrowSpan(f64),
    #[error("deltas must be positive and distinct")]
    BadDeltas,
    #[error(
        "d(T)={d_t:e} at delta={delta} is below 1e3 x noise floor {floor:e}; raise the delta range"
    )]
    BelowNoiseFloor { delta: f64, d_t: f64, floor: f64 },
    #[error("kernels `{0}` and `{1}` have identical symbols; no rate to fit")]
    NoRate(String, String),
}
