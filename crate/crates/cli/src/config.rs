//! Experiment configuration files.
//!
//! Every section and key is optional. A run manifest written by the tool is
//! itself a valid configuration: the `[manifest]` table is ignored on load.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use convwave_core::{
    lookup, validate_deltas, CompareError, ConfigError as CoreConfigError, Grid, GridError,
    InitialData, KernelSpec, NormOrder, SimConfig, StepSize,
};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use toml::Spanned;

pub const DEFAULT_DELTAS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
pub const DEFAULT_SUITE: [&str; 5] = [
    "bbm",
    "rosenau",
    "rectangular",
    "five_point",
    "fractional:gamma=0.75",
];

/// A configuration problem, anchored to a line of the source when possible.
#[derive(Debug, thiserror::Error)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.path, line, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

/// A real number that may be written as a TOML integer.
#[derive(Debug, Clone, Copy)]
struct Num(f64);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

/// Time step: `"auto"` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dt {
    Auto,
    Fixed(f64),
}

impl Serialize for Dt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Dt::Auto => s.serialize_str("auto"),
            Dt::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Dt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Dt;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"auto\" or a number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Dt, E> {
                if v == "auto" {
                    Ok(Dt::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Dt, E> {
                Ok(Dt::Fixed(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Dt, E> {
                Ok(Dt::Fixed(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

type Field<T> = Option<Spanned<T>>;

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: Option<RawGrid>,
    initial: Option<RawInitial>,
    run: Option<RawRun>,
    compare: Option<RawCompare>,
    sweep: Option<RawSweep>,
    suite: Option<RawSuite>,
    #[allow(dead_code)]
    manifest: Option<toml::Table>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: Field<i64>,
    half_length: Field<Num>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    kind: Field<String>,
    amplitude: Field<Num>,
    width: Field<Num>,
    mode: Field<i64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    kernel: Field<String>,
    delta: Field<Num>,
    p: Field<i64>,
    s: Field<Num>,
    t_end: Field<Num>,
    dt: Field<Dt>,
    snapshot_stride: Field<i64>,
    linearize: Field<bool>,
    safety: Field<Num>,
    write_fields: Field<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawCompare {
    kernels: Field<Vec<String>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    kernels: Field<Vec<String>>,
    deltas: Field<Vec<Num>>,
    tolerance: Field<Num>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    kernels: Field<Vec<String>>,
    deltas: Field<Vec<Num>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSection {
    pub n: usize,
    pub half_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialSection {
    pub kind: String,
    pub amplitude: f64,
    pub width: f64,
    pub mode: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSection {
    pub kernel: String,
    pub delta: f64,
    pub p: u32,
    pub s: f64,
    pub t_end: f64,
    pub dt: Dt,
    pub snapshot_stride: usize,
    pub linearize: bool,
    pub safety: f64,
    pub write_fields: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSection {
    pub kernels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSection {
    pub kernels: Vec<String>,
    pub deltas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSection {
    pub kernels: Vec<String>,
    pub deltas: Vec<f64>,
}

/// Fully resolved experiment: every value that affects the numerics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub grid: GridSection,
    pub initial: InitialSection,
    pub run: RunSection,
    pub compare: CompareSection,
    pub sweep: SweepSection,
    pub suite: SuiteSection,
}

impl Default for Experiment {
    fn default() -> Self {
        Experiment::parse("", "<defaults>").expect("defaults are valid")
    }
}

struct Ctx<'a> {
    src: &'a str,
    path: &'a str,
}

impl Ctx<'_> {
    fn line_of(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.src.len());
        self.src[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err(&self, span: Option<Range<usize>>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            path: self.path.to_string(),
            line: span.map(|s| self.line_of(s)),
            message: message.into(),
        }
    }

    fn get<T: Clone>(&self, f: &Field<T>, default: T) -> (T, Option<Range<usize>>) {
        match f {
            Some(s) => (s.get_ref().clone(), Some(s.span())),
            None => (default, None),
        }
    }

    fn positive(&self, key: &str, f: &Field<Num>, default: f64) -> Result<f64, ConfigError> {
        let (Num(v), span) = self.get(f, Num(default));
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(span, format!("{key} must be positive, got {v}")))
        }
    }

    fn count(&self, key: &str, f: &Field<i64>, default: i64, min: i64) -> Result<i64, ConfigError> {
        let (v, span) = self.get(f, default);
        if v >= min && v <= u32::MAX as i64 {
            Ok(v)
        } else {
            Err(self.err(span, format!("{key} must be an integer >= {min}, got {v}")))
        }
    }

    fn kernels(
        &self,
        key: &str,
        f: &Field<Vec<String>>,
        default: &[&str],
        exact: Option<usize>,
    ) -> Result<Vec<String>, ConfigError> {
        let (names, span) = self.get(f, default.iter().map(|s| s.to_string()).collect());
        if let Some(n) = exact {
            if names.len() != n {
                return Err(self.err(
                    span,
                    format!("{key} must name exactly {n} kernels, got {}", names.len()),
                ));
            }
        }
        if names.is_empty() {
            return Err(self.err(span, format!("{key} is empty")));
        }
        names
            .into_iter()
            .map(|n| {
                lookup(&n)
                    .map(|k| k.name().to_string())
                    .map_err(|e| self.err(span.clone(), format!("{key}: {e}")))
            })
            .collect()
    }

    fn deltas(&self, key: &str, f: &Field<Vec<Num>>) -> Result<Vec<f64>, ConfigError> {
        let (values, span) = self.get(f, DEFAULT_DELTAS.iter().map(|&d| Num(d)).collect());
        let values: Vec<f64> = values.into_iter().map(|Num(v)| v).collect();
        validate_deltas(&values)
            .map_err(|e: CompareError| self.err(span, format!("{key}: {e}")))?;
        Ok(values)
    }
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: shown.clone(),
            line: None,
            message: e.to_string(),
        })?;
        Self::parse(&src, &shown)
    }

    pub fn parse(src: &str, path: &str) -> Result<Self, ConfigError> {
        let ctx = Ctx { src, path };
        let raw: RawConfig =
            toml::from_str(src).map_err(|e| ctx.err(e.span(), e.message().trim().to_string()))?;

        let g = raw.grid.unwrap_or_default();
        let (n, n_span) = ctx.get(&g.n, 1024);
        let half_length = ctx.positive("grid.half_length", &g.half_length, 30.0)?;
        if n < 16 || n % 2 != 0 {
            return Err(ctx.err(n_span, GridError::BadSize(n.max(0) as usize).to_string()));
        }
        let grid = GridSection {
            n: n as usize,
            half_length,
        };

        let i = raw.initial.unwrap_or_default();
        let (kind, kind_span) = ctx.get(&i.kind, "gaussian".to_string());
        if kind != "gaussian" && kind != "sine" {
            return Err(ctx.err(
                kind_span,
                format!("initial.kind must be \"gaussian\" or \"sine\", got \"{kind}\""),
            ));
        }
        let (Num(amplitude), amp_span) = ctx.get(&i.amplitude, Num(0.1));
        if !amplitude.is_finite() {
            return Err(ctx.err(amp_span, "initial.amplitude must be finite"));
        }
        let initial = InitialSection {
            kind,
            amplitude,
            width: ctx.positive("initial.width", &i.width, 3.0)?,
            mode: ctx.count("initial.mode", &i.mode, 1, 0)? as u32,
        };

        let r = raw.run.unwrap_or_default();
        let (kernel, kernel_span) = ctx.get(&r.kernel, "bbm".to_string());
        let kernel = lookup(&kernel)
            .map_err(|e| ctx.err(kernel_span, format!("run.kernel: {e}")))?
            .name()
            .to_string();
        let (Num(s), s_span) = ctx.get(&r.s, Num(2.0));
        if NormOrder::new(s).is_none() {
            return Err(ctx.err(s_span, format!("run.s must be >= 0, got {s}")));
        }
        let (dt, dt_span) = ctx.get(&r.dt, Dt::Auto);
        if let Dt::Fixed(v) = dt {
            if !(v.is_finite() && v > 0.0) {
                return Err(ctx.err(dt_span, format!("run.dt must be positive, got {v}")));
            }
        }
        let (Num(safety), safety_span) = ctx.get(&r.safety, Num(1e-8));
        if safety.is_nan() || safety <= 0.0 {
            return Err(ctx.err(
                safety_span,
                format!("run.safety must be positive, got {safety}"),
            ));
        }
        let run = RunSection {
            kernel,
            delta: ctx.positive("run.delta", &r.delta, 0.1)?,
            p: ctx.count("run.p", &r.p, 1, 1)? as u32,
            s,
            t_end: ctx.positive("run.t_end", &r.t_end, 1.0)?,
            dt,
            snapshot_stride: ctx.count("run.snapshot_stride", &r.snapshot_stride, 1, 1)? as usize,
            linearize: ctx.get(&r.linearize, false).0,
            safety,
            write_fields: ctx.get(&r.write_fields, false).0,
        };

        let c = raw.compare.unwrap_or_default();
        let compare = CompareSection {
            kernels: ctx.kernels("compare.kernels", &c.kernels, &["bbm", "dirac"], Some(2))?,
        };
        let sw = raw.sweep.unwrap_or_default();
        let tolerance = sw
            .tolerance
            .is_some()
            .then(|| ctx.positive("sweep.tolerance", &sw.tolerance, 0.0))
            .transpose()?;
        let sweep = SweepSection {
            kernels: ctx.kernels("sweep.kernels", &sw.kernels, &["bbm", "dirac"], Some(2))?,
            deltas: ctx.deltas("sweep.deltas", &sw.deltas)?,
            tolerance,
        };
        let su = raw.suite.unwrap_or_default();
        let suite = SuiteSection {
            kernels: ctx.kernels("suite.kernels", &su.kernels, &DEFAULT_SUITE, None)?,
            deltas: ctx.deltas("suite.deltas", &su.deltas)?,
        };

        let exp = Experiment {
            grid,
            initial,
            run,
            compare,
            sweep,
            suite,
        };
        exp.sim_config().map_err(|e| ctx.err(None, e.to_string()))?;
        Ok(exp)
    }

    pub fn initial_data(&self) -> InitialData {
        match self.initial.kind.as_str() {
            "sine" => InitialData::Sine {
                amplitude: self.initial.amplitude,
                mode: self.initial.mode,
            },
            _ => InitialData::Gaussian {
                amplitude: self.initial.amplitude,
                width: self.initial.width,
            },
        }
    }

    /// Solver configuration for the `[run]` kernel.
    pub fn sim_config(&self) -> Result<SimConfig, CoreConfigError> {
        let grid = Grid::new(self.grid.n, self.grid.half_length)?;
        let kernel: KernelSpec = lookup(&self.run.kernel)?;
        let mut cfg = SimConfig::new(kernel, self.run.delta, self.initial_data().sample(grid));
        cfg.p = self.run.p;
        cfg.s = NormOrder::new(self.run.s)
            .ok_or_else(|| CoreConfigError::invalid("s", "must be >= 0"))?;
        cfg.t_end = self.run.t_end;
        cfg.dt = match self.run.dt {
            Dt::Auto => StepSize::Auto,
            Dt::Fixed(v) => StepSize::Fixed(v),
        };
        cfg.snapshot_stride = self.run.snapshot_stride;
        cfg.linearize = self.run.linearize;
        cfg.safety = self.run.safety;
        cfg.validate()?;
        Ok(cfg)
    }
}
