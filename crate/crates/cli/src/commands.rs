use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use convwave_core::io::{
    write_divergence, write_energy, write_field, write_rate, write_trajectory,
};
use convwave_core::kernel::symbol_formula;
use convwave_core::{
    catalog, energy_report, integrate, lookup, matching_order, run_pair, sweep_rate,
    zero_dispersion_suite, CompareError, ConfigError as CoreConfigError, DivergenceCurve,
    KernelError, KernelSpec, MatchingOrder, MomentTable, Outcome, RateReport,
};
use serde::Serialize;

use crate::config::{ConfigError, Experiment};

const MASS_DRIFT_LIMIT: f64 = 1e-12;
const IDENTICAL_LIMIT: f64 = 1e-14;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Aborted(String),
    #[error("{0}")]
    Assertion(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Aborted(_) | Failure::Assertion(_) => 2,
            _ => 1,
        }
    }
}

impl From<CoreConfigError> for Failure {
    fn from(e: CoreConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<CompareError> for Failure {
    fn from(e: CompareError) -> Self {
        match e {
            CompareError::Aborted { .. } | CompareError::BelowNoiseFloor { .. } => {
                Failure::Aborted(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

pub struct Options {
    pub out: PathBuf,
    pub quiet: bool,
}

impl Options {
    fn say(&self, line: &str) {
        if !self.quiet {
            emit(line);
        }
    }
}

// A closed pipe (e.g. `| head`) is not worth a panic.
fn emit(line: &str) {
    let _ = writeln!(io::stdout().lock(), "{line}");
}

#[derive(Serialize)]
struct ManifestInfo {
    version: &'static str,
    command: &'static str,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    abort_reason: Option<String>,
    duration_s: f64,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    #[serde(flatten)]
    experiment: &'a Experiment,
    manifest: ManifestInfo,
}

/// Collects output files under the output directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|source| Failure::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(BufWriter<File>) -> io::Result<()>,
    ) -> Result<(), Failure> {
        let path = self.dir.join(name);
        File::create(&path)
            .and_then(|file| f(BufWriter::new(file)))
            .map_err(|source| Failure::Io {
                path: path.clone(),
                source,
            })?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), Failure> {
        self.write(name, |mut w| io::Write::write_all(&mut w, body.as_bytes()))
    }

    fn finish(
        mut self,
        exp: &Experiment,
        command: &'static str,
        status: &str,
        abort_reason: Option<String>,
    ) -> Result<(), Failure> {
        let mut outputs = self.files.clone();
        outputs.push("manifest.toml".into());
        let manifest = Manifest {
            experiment: exp,
            manifest: ManifestInfo {
                version: env!("CARGO_PKG_VERSION"),
                command,
                status: status.to_string(),
                abort_reason,
                duration_s: self.started.elapsed().as_secs_f64(),
                outputs,
            },
        };
        let body = toml::to_string(&manifest).map_err(|e| Failure::Usage(e.to_string()))?;
        self.text("manifest.toml", &body)
    }
}

/// File-name-safe form of a kernel identifier.
fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn format_moment(v: f64) -> String {
    if v.abs() < 5e-7 {
        return "0".into();
    }
    let s = format!("{v:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn kernels(ids: &[String]) -> Result<(), Failure> {
    let list: Vec<KernelSpec> = if ids.is_empty() {
        catalog()
    } else {
        ids.iter().map(|id| lookup(id)).collect::<Result<_, _>>()?
    };
    let dirac = KernelSpec::dirac();
    let mut header = format!("{:<24} {:<42}", "kernel", "symbol");
    for j in 0..=MomentTable::DEFAULT_MAX_ORDER {
        header.push_str(&format!(" {:>10}", format!("m{j}")));
    }
    header.push_str(&format!(" {:>8} {:>10}  moments", "order", "mass_bound"));
    emit(&header);
    for k in &list {
        let table = MomentTable::build(k, MomentTable::DEFAULT_MAX_ORDER);
        let mut row = format!("{:<24} {:<42}", k.name(), symbol_formula(k));
        for m in &table.moments {
            let cell = m.map_or("undefined".to_string(), |m| format_moment(m.value));
            row.push_str(&format!(" {cell:>10}"));
        }
        let order = match matching_order(k, &dirac) {
            Ok(o) => o.to_string(),
            Err(e) => format!("error: {e}"),
        };
        let method = table
            .moments
            .iter()
            .flatten()
            .map(|m| m.method)
            .next_back()
            .map_or("-".to_string(), |m| m.to_string());
        row.push_str(&format!(" {order:>8} {:>10.6}  {method}", k.mass_bound()));
        emit(&row);
    }
    Ok(())
}

pub fn simulate(exp: &Experiment, opts: &Options) -> Result<(), Failure> {
    let cfg = exp.sim_config()?;
    let mut out = Outputs::new(&opts.out)?;
    let traj = integrate(&cfg)?;
    let energy = energy_report(&traj, &cfg);
    out.write("trajectory.csv", |w| write_trajectory(w, &traj))?;
    out.write("energy.csv", |w| write_energy(w, &energy))?;
    if exp.run.write_fields {
        for (i, state) in traj.states.iter().enumerate() {
            out.write(&format!("field_{i:05}.csv"), |w| write_field(w, state))?;
        }
    }
    let drift = traj.max_mass_drift();
    let summary =
        format!(
        "simulate {} delta={} dt={:.6e} t={} mass_drift={drift:.3e} c1={:.6} c2={:.6} sandwich={}",
        cfg.kernel.name(),
        cfg.delta,
        traj.dt,
        traj.final_time(),
        energy.c1,
        energy.c2,
        if energy.sandwich_holds() { "ok" } else { "violated" },
    );
    match traj.outcome {
        Outcome::Completed => {
            out.finish(exp, "simulate", "completed", None)?;
            opts.say(&format!("{summary} completed"));
            Ok(())
        }
        Outcome::Aborted { reason, time } => {
            out.finish(exp, "simulate", "aborted", Some(reason.to_string()))?;
            opts.say(&format!("{summary} aborted"));
            Err(Failure::Aborted(format!("aborted at t={time}: {reason}")))
        }
    }
}

fn pair(names: &[String]) -> Result<(KernelSpec, KernelSpec), Failure> {
    Ok((lookup(&names[0])?, lookup(&names[1])?))
}

fn runs_healthy(curve: &DivergenceCurve) -> bool {
    curve
        .runs
        .iter()
        .all(|r| r.mass_drift <= MASS_DRIFT_LIMIT && r.sandwich_ok && r.c1 > 0.0)
}

pub fn compare(exp: &Experiment, opts: &Options) -> Result<(), Failure> {
    let (k1, k2) = pair(&exp.compare.kernels)?;
    let cfg = exp.sim_config()?;
    let mut out = Outputs::new(&opts.out)?;
    let curve = run_pair(&k1, &k2, &cfg)?;
    out.write("divergence.csv", |w| write_divergence(w, &curve))?;
    let identical = matching_order(&k1, &k2)? == MatchingOrder::Identical;
    let max_d = curve.d.iter().cloned().fold(0.0, f64::max);
    let pass = runs_healthy(&curve) && (!identical || max_d <= IDENTICAL_LIMIT);
    let line = format!(
        "compare {} vs {} delta={}: d(T)={:.6e} max_d={max_d:.6e} linearity={:.3} {}",
        k1.name(),
        k2.name(),
        cfg.delta,
        curve.final_divergence(),
        curve.linearity_score(),
        if pass { "PASS" } else { "FAIL" },
    );
    out.text("summary.txt", &format!("{line}\n"))?;
    if let Some(t) = &curve.truncated {
        out.finish(exp, "compare", "aborted", Some(t.reason.to_string()))?;
        opts.say(&line);
        return Err(Failure::Aborted(format!(
            "run with kernel `{}` aborted at t={}: {}",
            t.kernel, t.time, t.reason
        )));
    }
    out.finish(exp, "compare", if pass { "pass" } else { "fail" }, None)?;
    opts.say(&line);
    if pass {
        Ok(())
    } else {
        Err(Failure::Assertion("comparison checks failed".into()))
    }
}

fn rate_line(r: &RateReport, tolerance: Option<f64>) -> (String, bool) {
    let tol = tolerance.unwrap_or(r.tolerance);
    let pass = (r.slope() - r.predicted_rate()).abs() <= tol && r.curves.iter().all(runs_healthy);
    let line = format!(
        "{} vs {}: slope={:.2} (predicted {}) {}",
        r.kernels.0,
        r.kernels.1,
        r.slope(),
        r.predicted,
        if pass { "PASS" } else { "FAIL" },
    );
    (line, pass)
}

fn rate_details(r: &RateReport) -> String {
    let mut s = format!(
        "  C={:.6e} residual={:.3e} noise_floor={:.3e}\n",
        r.constant(),
        r.fit.residual,
        r.noise_floor
    );
    for ((d, dt), lin) in r.deltas.iter().zip(&r.d_t).zip(&r.linearity) {
        s.push_str(&format!("  delta={d} d_T={dt:.6e} linearity={lin:.3}\n"));
    }
    s
}

pub fn sweep(exp: &Experiment, opts: &Options) -> Result<(), Failure> {
    let (k1, k2) = pair(&exp.sweep.kernels)?;
    let cfg = exp.sim_config()?;
    let mut out = Outputs::new(&opts.out)?;
    let report = match sweep_rate(&k1, &k2, &cfg, &exp.sweep.deltas) {
        Ok(r) => r,
        Err(e) => {
            let failure = Failure::from(e);
            if failure.exit_code() == 2 {
                out.finish(exp, "sweep", "aborted", Some(failure.to_string()))?;
            }
            return Err(failure);
        }
    };
    out.write("rate.csv", |w| write_rate(w, &report))?;
    for (i, curve) in report.curves.iter().enumerate() {
        out.write(&format!("divergence_{i}.csv"), |w| {
            write_divergence(w, curve)
        })?;
    }
    let (line, pass) = rate_line(&report, exp.sweep.tolerance);
    out.text("summary.txt", &format!("{line}\n{}", rate_details(&report)))?;
    out.finish(exp, "sweep", if pass { "pass" } else { "fail" }, None)?;
    opts.say(&line);
    if pass {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "slope assertion failed: {line}"
        )))
    }
}

pub fn suite(exp: &Experiment, opts: &Options) -> Result<(), Failure> {
    let kernels: Vec<KernelSpec> = exp
        .suite
        .kernels
        .iter()
        .map(|k| lookup(k))
        .collect::<Result<_, _>>()?;
    let cfg = exp.sim_config()?;
    let mut out = Outputs::new(&opts.out)?;
    let reports = match zero_dispersion_suite(&kernels, &cfg, &exp.suite.deltas) {
        Ok(r) => r,
        Err(e) => {
            let failure = Failure::from(e);
            if failure.exit_code() == 2 {
                out.finish(exp, "suite", "aborted", Some(failure.to_string()))?;
            }
            return Err(failure);
        }
    };
    let mut summary = String::new();
    let mut all_pass = true;
    for r in &reports {
        out.write(&format!("rate_{}.csv", slug(&r.kernels.0)), |w| {
            write_rate(w, r)
        })?;
        let (line, pass) = rate_line(r, None);
        all_pass &= pass;
        opts.say(&line);
        summary.push_str(&format!("{line}\n{}", rate_details(r)));
    }
    out.text("summary.txt", &summary)?;
    out.finish(exp, "suite", if all_pass { "pass" } else { "fail" }, None)?;
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Assertion(
            "one or more slope assertions failed".into(),
        ))
    }
}
