//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p convwave-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use convwave_core::kernel::catalog;
use convwave_core::{
    integrate, sweep_rate, Field, Grid, InitialData, KernelSpec, MatchingOrder, RateReport,
    SimConfig, Spectral, StepSize,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DELTAS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
const FIELDS_PER_KERNEL: usize = 100;

fn grid() -> Grid {
    Grid::new(1024, 30.0).unwrap()
}

fn base_config() -> SimConfig {
    let g = grid();
    SimConfig::new(KernelSpec::dirac(), 0.1, InitialData::DEFAULT.sample(g))
}

struct Suite {
    failures: usize,
    lines: usize,
}

impl Suite {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.lines += 1;
        if !ok {
            self.failures += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }

    fn budget(&mut self, name: &str, elapsed: Duration, budget_s: u64) {
        let ok = elapsed.as_secs_f64() < budget_s as f64;
        self.check(
            &format!("{name} time"),
            ok,
            format!("{:.1}s (budget {budget_s}s)", elapsed.as_secs_f64()),
        );
    }
}

struct Sweep {
    label: &'static str,
    report: Option<RateReport>,
    window: (f64, f64),
}

fn run_sweep(suite: &mut Suite, label: &'static str, k1: KernelSpec, window: (f64, f64)) -> Sweep {
    let report = match sweep_rate(&k1, &KernelSpec::dirac(), &base_config(), &DELTAS) {
        Ok(r) => {
            let slope = r.slope();
            suite.check(
                &format!("{label} rate"),
                slope >= window.0 && slope <= window.1,
                format!(
                    "slope={slope:.3} predicted {} window [{}, {}] d_T={:?}",
                    r.predicted, window.0, window.1, r.d_t
                ),
            );
            Some(r)
        }
        Err(e) => {
            suite.check(&format!("{label} rate"), false, e.to_string());
            None
        }
    };
    Sweep {
        label,
        report,
        window,
    }
}

fn rate_checks(suite: &mut Suite) -> Vec<Sweep> {
    let mut sweeps = Vec::new();

    let t = Instant::now();
    sweeps.push(run_sweep(
        suite,
        "bbm vs dirac",
        KernelSpec::bbm(),
        (1.8, 2.2),
    ));
    suite.budget("bbm vs dirac", t.elapsed(), 60);

    let t = Instant::now();
    sweeps.push(run_sweep(
        suite,
        "rosenau vs dirac",
        KernelSpec::rosenau(),
        (3.7, 4.3),
    ));
    suite.budget("rosenau vs dirac", t.elapsed(), 60);

    let t = Instant::now();
    let bbm_ros = sweep_rate(
        &KernelSpec::bbm(),
        &KernelSpec::rosenau(),
        &base_config(),
        &DELTAS,
    );
    match &bbm_ros {
        Ok(r) => suite.check(
            "bbm vs rosenau rate",
            (1.8..=2.2).contains(&r.slope()),
            format!(
                "slope={:.3} predicted {} d_T={:?}",
                r.slope(),
                r.predicted,
                r.d_t
            ),
        ),
        Err(e) => suite.check("bbm vs rosenau rate", false, e.to_string()),
    }
    sweeps.push(Sweep {
        label: "bbm vs rosenau",
        report: bbm_ros.ok(),
        window: (1.8, 2.2),
    });
    suite.budget("bbm vs rosenau", t.elapsed(), 60);

    let t = Instant::now();
    sweeps.push(run_sweep(
        suite,
        "rectangular vs dirac",
        KernelSpec::rectangular(),
        (1.8, 2.2),
    ));
    sweeps.push(run_sweep(
        suite,
        "five_point vs dirac",
        KernelSpec::five_point(),
        (3.7, 4.3),
    ));
    suite.budget("stencil kernels", t.elapsed(), 120);

    let t = Instant::now();
    sweeps.push(run_sweep(
        suite,
        "fractional:gamma=0.75 vs dirac",
        KernelSpec::fractional(0.75).unwrap(),
        (1.3, 1.7),
    ));
    sweeps.push(run_sweep(
        suite,
        "fractional:gamma=1 vs dirac",
        KernelSpec::fractional(1.0).unwrap(),
        (1.8, 2.2),
    ));
    suite.budget("fractional", t.elapsed(), 60);
    sweeps
}

fn linearity_check(suite: &mut Suite, sweeps: &[Sweep]) {
    for s in sweeps {
        let Some(r) = &s.report else {
            suite.check(
                &format!("{} linearity", s.label),
                false,
                "sweep failed".into(),
            );
            continue;
        };
        let worst = r.linearity.iter().cloned().fold(0.0, f64::max);
        suite.check(
            &format!("{} linearity", s.label),
            worst <= 0.5,
            format!("max score {worst:.3} over deltas {:?}", r.deltas),
        );
    }
}

fn agreement_check(suite: &mut Suite, sweeps: &[Sweep]) {
    for s in sweeps {
        let Some(r) = &s.report else { continue };
        let MatchingOrder::Order(order) = r.predicted else {
            continue;
        };
        let rounded = r.slope().round();
        let in_window = r.slope() >= s.window.0 && r.slope() <= s.window.1;
        suite.check(
            &format!("{} static/dynamic agreement", s.label),
            rounded == order as f64 && in_window,
            format!("matching_order={order} round(slope)={rounded}"),
        );
    }
}

fn health_checks(suite: &mut Suite, sweeps: &[Sweep]) {
    let runs: Vec<_> = sweeps
        .iter()
        .filter_map(|s| s.report.as_ref())
        .flat_map(|r| r.runs())
        .collect();
    let drift = runs.iter().map(|r| r.mass_drift).fold(0.0, f64::max);
    suite.check(
        "mass conservation",
        !runs.is_empty() && drift <= 1e-12,
        format!("max relative drift {drift:.2e} over {} runs", runs.len()),
    );
    let sandwich = runs.iter().all(|r| r.sandwich_ok);
    suite.check(
        "energy sandwich",
        !runs.is_empty() && sandwich,
        format!("{} runs, every snapshot", runs.len()),
    );
    let c1 = runs.iter().map(|r| r.c1).fold(f64::INFINITY, f64::min);
    suite.check(
        "hyperbolicity",
        !runs.is_empty() && c1 > 0.0,
        format!("min c1 = {c1:.4}"),
    );
}

fn random_field(rng: &mut ChaCha8Rng, g: Grid) -> Field {
    Field::new(g, (0..g.n()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn operator_checks(suite: &mut Suite) {
    let t = Instant::now();
    let g = grid();
    let ops = Spectral::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut eq6, mut adjoint, mut norm) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for k in catalog() {
        for _ in 0..FIELDS_PER_KERNEL {
            let delta = rng.gen_range(0.05..1.0);
            let f = random_field(&mut rng, g);
            let h = random_field(&mut rng, g);
            let kf = ops.apply_convolution(&k, delta, &f);
            let fx = ops.derivative(&f);
            let nf = f.l2_norm();
            eq6 = eq6.max(kf.inner(&fx).abs() / (nf * nf * g.max_wavenumber()));
            let kh = ops.apply_convolution(&k, delta, &h);
            adjoint = adjoint.max((kf.inner(&h) - f.inner(&kh)).abs() / (nf * h.l2_norm()));
            norm = norm.max(kf.l2_norm() / (k.mass_bound() * nf) - 1.0);
        }
    }
    suite.check(
        "transport identity",
        eq6 <= 1e-10,
        format!("max |<Kf, f_x>| / (|f|^2 max xi) = {eq6:.2e}"),
    );
    suite.check(
        "self-adjointness",
        adjoint <= 1e-12,
        format!("max relative defect {adjoint:.2e}"),
    );
    suite.check(
        "operator norm bound",
        norm <= 1e-14,
        format!("max |Kf|/(mass_bound |f|) - 1 = {norm:.2e}"),
    );
    suite.budget("operator identities", t.elapsed(), 10);
}

fn stencil_check(suite: &mut Suite) {
    let t = Instant::now();
    let g = grid();
    let ops = Spectral::new(g);
    let f = Field::from_fn(g, |x| (-(x / 2.0).powi(2)).exp() * (1.0 + 0.3 * x.sin()));
    let n = g.n();
    let at = |j: isize| f.values()[j.rem_euclid(n as isize) as usize];
    let mut worst = 0.0f64;
    for q in 1..=4usize {
        let delta = 2.0 * g.dx() * q as f64;
        let q = q as isize;
        let rect = ops.derivative(&ops.apply_convolution(&KernelSpec::rectangular(), delta, &f));
        let five = ops.derivative(&ops.apply_convolution(&KernelSpec::five_point(), delta, &f));
        for j in 0..n as isize {
            let d3 = (at(j + q) - at(j - q)) / delta;
            let d5 = (-at(j + 2 * q) + 8.0 * at(j + q) - 8.0 * at(j - q) + at(j - 2 * q))
                / (6.0 * delta);
            worst = worst
                .max((rect.values()[j as usize] - d3).abs())
                .max((five.values()[j as usize] - d5).abs());
        }
    }
    suite.check(
        "stencil equivalence",
        worst <= 1e-10,
        format!("max pointwise difference {worst:.2e}"),
    );
    suite.budget("stencil equivalence", t.elapsed(), 5);
}

fn final_state(kernel: KernelSpec, dt: f64) -> Field {
    let mut cfg = base_config();
    cfg.kernel = kernel;
    cfg.dt = StepSize::Fixed(dt);
    integrate(&cfg).unwrap().final_state().clone()
}

fn rk4_order_check(suite: &mut Suite) {
    let dt = 0.1;
    let reference = final_state(KernelSpec::bbm(), dt / 8.0);
    let e1 = final_state(KernelSpec::bbm(), dt).sub(&reference).l2_norm();
    let e2 = final_state(KernelSpec::bbm(), dt / 2.0)
        .sub(&reference)
        .l2_norm();
    let ratio = e1 / e2;
    suite.check(
        "rk4 temporal order",
        (14.0..=18.0).contains(&ratio),
        format!("error ratio {ratio:.3} (errors {e1:.2e}, {e2:.2e})"),
    );
}

fn exact_linear_checks(suite: &mut Suite) {
    let g = grid();
    let u0 = |x: f64| 0.1 * (-(x / 3.0).powi(2)).exp();
    let mut cfg = SimConfig::new(KernelSpec::dirac(), 0.1, Field::from_fn(g, u0));
    cfg.linearize = true;
    cfg.dt = StepSize::Fixed(1e-3);
    let traj = integrate(&cfg).unwrap();
    let exact = Field::from_fn(g, |x| u0(x - 1.0));
    let err = traj.final_state().sub(&exact).l2_norm();
    suite.check(
        "dirac transport",
        traj.is_complete() && err <= 1e-8,
        format!("L2 error at t=1: {err:.2e}"),
    );

    let ops = Spectral::new(g);
    let mode = 5usize;
    let xi1 = g.wavenumber(mode);
    let mut worst = 0.0f64;
    for k in catalog() {
        let delta = 0.8;
        let mut cfg = SimConfig::new(
            k.clone(),
            delta,
            InitialData::Sine {
                amplitude: 1e-3,
                mode: mode as u32,
            }
            .sample(g),
        );
        cfg.linearize = true;
        let traj = integrate(&cfg).unwrap();
        let c0 = ops.coefficients(cfg.u0.values())[mode];
        let c1 = ops.coefficients(traj.final_state().values())[mode];
        let speed = -(c1 / c0).arg() / (xi1 * traj.final_time());
        worst = worst.max((speed - k.symbol_eval(delta, xi1)).abs());
    }
    suite.check(
        "linear phase speed",
        worst <= 1e-6,
        format!("max |speed - symbol| over catalog {worst:.2e}"),
    );
}

fn main() -> ExitCode {
    // The default libtest arguments are accepted and ignored.
    let start = Instant::now();
    let mut suite = Suite {
        failures: 0,
        lines: 0,
    };
    let sweeps = rate_checks(&mut suite);
    linearity_check(&mut suite, &sweeps);
    agreement_check(&mut suite, &sweeps);
    health_checks(&mut suite, &sweeps);
    operator_checks(&mut suite);
    stencil_check(&mut suite);
    rk4_order_check(&mut suite);
    exact_linear_checks(&mut suite);
    println!(
        "{} checks, {} failed, {:.1}s",
        suite.lines,
        suite.failures,
        start.elapsed().as_secs_f64()
    );
    if suite.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
