//! Kernel catalog.
//!
//! A kernel α is described by its Fourier symbol α̂(ξ) at unit scale; the scaled
//! family α_δ(x) = α(x/δ)/δ has symbol α̂(δξ). Closed-form densities are kept
//! where they exist and serve as quadrature references for moments.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::KernelError;
use crate::numerics::{fit_line, integrate_piecewise, taylor_coefficients};

/// Kernel names accepted by [`KernelSpec::from_str`].
pub const KERNEL_NAMES: &[&str] = &[
    "dirac",
    "bbm",
    "exponential",
    "rosenau",
    "bbm_family:k=<k>",
    "fractional:gamma=<g>",
    "rectangular",
    "five_point",
];

/// Highest Taylor order compared by [`matching_order`].
pub const PROBE_DEPTH: usize = 8;
/// Taylor coefficients closer than this are treated as equal.
const COEFF_TOL: f64 = 1e-6;
/// Window around an even integer inside which a fitted order snaps to it.
const ORDER_SNAP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// Unit point mass; the operator is the identity (Hopf equation).
    Dirac,
    /// α(x) = e^{-|x|}/2, symbol (1+ξ²)^{-1} (BBM).
    Exponential,
    /// Green's function of 1 + D⁴, symbol (1+ξ⁴)^{-1}.
    Rosenau,
    /// Symbol (1+ξ^{2k})^{-1}.
    BbmFamily { k: u32 },
    /// Symbol (1+|ξ|^{2γ})^{-1}.
    Fractional { gamma: f64 },
    /// Indicator of [-1/2, 1/2]; three-point central difference.
    Rectangular,
    /// Piecewise constant kernel realizing the fourth-order five-point difference.
    FivePoint,
}

/// A catalog kernel. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    name: String,
    kind: KernelKind,
    mass_bound: f64,
}

fn sinc(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        let y2 = y * y;
        1.0 - y2 / 6.0 + y2 * y2 / 120.0
    } else {
        y.sin() / y
    }
}

fn is_integer(v: f64) -> bool {
    v.fract() == 0.0
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Result<Self, KernelError> {
        let name = match kind {
            KernelKind::Dirac => "dirac".to_string(),
            KernelKind::Exponential => "bbm".to_string(),
            KernelKind::Rosenau => "rosenau".to_string(),
            KernelKind::BbmFamily { k } => {
                if k == 0 {
                    return Err(KernelError::InvalidParameter {
                        kernel: "bbm_family".into(),
                        reason: "k must be a positive integer".into(),
                    });
                }
                format!("bbm_family:k={k}")
            }
            KernelKind::Fractional { gamma } => {
                if !(gamma.is_finite() && gamma > 0.0) {
                    return Err(KernelError::InvalidParameter {
                        kernel: "fractional".into(),
                        reason: format!("gamma must be positive, got {gamma}"),
                    });
                }
                format!("fractional:gamma={gamma}")
            }
            KernelKind::Rectangular => "rectangular".to_string(),
            KernelKind::FivePoint => "five_point".to_string(),
        };
        let mut spec = KernelSpec {
            name,
            kind,
            mass_bound: 1.0,
        };
        spec.mass_bound = spec.compute_mass_bound();
        Ok(spec)
    }

    pub fn dirac() -> Self {
        Self::new(KernelKind::Dirac).expect("valid")
    }

    pub fn bbm() -> Self {
        Self::new(KernelKind::Exponential).expect("valid")
    }

    pub fn rosenau() -> Self {
        Self::new(KernelKind::Rosenau).expect("valid")
    }

    pub fn bbm_family(k: u32) -> Result<Self, KernelError> {
        Self::new(KernelKind::BbmFamily { k })
    }

    pub fn fractional(gamma: f64) -> Result<Self, KernelError> {
        Self::new(KernelKind::Fractional { gamma })
    }

    pub fn rectangular() -> Self {
        Self::new(KernelKind::Rectangular).expect("valid")
    }

    pub fn five_point() -> Self {
        Self::new(KernelKind::FivePoint).expect("valid")
    }

    /// Canonical identifier, parseable by [`KernelSpec::from_str`].
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// ‖α‖_{L¹} (total variation for the point mass). Bounds |α̂| and the
    /// L² operator norm of the convolution.
    pub fn mass_bound(&self) -> f64 {
        self.mass_bound
    }

    /// Highest derivative order of α̂ that exists at the origin, when finite.
    pub fn smooth_symbol_order(&self) -> Option<u32> {
        match self.kind {
            KernelKind::Fractional { gamma } if !is_integer(gamma) => {
                Some((2.0 * gamma).ceil() as u32 - 1)
            }
            _ => None,
        }
    }

    /// Unscaled symbol α̂(ξ). Even in ξ by construction and equal to 1 at 0.
    pub fn symbol(&self, xi: f64) -> f64 {
        let z = xi.abs();
        match self.kind {
            KernelKind::Dirac => 1.0,
            KernelKind::Exponential => 1.0 / (1.0 + z * z),
            KernelKind::Rosenau => {
                let z2 = z * z;
                1.0 / (1.0 + z2 * z2)
            }
            KernelKind::BbmFamily { k } => 1.0 / (1.0 + z.powi(2 * k as i32)),
            KernelKind::Fractional { gamma } => {
                let e = 2.0 * gamma;
                let p = if is_integer(e) && e <= i32::MAX as f64 {
                    z.powi(e as i32)
                } else {
                    z.powf(e)
                };
                1.0 / (1.0 + p)
            }
            KernelKind::Rectangular => sinc(0.5 * z),
            KernelKind::FivePoint => (4.0 * sinc(0.5 * z) - sinc(z)) / 3.0,
        }
    }

    /// Analytic continuation of the symbol to complex ξ near the origin.
    /// `None` when the symbol is not analytic there.
    pub fn symbol_continuation(&self, z: Complex64) -> Option<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let csinc = |y: Complex64| if y.norm() < 1e-8 { one } else { y.sin() / y };
        Some(match self.kind {
            KernelKind::Dirac => one,
            KernelKind::Exponential => one / (one + z * z),
            KernelKind::Rosenau => one / (one + (z * z) * (z * z)),
            KernelKind::BbmFamily { k } => one / (one + z.powu(2 * k)),
            KernelKind::Fractional { gamma } => {
                if !is_integer(gamma) || gamma > u32::MAX as f64 {
                    return None;
                }
                one / (one + z.powu(2 * gamma as u32))
            }
            KernelKind::Rectangular => csinc(0.5 * z),
            KernelKind::FivePoint => (4.0 * csinc(0.5 * z) - csinc(z)) / 3.0,
        })
    }

    fn taylor(&self, degree: usize) -> Option<Vec<f64>> {
        self.symbol_continuation(Complex64::new(0.0, 0.0))?;
        Some(taylor_coefficients(
            |z| self.symbol_continuation(z).expect("analytic kind"),
            degree,
        ))
    }

    /// Symbol of the scaled kernel α_δ at frequency ξ, i.e. α̂(δξ).
    pub fn symbol_eval(&self, delta: f64, xi: f64) -> f64 {
        debug_assert!(delta > 0.0);
        self.symbol(delta * xi)
    }

    /// Closed-form density of the unscaled kernel, where one is available.
    pub fn density(&self, x: f64) -> Option<f64> {
        let a = x.abs();
        match self.kind {
            KernelKind::Dirac | KernelKind::Fractional { .. } => None,
            KernelKind::Exponential => Some(0.5 * (-a).exp()),
            KernelKind::Rosenau => {
                let y = a / SQRT_2;
                Some((-y).exp() * (y.cos() + y.sin()) / (2.0 * SQRT_2))
            }
            KernelKind::BbmFamily { k } => Some(bbm_family_density(k, a)),
            KernelKind::Rectangular => Some(if a <= 0.5 { 1.0 } else { 0.0 }),
            KernelKind::FivePoint => Some(if a <= 0.5 {
                7.0 / 6.0
            } else if a <= 1.0 {
                -1.0 / 6.0
            } else {
                0.0
            }),
        }
    }

    pub fn has_density(&self) -> bool {
        self.density(0.0).is_some()
    }

    /// Breakpoints on [0, ∞) covering the density support, for piecewise
    /// quadrature of even integrands.
    fn quadrature_breaks(&self) -> Vec<f64> {
        let decay = match self.kind {
            KernelKind::Rectangular => return vec![0.0, 0.5],
            KernelKind::FivePoint => return vec![0.0, 0.5, 1.0],
            KernelKind::Exponential => 1.0,
            KernelKind::Rosenau => 1.0 / SQRT_2,
            KernelKind::BbmFamily { k } => (PI / (2.0 * k as f64)).sin(),
            KernelKind::Dirac | KernelKind::Fractional { .. } => return Vec::new(),
        };
        let step = 2.0 / decay;
        (0..=40).map(|i| i as f64 * step).collect()
    }

    fn compute_mass_bound(&self) -> f64 {
        match self.kind {
            KernelKind::Dirac
            | KernelKind::Exponential
            | KernelKind::Rectangular
            | KernelKind::BbmFamily { k: 1 } => 1.0,
            KernelKind::FivePoint => 4.0 / 3.0,
            // (1+|ξ|^a)^{-1} with 0 < a <= 2 is a Linnik characteristic
            // function, so the density is non-negative with unit mass.
            KernelKind::Fractional { gamma } if gamma <= 1.0 => 1.0,
            KernelKind::Fractional { .. } => fractional_l1_estimate(self).max(1.0),
            KernelKind::Rosenau | KernelKind::BbmFamily { .. } => {
                let breaks = self.quadrature_breaks();
                let l1 = 2.0
                    * integrate_piecewise(
                        |x| self.density(x).unwrap_or(0.0).abs(),
                        &breaks,
                        1e-14,
                        1e-12,
                    );
                l1.max(1.0)
            }
        }
    }
}

/// Density of the kernel with symbol (1+ξ^{2k})^{-1}, by residues at the
/// upper-half-plane roots ζ_j = exp(iπ(2j+1)/2k) of 1+ζ^{2k}:
/// α(x) = -(i/2k) Σ_j ζ_j exp(iζ_j|x|).
fn bbm_family_density(k: u32, a: f64) -> f64 {
    let kf = k as f64;
    let sum: Complex64 = (0..k)
        .map(|j| {
            let zeta = Complex64::from_polar(1.0, PI * (2 * j + 1) as f64 / (2.0 * kf));
            zeta * (Complex64::i() * zeta * a).exp()
        })
        .sum();
    (-Complex64::i() * sum / (2.0 * kf)).re
}

/// ‖α‖_{L¹} for a symbol-only kernel, from an inverse FFT of the symbol on a
/// fine, wide frequency grid.
fn fractional_l1_estimate(kernel: &KernelSpec) -> f64 {
    const N: usize = 1 << 18;
    const PERIOD: f64 = 400.0;
    let dxi = 2.0 * PI / PERIOD;
    let mut buf: Vec<Complex64> = (0..N)
        .map(|i| {
            let m = if i < N / 2 {
                i as f64
            } else {
                i as f64 - N as f64
            };
            Complex64::new(kernel.symbol(m * dxi), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(N).process(&mut buf);
    let dx = PERIOD / N as f64;
    buf.iter()
        .map(|c| (c.re * dxi / (2.0 * PI)).abs())
        .sum::<f64>()
        * dx
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl FromStr for KernelSpec {
    type Err = KernelError;

    /// Parses identifiers such as `bbm`, `bbm_family:k=3` or
    /// `fractional:gamma=0.75`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, params) = match s.split_once(':') {
            Some((h, p)) => (h.trim(), Some(p)),
            None => (s, None),
        };
        let param = |key: &str| -> Result<&str, KernelError> {
            let params = params.ok_or_else(|| KernelError::InvalidParameter {
                kernel: head.to_string(),
                reason: format!("missing parameter `{key}`"),
            })?;
            params
                .split(',')
                .filter_map(|kv| kv.split_once('='))
                .find(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim())
                .ok_or_else(|| KernelError::InvalidParameter {
                    kernel: head.to_string(),
                    reason: format!("missing parameter `{key}`"),
                })
        };
        let no_params = |kind: KernelKind| -> Result<KernelSpec, KernelError> {
            match params {
                Some(p) if !p.trim().is_empty() => Err(KernelError::InvalidParameter {
                    kernel: head.to_string(),
                    reason: format!("takes no parameters, got `{p}`"),
                }),
                _ => KernelSpec::new(kind),
            }
        };
        match head {
            "dirac" | "hopf" => no_params(KernelKind::Dirac),
            "bbm" | "exponential" => no_params(KernelKind::Exponential),
            "rosenau" => no_params(KernelKind::Rosenau),
            "rectangular" => no_params(KernelKind::Rectangular),
            "five_point" => no_params(KernelKind::FivePoint),
            "bbm_family" => {
                let raw = param("k")?;
                let k = raw
                    .parse::<u32>()
                    .map_err(|_| KernelError::InvalidParameter {
                        kernel: head.to_string(),
                        reason: format!("k must be a positive integer, got `{raw}`"),
                    })?;
                KernelSpec::bbm_family(k)
            }
            "fractional" => {
                let raw = param("gamma")?;
                let gamma = raw
                    .parse::<f64>()
                    .map_err(|_| KernelError::InvalidParameter {
                        kernel: head.to_string(),
                        reason: format!("gamma must be a positive number, got `{raw}`"),
                    })?;
                KernelSpec::fractional(gamma)
            }
            _ => Err(KernelError::UnknownKernel {
                name: s.to_string(),
                known: KERNEL_NAMES.join(", "),
            }),
        }
    }
}

/// Looks up a kernel by identifier.
pub fn lookup(id: &str) -> Result<KernelSpec, KernelError> {
    id.parse()
}

/// The default kernel list: Dirac, BBM, Rosenau, the higher-order BBM family
/// for k = 1..4, the fractional kernel at γ = 0.75 and both stencil kernels.
pub fn catalog() -> Vec<KernelSpec> {
    let mut out = vec![
        KernelSpec::dirac(),
        KernelSpec::bbm(),
        KernelSpec::rosenau(),
    ];
    out.extend((1..=4).map(|k| KernelSpec::bbm_family(k).expect("k >= 1")));
    out.push(KernelSpec::fractional(0.75).expect("gamma > 0"));
    out.push(KernelSpec::rectangular());
    out.push(KernelSpec::five_point());
    out
}

/// Symbol formula at scale δ, for listings.
pub fn symbol_formula(kernel: &KernelSpec) -> String {
    match kernel.kind() {
        KernelKind::Dirac => "1".into(),
        KernelKind::Exponential => "(1+δ²ξ²)^-1".into(),
        KernelKind::Rosenau => "(1+δ⁴ξ⁴)^-1".into(),
        KernelKind::BbmFamily { k } => format!("(1+(δξ)^{})^-1", 2 * k),
        KernelKind::Fractional { gamma } => format!("(1+|δξ|^{})^-1", 2.0 * gamma),
        KernelKind::Rectangular => "(2/(δξ)) sin(δξ/2)".into(),
        KernelKind::FivePoint => "(8/(3δξ)) sin(δξ/2) - (1/(3δξ)) sin(δξ)".into(),
    }
}

/// How a moment value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    Quadrature,
    SymbolDerivative,
}

impl fmt::Display for MomentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentMethod::Quadrature => "quadrature",
            MomentMethod::SymbolDerivative => "symbol-derivative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub value: f64,
    pub method: MomentMethod,
}

/// m_j = ∫ x^j α(x) dx by quadrature of the closed-form density. The
/// point mass of the Dirac kernel is integrated exactly.
pub fn moment_by_quadrature(kernel: &KernelSpec, j: u32) -> Option<f64> {
    if kernel.kind() == KernelKind::Dirac {
        return Some(if j == 0 { 1.0 } else { 0.0 });
    }
    if !kernel.has_density() {
        return None;
    }
    if j % 2 == 1 {
        return Some(0.0);
    }
    let breaks = kernel.quadrature_breaks();
    let half = integrate_piecewise(
        |x| x.powi(j as i32) * kernel.density(x).unwrap_or(0.0),
        &breaks,
        1e-15,
        1e-13,
    );
    Some(2.0 * half)
}

/// m_j = i^j α̂^{(j)}(0) from the symbol's Taylor expansion at the origin.
/// `None` when the derivative does not exist.
pub fn moment_by_symbol(kernel: &KernelSpec, j: u32) -> Option<f64> {
    if let Some(order) = kernel.smooth_symbol_order() {
        if j > order {
            return None;
        }
        // (1+|ξ|^{2γ})^{-1} = 1 - |ξ|^{2γ} + ...: every derivative of order
        // 1..2γ vanishes at the origin.
        return Some(if j == 0 { kernel.symbol(0.0) } else { 0.0 });
    }
    if j % 2 == 1 {
        return Some(0.0);
    }
    let coeff = kernel.taylor(j as usize)?[j as usize];
    let factorial: f64 = (1..=j).map(f64::from).product();
    let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
    Some(sign * factorial * coeff)
}

/// The j-th moment of the kernel: quadrature when a density exists, symbol
/// derivatives otherwise.
pub fn moment(kernel: &KernelSpec, j: u32) -> Result<Moment, KernelError> {
    if let Some(value) = moment_by_quadrature(kernel, j) {
        return Ok(Moment {
            value,
            method: MomentMethod::Quadrature,
        });
    }
    moment_by_symbol(kernel, j)
        .map(|value| Moment {
            value,
            method: MomentMethod::SymbolDerivative,
        })
        .ok_or_else(|| KernelError::MomentUndefined {
            kernel: kernel.name().to_string(),
            order: j,
            smooth_order: kernel.smooth_symbol_order().unwrap_or(0),
        })
}

/// Moments m_0..=m_{j_max}; entries past the symbol's smoothness are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub kernel: String,
    pub moments: Vec<Option<Moment>>,
}

impl MomentTable {
    pub const DEFAULT_MAX_ORDER: u32 = 6;

    pub fn build(kernel: &KernelSpec, j_max: u32) -> Self {
        MomentTable {
            kernel: kernel.name().to_string(),
            moments: (0..=j_max).map(|j| moment(kernel, j).ok()).collect(),
        }
    }
}

/// Leading order of the symbol difference α̂₂(ξ) − α̂₁(ξ) = ξ^{2k} m(ξ) near 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatchingOrder {
    /// Taylor coefficients agree below this (even) order and differ at it.
    Order(u32),
    /// Non-integer leading power, from a log-log fit of the difference.
    Fractional(f64),
    /// The symbols coincide.
    Identical,
}

impl MatchingOrder {
    /// Predicted exponent of δ in the solution difference.
    pub fn rate(&self) -> Option<f64> {
        match *self {
            MatchingOrder::Order(n) => Some(n as f64),
            MatchingOrder::Fractional(r) => Some(r),
            MatchingOrder::Identical => None,
        }
    }
}

impl fmt::Display for MatchingOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchingOrder::Order(n) => write!(f, "{n}"),
            MatchingOrder::Fractional(r) => write!(f, "{r:.1}"),
            MatchingOrder::Identical => f.write_str("identical"),
        }
    }
}

fn symbols_coincide(a: &KernelSpec, b: &KernelSpec) -> bool {
    (0..=400).all(|i| {
        let xi = 0.125 * i as f64;
        a.symbol(xi) == b.symbol(xi)
    })
}

/// Fitted exponent of |α̂₂ − α̂₁| against ξ over ξ ∈ [1e-3, 1e-1].
pub fn fitted_difference_order(a: &KernelSpec, b: &KernelSpec) -> Option<f64> {
    let pts: Vec<(f64, f64)> = (0..25)
        .map(|i| 10f64.powf(-3.0 + 2.0 * i as f64 / 24.0))
        .map(|xi| (xi, (b.symbol(xi) - a.symbol(xi)).abs()))
        .filter(|(_, d)| *d > 0.0)
        .map(|(xi, d)| (xi.ln(), d.ln()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    fit_line(&xs, &ys).map(|f| f.slope)
}

/// Smallest even order 2k at which the two symbols' Taylor expansions differ.
///
/// Symbols that are not smooth at the origin (fractional kernels with
/// non-integer γ) are handled by a log-log fit of the difference; a fitted
/// value within 0.05 of an even integer is reported as that integer.
pub fn matching_order(a: &KernelSpec, b: &KernelSpec) -> Result<MatchingOrder, KernelError> {
    if a.kind() == b.kind() || symbols_coincide(a, b) {
        return Ok(MatchingOrder::Identical);
    }
    if a.smooth_symbol_order().is_some() || b.smooth_symbol_order().is_some() {
        let slope = fitted_difference_order(a, b).ok_or(KernelError::Indistinguishable {
            depth: PROBE_DEPTH as u32,
        })?;
        let nearest_even = 2.0 * (slope / 2.0).round();
        if nearest_even > 0.0 && (slope - nearest_even).abs() <= ORDER_SNAP {
            return Ok(MatchingOrder::Order(nearest_even as u32));
        }
        return Ok(MatchingOrder::Fractional(slope));
    }
    let probe = |k: &KernelSpec| {
        k.taylor(PROBE_DEPTH).ok_or(KernelError::Indistinguishable {
            depth: PROBE_DEPTH as u32,
        })
    };
    let (ca, cb) = (probe(a)?, probe(b)?);
    ca.iter()
        .zip(&cb)
        .enumerate()
        .skip(1)
        .find(|(_, (x, y))| (*x - *y).abs() > COEFF_TOL)
        .map(|(j, _)| MatchingOrder::Order(j as u32))
        .ok_or(KernelError::Indistinguishable {
            depth: PROBE_DEPTH as u32,
        })
}

/// Predicted comparison rate for a kernel pair, `None` for identical symbols.
pub fn predicted_rate(a: &KernelSpec, b: &KernelSpec) -> Result<Option<f64>, KernelError> {
    Ok(matching_order(a, b)?.rate())
}

/// Fourier transform ∫ α(x) e^{-iξx} dx of the closed-form density, by
/// quadrature. Used to cross-check symbol formulas.
pub fn density_transform(kernel: &KernelSpec, xi: f64) -> Option<f64> {
    if !kernel.has_density() {
        return None;
    }
    let breaks = kernel.quadrature_breaks();
    let half = integrate_piecewise(
        |x| kernel.density(x).unwrap_or(0.0) * (xi * x).cos(),
        &breaks,
        1e-15,
        1e-13,
    );
    Some(2.0 * half)
}
