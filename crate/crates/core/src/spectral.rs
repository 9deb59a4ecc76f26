//! Periodic pseudospectral discretization on [-L, L).
//!
//! Fields are expanded as u(x) = Σ_m c_m exp(iξ_m x) with ξ_m = πm/L for
//! m = -N/2..N/2-1. Convolution with a scaled kernel and differentiation are
//! mode-wise multiplications; Sobolev norms carry the 2L Parseval factor so
//! that s = 0 reproduces the L² norm on the period.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::GridError;
use crate::kernel::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    half_length: f64,
}

impl Grid {
    pub fn new(n: usize, half_length: f64) -> Result<Self, GridError> {
        if n < 16 || n % 2 != 0 {
            return Err(GridError::BadSize(n));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(GridError::BadLength(half_length));
        }
        Ok(Grid { n, half_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Signed mode number of FFT slot `i` (slot N/2 holds m = -N/2).
    pub fn mode(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        PI * self.mode(i) as f64 / self.half_length
    }

    /// π/dx, the magnitude of the Nyquist wavenumber.
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.n as f64 / (2.0 * self.half_length)
    }

    /// Highest |m| kept when dealiasing a (p+1)-fold product: the largest K
    /// with (p+2)K < N. For p = 1 this is the 2/3 rule.
    pub fn dealias_cutoff(&self, p: u32) -> usize {
        (self.n - 1) / (p as usize + 2)
    }
}

/// Real grid function with a lazily computed Fourier coefficient cache.
#[derive(Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("values", &self.values)
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.n() {
            return Err(GridError::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self::from_raw(grid, values))
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        Field {
            grid,
            values,
            spectrum: OnceLock::new(),
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.n()])
    }

    /// Samples `f` at the grid points. Panics if `f` produces a non-finite value.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.n()).map(|j| f(grid.x(j))).collect();
        Self::new(grid, values).expect("sampled function must be finite")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// ∫u dx by the rectangle rule (exact for trigonometric polynomials).
    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L² inner product dx·Σ f g.
    pub fn inner(&self, other: &Field) -> f64 {
        self.grid.dx()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// max|u| over the outer 5% of the domain on each side.
    pub fn boundary_magnitude(&self) -> f64 {
        let edge = 0.95 * self.grid.half_length();
        (0..self.grid.n())
            .filter(|&j| self.grid.x(j).abs() >= edge)
            .fold(0.0, |m, j| m.max(self.values[j].abs()))
    }

    pub fn sub(&self, other: &Field) -> Field {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Field::from_raw(self.grid, values)
    }

    /// Fourier coefficients c_m in FFT slot order, computed once and cached.
    pub fn spectrum(&self, ops: &Spectral) -> &[Complex64] {
        assert_eq!(self.grid, ops.grid, "field and transform grids differ");
        self.spectrum.get_or_init(|| ops.coefficients(&self.values))
    }
}

/// Sobolev order s of the H^s norm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NormOrder(f64);

impl NormOrder {
    pub fn new(s: f64) -> Option<Self> {
        (s.is_finite() && s >= 0.0).then_some(NormOrder(s))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// s > 3/2, the range where H^s is an algebra embedded in W^{1,∞}.
    pub fn is_admissible(&self) -> bool {
        self.0 > 1.5
    }
}

/// FFT plans and wavenumbers for one grid. Cheap to share across threads.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n());
        let inverse = planner.plan_fft_inverse(grid.n());
        let wavenumbers = (0..grid.n()).map(|i| grid.wavenumber(i)).collect();
        Spectral {
            grid,
            forward,
            inverse,
            wavenumbers,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// ξ_m in FFT slot order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Unnormalized forward DFT of real samples.
    pub(crate) fn transform(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse of [`Spectral::transform`], keeping the real part.
    pub(crate) fn untransform(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.grid.n() as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    fn grid_phase(&self, i: usize) -> f64 {
        // exp(-iξ_m x_0) with x_0 = -L is (-1)^m.
        if self.grid.mode(i).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Coefficients c_m of u(x) = Σ c_m exp(iξ_m x), FFT slot order.
    pub fn coefficients(&self, values: &[f64]) -> Vec<Complex64> {
        let scale = 1.0 / self.grid.n() as f64;
        self.transform(values)
            .into_iter()
            .enumerate()
            .map(|(i, c)| c * (scale * self.grid_phase(i)))
            .collect()
    }

    /// Applies a mode-wise multiplier (indexed by FFT slot) and returns the
    /// real part of the result.
    pub fn apply_multiplier(&self, f: &Field, multiplier: impl Fn(usize) -> Complex64) -> Field {
        assert_eq!(f.grid, self.grid, "field and transform grids differ");
        let mut buf = self.transform(&f.values);
        for (i, c) in buf.iter_mut().enumerate() {
            *c *= multiplier(i);
        }
        Field::from_raw(self.grid, self.untransform(buf))
    }

    /// K_δ f = α_δ ∗ f, i.e. multiplication of mode m by α̂(δξ_m).
    pub fn apply_convolution(&self, kernel: &KernelSpec, delta: f64, f: &Field) -> Field {
        self.apply_multiplier(f, |i| {
            Complex64::new(kernel.symbol_eval(delta, self.wavenumbers[i]), 0.0)
        })
    }

    /// D_x f, with the Nyquist mode set to zero.
    pub fn derivative(&self, f: &Field) -> Field {
        let nyquist = self.grid.n() / 2;
        self.apply_multiplier(f, |i| {
            if i == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, self.wavenumbers[i])
            }
        })
    }

    /// Λ^s f = (1 - D_x²)^{s/2} f.
    pub fn bessel_potential(&self, f: &Field, s: NormOrder) -> Field {
        self.apply_multiplier(f, |i| {
            let xi = self.wavenumbers[i];
            Complex64::new((1.0 + xi * xi).powf(0.5 * s.value()), 0.0)
        })
    }

    /// (2L Σ_m (1+ξ_m²)^s |c_m|²)^{1/2}.
    pub fn sobolev_norm(&self, f: &Field, s: NormOrder) -> f64 {
        let c = f.spectrum(self);
        let sum: f64 = c
            .iter()
            .zip(&self.wavenumbers)
            .map(|(c, xi)| (1.0 + xi * xi).powf(s.value()) * c.norm_sqr())
            .sum();
        (2.0 * self.grid.half_length() * sum).sqrt()
    }

    /// Zeroes every mode with |m| above [`Grid::dealias_cutoff`].
    pub fn dealias(&self, f: &Field, p: u32) -> Field {
        let cutoff = self.grid.dealias_cutoff(p) as i64;
        self.apply_multiplier(f, |i| {
            if self.grid.mode(i).abs() > cutoff {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// Share of spectral energy in modes with |m| > K/2, K the dealiasing
    /// cutoff for exponent p. Smooth resolved solutions keep this near
    /// machine zero; it grows as a front steepens.
    pub fn tail_energy_fraction(&self, f: &Field, p: u32) -> f64 {
        let band = (self.grid.dealias_cutoff(p) / 2) as i64;
        let c = f.spectrum(self);
        let (mut tail, mut total) = (0.0, 0.0);
        for (i, c) in c.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if self.grid.mode(i).abs() > band {
                tail += e;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }
}
