//! Small numerical utilities shared by the kernel catalog and the rate harness:
//! adaptive Gauss-Kronrod quadrature, Taylor coefficients of smooth functions at
//! the origin, and ordinary least-squares line fits.

use std::f64::consts::PI;

use num_complex::Complex64;

// 15-point Kronrod extension of the 7-point Gauss rule, nodes on [0, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` by globally adaptive Gauss-Kronrod (7/15)
/// bisection until the summed error estimate drops below
/// `max(abs_tol, rel_tol * |I|)` or the interval budget runs out.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut pieces = vec![{
        let (v, e) = gauss_kronrod(&f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..2000 {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gauss_kronrod(&f, lo, mid);
        let (v2, e2) = gauss_kronrod(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    // Sum in interval order so the result does not depend on refinement history.
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    pieces.iter().map(|p| p.2).sum()
}

/// Integrates over consecutive breakpoints `[x0, x1], [x1, x2], ...`.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    breaks
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], abs_tol, rel_tol))
        .sum()
}

/// Radius of the contour used by [`taylor_coefficients`].
pub const TAYLOR_RADIUS: f64 = 0.5;
const TAYLOR_NODES: usize = 64;

/// Taylor coefficients c_0..=c_degree of an analytic function at the origin,
/// by the trapezoidal rule on the circle |z| = [`TAYLOR_RADIUS`].
///
/// Converges geometrically when `f` is analytic on a disc of radius
/// above [`TAYLOR_RADIUS`]; only the real parts are returned.
pub fn taylor_coefficients<F: Fn(Complex64) -> Complex64>(f: F, degree: usize) -> Vec<f64> {
    let n = TAYLOR_NODES;
    let samples: Vec<Complex64> = (0..n)
        .map(|k| {
            f(Complex64::from_polar(
                TAYLOR_RADIUS,
                2.0 * PI * k as f64 / n as f64,
            ))
        })
        .collect();
    (0..=degree)
        .map(|j| {
            let sum: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64))
                .sum();
            sum.re / n as f64 / TAYLOR_RADIUS.powi(j as i32)
        })
        .collect()
}

/// Least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square of the fit residuals.
    pub residual: f64,
}

/// Ordinary least-squares fit; `None` for fewer than two points or
/// degenerate abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Some(LineFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_polynomial_and_gaussian() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14, 1e-14);
        assert!((v - 0.0).abs() < 1e-13);
        let g = integrate(|x| (-x * x).exp(), -10.0, 10.0, 1e-14, 1e-14);
        assert!((g - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn quadrature_handles_kink() {
        let v = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-13, 1e-13);
        assert!((v - (0.045 + 0.245)).abs() < 1e-12);
    }

    #[test]
    fn taylor_of_rational_and_entire() {
        let one = Complex64::new(1.0, 0.0);
        let c = taylor_coefficients(|z| one / (one + z * z), 8);
        let expected = [1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0];
        for (j, (a, b)) in c.iter().zip(expected).enumerate() {
            assert!((a - b).abs() < 1e-12, "j={j}: {a} vs {b}");
        }
        let c = taylor_coefficients(|z| z.cos(), 6);
        assert!((c[2] + 0.5).abs() < 1e-14);
        assert!((c[4] - 1.0 / 24.0).abs() < 1e-14);
        assert!((c[6] + 1.0 / 720.0).abs() < 1e-13);
    }

    #[test]
    fn line_fit_exact_power_law() {
        let xs: Vec<f64> = [0.4f64, 0.2, 0.1, 0.05].iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = [0.4f64, 0.2, 0.1, 0.05]
            .iter()
            .map(|d| (3.0 * d * d).ln())
            .collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn line_fit_degenerate() {
        assert!(fit_line(&[1.0], &[2.0]).is_none());
        assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }
}
