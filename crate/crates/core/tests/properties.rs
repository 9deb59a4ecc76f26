use convwave_core::kernel::{catalog, moment_by_quadrature, moment_by_symbol};
use convwave_core::{
    matching_order, moment, Field, Grid, KernelSpec, MatchingOrder, MomentMethod, NormOrder,
    Spectral,
};
use proptest::prelude::*;

fn kernels() -> impl Strategy<Value = KernelSpec> {
    let all = catalog();
    (0..all.len()).prop_map(move |i| all[i].clone())
}

fn field(n: usize, half_length: f64) -> impl Strategy<Value = Field> {
    prop::collection::vec(-1.0f64..1.0, n)
        .prop_map(move |v| Field::new(Grid::new(n, half_length).unwrap(), v).unwrap())
}

proptest! {
    #[test]
    fn symbol_is_even_and_bounded(k in kernels(), xi in -50.0f64..50.0) {
        let a = k.symbol(xi);
        prop_assert_eq!(a, k.symbol(-xi));
        prop_assert!(a.abs() <= k.mass_bound() * (1.0 + 1e-15));
    }

    #[test]
    fn scaled_symbol_is_unscaled_at_delta_xi(k in kernels(), d in 0.01f64..2.0, xi in -20.0f64..20.0) {
        prop_assert_eq!(k.symbol_eval(d, xi), k.symbol(d * xi));
    }

    #[test]
    fn matching_order_is_symmetric(a in kernels(), b in kernels()) {
        prop_assert_eq!(matching_order(&a, &b), matching_order(&b, &a));
    }

    #[test]
    fn parseval(f in field(64, 7.0)) {
        let ops = Spectral::new(*f.grid());
        let direct = (f.grid().dx() * f.values().iter().map(|v| v * v).sum::<f64>()).sqrt();
        let spectral = ops.sobolev_norm(&f, NormOrder::new(0.0).unwrap());
        prop_assert!((direct - spectral).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn convolution_is_antisymmetric_against_derivative(k in kernels(), d in 0.05f64..1.0, f in field(128, 10.0)) {
        let g = *f.grid();
        let ops = Spectral::new(g);
        let kf = ops.apply_convolution(&k, d, &f);
        let n2 = f.inner(&f);
        prop_assert!(kf.inner(&ops.derivative(&f)).abs() <= 1e-10 * n2 * g.max_wavenumber());
    }

    #[test]
    fn convolution_is_self_adjoint(k in kernels(), d in 0.05f64..1.0, f in field(128, 10.0), h in field(128, 10.0)) {
        let ops = Spectral::new(*f.grid());
        let lhs = ops.apply_convolution(&k, d, &f).inner(&h);
        let rhs = f.inner(&ops.apply_convolution(&k, d, &h));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * f.l2_norm() * h.l2_norm());
    }

    #[test]
    fn convolution_norm_bounded_by_mass(k in kernels(), d in 0.05f64..1.0, f in field(128, 10.0)) {
        let ops = Spectral::new(*f.grid());
        let kf = ops.apply_convolution(&k, d, &f);
        prop_assert!(kf.l2_norm() <= k.mass_bound() * f.l2_norm() * (1.0 + 1e-14));
    }

    #[test]
    fn convolution_preserves_mean(k in kernels(), d in 0.05f64..1.0, f in field(128, 10.0)) {
        let ops = Spectral::new(*f.grid());
        let kf = ops.apply_convolution(&k, d, &f);
        prop_assert!((kf.mass() - f.mass()).abs() <= 1e-12 * (1.0 + f.mass().abs()));
    }
}

#[test]
fn moment_duality_through_order_four() {
    for k in catalog() {
        for j in 0..=4 {
            let (Some(q), Some(s)) = (moment_by_quadrature(&k, j), moment_by_symbol(&k, j)) else {
                continue;
            };
            assert!((q - s).abs() <= 1e-6, "{} m_{j}: {q} vs {s}", k.name());
        }
    }
}

#[test]
fn moments_against_closed_forms() {
    // e^{-|x|}/2 has even moments (2n)!.
    let bbm = KernelSpec::bbm();
    for (j, m) in [(0, 1.0), (2, 2.0), (4, 24.0), (6, 720.0)] {
        assert!((moment(&bbm, j).unwrap().value - m).abs() < 1e-8 * m);
    }
    // Symbol 1 - ξ⁴ + ... gives m₂ = 0 and m₄ = 4!·(-1).
    let ros = KernelSpec::rosenau();
    assert!(moment(&ros, 2).unwrap().value.abs() < 1e-10);
    assert!((moment(&ros, 4).unwrap().value + 24.0).abs() < 1e-8);
    // Indicator of [-1/2, 1/2]: m₂ = 1/12, m₄ = 1/80.
    let rect = KernelSpec::rectangular();
    assert!((moment(&rect, 2).unwrap().value - 1.0 / 12.0).abs() < 1e-13);
    assert!((moment(&rect, 4).unwrap().value - 1.0 / 80.0).abs() < 1e-13);
    // 7/6 on |x| ≤ 1/2, -1/6 on 1/2 < |x| ≤ 1: m₂ = 0, m₄ = -1/20.
    let five = KernelSpec::five_point();
    assert!(moment(&five, 2).unwrap().value.abs() < 1e-13);
    assert!((moment(&five, 4).unwrap().value + 0.05).abs() < 1e-13);
}

#[test]
fn symbol_only_kernels_use_derivatives() {
    let m = moment(&KernelSpec::fractional(1.0).unwrap(), 2).unwrap();
    assert_eq!(m.method, MomentMethod::SymbolDerivative);
    assert!((m.value - 2.0).abs() < 1e-10);
    let d = moment(&KernelSpec::dirac(), 4).unwrap();
    assert_eq!(d.value, 0.0);
    assert!(moment(&KernelSpec::fractional(0.75).unwrap(), 2).is_err());
}

#[test]
fn bbm_family_orders() {
    let dirac = KernelSpec::dirac();
    for k in 1..=4 {
        let kern = KernelSpec::bbm_family(k).unwrap();
        assert_eq!(
            matching_order(&kern, &dirac),
            Ok(MatchingOrder::Order(2 * k))
        );
    }
    assert_eq!(
        matching_order(&KernelSpec::bbm_family(1).unwrap(), &KernelSpec::bbm()),
        Ok(MatchingOrder::Identical)
    );
}

#[test]
fn fractional_order_from_fit() {
    let dirac = KernelSpec::dirac();
    match matching_order(&KernelSpec::fractional(0.75).unwrap(), &dirac).unwrap() {
        MatchingOrder::Fractional(r) => assert!((r - 1.5).abs() <= 0.05, "{r}"),
        other => panic!("unexpected {other}"),
    }
    // |ξ|³ is not an even power, so no Taylor order applies.
    match matching_order(&KernelSpec::fractional(1.5).unwrap(), &dirac).unwrap() {
        MatchingOrder::Fractional(r) => assert!((r - 3.0).abs() <= 0.05, "{r}"),
        other => panic!("unexpected {other}"),
    }
}
