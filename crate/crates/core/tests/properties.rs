use num_rational::Ratio;
use proptest::prelude::*;

use coeffid_core::counterexamples::{svc_measure_exact, svc_removed, svc_set};
use coeffid_core::forward;
use coeffid_core::gmt::{
    coarea_integral, good_levels, level_budget, level_perimeter, total_variation,
};
use coeffid_core::grid::{
    derivative, lp_norm, quadrature, CoefficientBounds, GridFunction1D, Interval, LpNorm,
};
use coeffid_core::stability::{holder_exponent, k_rho_measure};

fn grid_values(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

fn unit(values: Vec<f64>) -> GridFunction1D {
    GridFunction1D::new(Interval::unit(), values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quadrature_is_linear(v in grid_values(3..60), w_seed in 0u64..1000, s in -5.0f64..5.0) {
        let g = unit(v.clone());
        let w = g.map(|x| x * 0.5 + (w_seed as f64).sin());
        let combo = g.zip_with(&w, |p, q| p + s * q).unwrap();
        let lhs = quadrature(&combo);
        let rhs = quadrature(&g) + s * quadrature(&w);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs() + rhs.abs()) * 60.0);
    }

    #[test]
    fn lp_norm_triangle_inequality(a in grid_values(8..9), b in grid_values(8..9), p in 1.0f64..6.0) {
        let (ga, gb) = (unit(a), unit(b));
        let sum = ga.zip_with(&gb, |x, y| x + y).unwrap();
        for norm in [LpNorm::Finite(p), LpNorm::Infinity] {
            let lhs = lp_norm(&sum, norm);
            let rhs = lp_norm(&ga, norm) + lp_norm(&gb, norm);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn derivative_is_exact_on_quadratics(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, n in 2usize..200) {
        let g = GridFunction1D::from_fn(Interval::unit(), n, |x| c0 + c1 * x + c2 * x * x).unwrap();
        let d = derivative(&g).unwrap();
        let scale = 1.0 + c0.abs() + c1.abs() + c2.abs();
        for i in 0..=n {
            let exact = c1 + 2.0 * c2 * d.x(i);
            prop_assert!((d.values()[i] - exact).abs() <= 1e-11 * scale * n as f64);
        }
    }

    #[test]
    fn flux_identity_holds(knots in prop::collection::vec(0.5f64..2.0, 2..10), fk in prop::collection::vec(-3.0f64..3.0, 2..10), n in 16usize..2000) {
        let iv = Interval::unit();
        let ak = GridFunction1D::new(iv, knots).unwrap();
        let fkg = GridFunction1D::new(iv, fk).unwrap();
        let a = GridFunction1D::from_fn(iv, n, |x| ak.interpolate(x)).unwrap();
        let f = GridFunction1D::from_fn(iv, n, |x| fkg.interpolate(x)).unwrap();
        let sol = forward::solve(&a, &f, &CoefficientBounds::new(0.5, 2.0).unwrap()).unwrap();
        prop_assert!(sol.relative_flux_residual(&a) < 1e-10);
        prop_assert!(sol.u.first() == 0.0);
        prop_assert!(sol.boundary_defect() < 1e-8);
        let (fmin, fmax) = (sol.primitive.min(), sol.primitive.max());
        prop_assert!(sol.ca >= fmin - 1e-12 && sol.ca <= fmax + 1e-12);
    }

    #[test]
    fn coarea_identity_is_exact(v in grid_values(2..300)) {
        let h = unit(v);
        let tv = total_variation(&h);
        let integral = coarea_integral(&h);
        prop_assert!((tv - integral).abs() <= 1e-12 * tv.max(1e-300));
    }

    #[test]
    fn total_variation_is_lower_semicontinuous(v in grid_values(2..80), dir in grid_values(80..81)) {
        let h = unit(v.clone());
        let tv = total_variation(&h);
        // h_k -> h nodally; TV(h_k) >= TV(h) - 2 eps_k ‖d‖_1, so the liminf
        // cannot drop below TV(h)
        let d1: f64 = dir.iter().take(v.len()).map(|d| d.abs()).sum();
        let mut last = f64::NAN;
        for k in 10..64 {
            let eps = 0.5f64.powi(k);
            let hk = unit(v.iter().zip(&dir).map(|(x, d)| x + eps * d).collect());
            last = total_variation(&hk);
            prop_assert!(last >= tv - 2.0 * eps * d1 - 1e-12);
        }
        prop_assert!(tv <= last + 1e-10);
    }

    #[test]
    fn monotone_functions_have_unit_perimeter(mut v in grid_values(2..100), t in -12.0f64..12.0) {
        v.sort_by(f64::total_cmp);
        let p = level_perimeter(&unit(v), t);
        prop_assert!(p == 0.0 || p == 1.0);
    }

    #[test]
    fn holder_exponent_shrinks_with_larger_exponents(p in 0.5f64..8.0, a in 0.1f64..4.0, b in 0.1f64..4.0, da in 0.0f64..2.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        let g = holder_exponent(p, hi, lo);
        prop_assert!(g > 0.0 && g <= 1.0);
        prop_assert!(holder_exponent(p, hi + da, lo) <= g + 1e-15);
    }

    #[test]
    fn band_measure_grows_with_radius(v in grid_values(2..100), m in -10.0f64..10.0, r in 0.0f64..5.0, dr in 0.0f64..5.0) {
        let big_f = unit(v);
        let small = k_rho_measure(&big_f, m, r);
        let large = k_rho_measure(&big_f, m, r + dr);
        prop_assert!(small <= large + 1e-15);
        prop_assert!(large <= 1.0 + 1e-12);
    }

    #[test]
    fn good_levels_decrease_and_respect_budget(v in prop::collection::vec(0.0f64..0.9, 2..200), t0 in 0.01f64..0.99) {
        let h = unit(v);
        if let Ok(levels) = good_levels(&h, t0) {
            prop_assert!(levels.windows(2).all(|w| w[1] < w[0]));
            for &t in &levels {
                prop_assert!(t <= t0 && t > 0.0);
                prop_assert!(level_perimeter(&h, t) <= level_budget(t));
            }
        }
    }

    #[test]
    fn svc_measure_follows_closed_form(level in 1u32..=14) {
        let exact = svc_measure_exact(level).unwrap();
        let expected = Ratio::new(1i128, 2) + Ratio::new(1i128, 1i128 << (level + 1));
        prop_assert_eq!(exact, expected);
        let kept = svc_set(level).unwrap();
        let removed = svc_removed(level).unwrap();
        prop_assert_eq!(kept.measure() + removed.measure(), 1.0);
        prop_assert_eq!(removed.len(), (1usize << level) - 1);
    }
}
