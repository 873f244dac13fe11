use mws_core::quadrature::{
    gauss_legendre, integrate_1d, integrate_simplex4, Endpoint, QuadOptions, SimplexMesh, Singularity,
};
use proptest::prelude::*;

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// `∫_a^b Σ c_k t^k dt` from the antiderivative.
fn poly_integral(c: &[f64], a: f64, b: f64) -> f64 {
    c.iter().enumerate().map(|(k, &ck)| ck * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k as f64 + 1.0)).sum()
}

/// `∫∫_{0<s<t<1} t^i s^j ds dt`.
fn triangle_monomial(i: usize, j: usize) -> f64 {
    1.0 / ((j as f64 + 1.0) * (i as f64 + j as f64 + 2.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_legendre_is_exact_to_its_degree(n in 1usize..24, seed in prop::collection::vec(-1.0f64..1.0, 48)) {
        let (x, w) = gauss_legendre(n);
        let c = &seed[..2 * n];
        let q: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * horner(c, xi)).sum();
        let exact = poly_integral(c, -1.0, 1.0);
        let scale: f64 = c.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!((q - exact).abs() < 1e-13 * scale, "n={} {} vs {}", n, q, exact);
    }

    #[test]
    fn adaptive_rule_is_exact_on_polynomials(c in prop::collection::vec(-1.0f64..1.0, 1..16), a in -2.0f64..1.0, len in 0.1f64..3.0) {
        let b = a + len;
        let r = integrate_1d(|t| horner(&c, t), a, b, Singularity::None, &QuadOptions::default()).unwrap();
        let exact = poly_integral(&c, a, b);
        let scale = poly_integral(&c.iter().map(|v| v.abs()).collect::<Vec<_>>(), 0.0, a.abs().max(b.abs())).max(1.0);
        prop_assert!(r.converged);
        prop_assert!((r.value - exact).abs() < 1e-13 * scale * len.max(1.0), "{} vs {}", r.value, exact);
    }

    #[test]
    fn power_singularity_is_absorbed(e in -0.9f64..=-0.1, k in 0usize..5, right in any::<bool>()) {
        // ∫_0^1 t^e t^k dt, singular at the left end, or its mirror
        let (g, endpoint): (Box<dyn Fn(f64) -> f64>, _) = if right {
            (Box::new(move |t: f64| (1.0 - t).powi(k as i32)), Endpoint::Right)
        } else {
            (Box::new(move |t: f64| t.powi(k as i32)), Endpoint::Left)
        };
        let r = integrate_1d(g, 0.0, 1.0, Singularity::Power { exponent: e, endpoint }, &QuadOptions::with_tol(1e-12)).unwrap();
        let exact = 1.0 / (e + k as f64 + 1.0);
        prop_assert!((r.value - exact).abs() < 1e-8 * exact, "{} vs {}", r.value, exact);
    }

    #[test]
    fn power_singularity_on_shifted_interval(e in -0.9f64..=-0.1, a in -1.0f64..1.0, len in 0.2f64..2.0) {
        // ∫_a^{a+L} (t-a)^e cos(t-a) dt against a dense series
        let r = integrate_1d(move |t: f64| (t - a).cos(), a, a + len,
            Singularity::Power { exponent: e, endpoint: Endpoint::Left }, &QuadOptions::with_tol(1e-12)).unwrap();
        let mut exact = 0.0;
        let mut term = 1.0;
        for m in 0..40 {
            let p = 2 * m;
            exact += term * len.powf(e + p as f64 + 1.0) / (e + p as f64 + 1.0);
            term *= -1.0 / (((p + 1) * (p + 2)) as f64);
        }
        prop_assert!((r.value - exact).abs() < 1e-8 * exact.abs(), "{} vs {}", r.value, exact);
    }

    #[test]
    fn separable_simplex_integrand_factorises(
        f in prop::collection::vec(-1.0f64..1.0, 9),
        g in prop::collection::vec(-1.0f64..1.0, 9),
    ) {
        // f, g are polynomials of degree ≤ 2 in each of (t, s)
        let eval = |c: &[f64], t: f64, s: f64| -> f64 {
            (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| c[3 * i + j] * t.powi(i as i32) * s.powi(j as i32)).sum()
        };
        let tri = |c: &[f64]| -> f64 {
            (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| c[3 * i + j] * triangle_monomial(i, j)).sum()
        };
        let exact = tri(&f) * tri(&g);
        let mesh = SimplexMesh { outer_panels: 2, inner_panels: 2, order: 8 };
        let r = integrate_simplex4(|t1, s1, t2, s2| eval(&f, t1, s1) * eval(&g, t2, s2), 1.0, &mesh, None).unwrap();
        let scale = tri(&f.iter().map(|v| v.abs()).collect::<Vec<_>>()) * tri(&g.iter().map(|v| v.abs()).collect::<Vec<_>>());
        prop_assert!((r.estimate.value - exact).abs() < 1e-8 * scale, "{} vs {}", r.estimate.value, exact);
    }
}

#[test]
fn log_weights() {
    // ∫_0^1 ln t dt = -1, ∫_0^1 t^e ln t dt = -1/(e+1)²
    let opts = QuadOptions::<f64>::with_tol(1e-13);
    let r = integrate_1d(|_: f64| 1.0, 0.0, 1.0, Singularity::Log { endpoint: Endpoint::Left }, &opts).unwrap();
    assert!((r.value + 1.0).abs() < 1e-10);
    for &e in &[-0.9, -0.5, -0.1] {
        let r = integrate_1d(
            |_: f64| 1.0,
            0.0,
            1.0,
            Singularity::PowerLog { exponent: e, endpoint: Endpoint::Right },
            &opts,
        )
        .unwrap();
        let exact = -1.0 / ((e + 1.0) * (e + 1.0));
        assert!((r.value / exact - 1.0).abs() < 1e-8, "e={e}: {}", r.value);
    }
}

#[test]
fn rejects_bad_input() {
    let opts = QuadOptions::<f64>::default();
    assert!(integrate_1d(|t: f64| t, 1.0, 0.0, Singularity::None, &opts).is_err());
    let s = Singularity::Power { exponent: -1.0, endpoint: Endpoint::Left };
    assert!(integrate_1d(|t: f64| t, 0.0, 1.0, s, &opts).is_err());
    assert!(SimplexMesh::parse("3:0:6").is_err());
    assert_eq!(SimplexMesh::parse("3:4:6").unwrap().to_string(), "3:4:6");
}
