use mws_core::chaos::{bs_norm_sq, ChaosProfile};
use mws_core::gaussian_mc::{mc_bs_norm, mc_monomial_moment, sample_nu, FirstChaos, RankOnePolynomial};
use num_complex::Complex64;

#[test]
fn same_seed_same_samples() {
    let a = sample_nu(3, 10_000, 99).unwrap();
    let b = sample_nu(3, 10_000, 99).unwrap();
    let c = sample_nu(3, 10_000, 100).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.meta().seed, 99);
}

#[test]
fn radial_moments_are_rotation_invariant() {
    let batch = sample_nu(1, 200_000, 5).unwrap();
    let turned = batch.rotated(0.731);
    for n in 0..=5u32 {
        let a = mc_monomial_moment(n, n, &batch);
        let b = mc_monomial_moment(n, n, &turned);
        assert!((a.value.re - b.value.re).abs() <= 1e-12 * a.value.re.abs(), "n={n}");
        assert!((a.se - b.se).abs() <= 1e-10 * a.se.max(1e-300), "n={n}");
    }
}

#[test]
fn sixth_moment_unbiased_at_ten_million() {
    let batch = sample_nu(1, 10_000_000, 2024).unwrap();
    let m = mc_monomial_moment(6, 6, &batch);
    let z = m.z_score(Complex64::new(720.0, 0.0));
    assert!(z < 5.0, "z = {z}");
}

#[test]
fn first_chaos_norm() {
    let batch = sample_nu(1, 400_000, 17).unwrap();
    for &l in &[0.25, 0.5, 0.75] {
        let e = mc_bs_norm(&FirstChaos, l, &batch).unwrap();
        assert!(e.z_score(l * l) < 4.0);
    }
}

#[test]
fn polynomial_evaluators_match_series() {
    let heads: [&[f64]; 4] = [&[1.0, 2.0], &[0.0, 0.0, 3.0], &[0.5, 0.1, 0.2, 0.3], &[2.0, 0.0, 0.0, 0.0, 1.0]];
    let batch = sample_nu(1, 400_000, 31).unwrap();
    for h in heads {
        let p = ChaosProfile::finite(h.to_vec()).unwrap();
        let poly = RankOnePolynomial::from_coefficients(h).unwrap();
        for &l in &[0.25, 0.5, 0.75] {
            let target = bs_norm_sq(&p, l).unwrap().value.finite().unwrap();
            let e = mc_bs_norm(&poly, l, &batch).unwrap();
            assert!(e.z_score(target) < 4.0, "{h:?} at {l}: {e:?} vs {target}");
        }
    }
}
