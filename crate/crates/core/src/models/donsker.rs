//! Donsker's delta `δ(X)` of a `d`-dimensional Gaussian vector with
//! independent components of variance `‖f_k‖²`.
//!
//! `B(λ) = C·(1 - λ⁴)^{-d/2}` with `C = Π 1/(2π‖f_k‖²)`, so the chaos
//! coefficients are `b_{2k} = C·Γ(k + d/2)/(Γ(d/2)·k!)` and `b_odd = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::chaos::{ChaosProfile, TailModel};
use crate::gaussian_mc::{McError, STransform};
use crate::quadrature::{integrate_1d, integrate_2d_gaussian, Endpoint, QuadOptions, QuadratureResult, Singularity};
use crate::scalar::Real;
use crate::special::{ln_gamma, ln_gamma_diff};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DonskerSpec<T> {
    pub d: usize,
    pub norms: Vec<T>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DonskerRepr<T> {
    d: usize,
    #[serde(default)]
    norms: Option<Vec<T>>,
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for DonskerSpec<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = DonskerRepr::<T>::deserialize(d)?;
        let spec = match raw.norms {
            Some(norms) => DonskerSpec::new(norms),
            None => DonskerSpec::unit(raw.d),
        }
        .map_err(serde::de::Error::custom)?;
        if spec.d != raw.d {
            return Err(serde::de::Error::custom(format!("d = {} but {} norms given", raw.d, spec.d)));
        }
        Ok(spec)
    }
}

impl<T: Real> DonskerSpec<T> {
    pub fn new(norms: Vec<T>) -> Result<Self, ModelError> {
        if norms.is_empty() {
            return Err(ModelError::InvalidSpec("dimension must be at least 1".into()));
        }
        if let Some(bad) = norms.iter().find(|n| !(**n > T::zero()) || !n.is_finite()) {
            return Err(ModelError::InvalidSpec(format!("norm {} must be positive", bad.as_f64())));
        }
        Ok(Self { d: norms.len(), norms })
    }

    /// `d` components of unit norm.
    pub fn unit(d: usize) -> Result<Self, ModelError> {
        Self::new(vec![T::one(); d])
    }

    /// `ln C = -Σ ln(2π‖f_k‖²)`.
    pub fn ln_constant(&self) -> T {
        let two_pi = T::lit(2.0) * T::PI();
        -self.norms.iter().map(|&n| (two_pi * n * n).ln()).fold(T::zero(), |a, b| a + b)
    }

    fn half_d(&self) -> T {
        T::from_usize_lossy(self.d) * T::lit(0.5)
    }
}

/// `C·(1+λ²)^{-d/2}(1-λ²)^{-d/2}` for `0 ≤ λ < 1`.
pub fn donsker_bs_norm<T: Real>(spec: &DonskerSpec<T>, lambda: T) -> Result<T, ModelError> {
    if !(lambda >= T::zero() && lambda < T::one()) {
        return Err(ModelError::Domain(format!("lambda = {} must lie in [0, 1)", lambda.as_f64())));
    }
    let l4 = lambda.powi(4);
    Ok((spec.ln_constant() - spec.half_d() * (-l4).ln_1p()).exp())
}

/// Chaos profile with head `b_0..b_n_max` and a fitted tail `C′·n^{d/2-1}`.
///
/// The tail exponent `p = 1 - d/2` comes from `Γ(k+d/2)/k! ~ k^{d/2-1}`; the
/// constant averages the even/odd alternation, `C′ = C·2^{-d/2}/Γ(d/2)`.
pub fn donsker_chaos_profile<T: Real>(spec: &DonskerSpec<T>, n_max: usize) -> Result<ChaosProfile<T>, ModelError> {
    let half = spec.half_d();
    let ln_c = spec.ln_constant();
    let ln_g = ln_gamma(half)?;
    let mut head = vec![T::zero(); n_max + 1];
    for (n, b) in head.iter_mut().enumerate() {
        if n % 2 == 0 {
            let k = T::from_usize_lossy(n / 2);
            *b = (ln_c + ln_gamma_diff(k + half, k + T::one())? - ln_g).exp();
        }
    }
    let c_tail = (ln_c - half * T::LN_2() - ln_g).exp();
    let tail = TailModel::GeometricPolynomial { c: c_tail, rho: T::one(), p: T::one() - half };
    Ok(ChaosProfile::new(head, tail)?)
}

/// `α* = -d/2`.
pub fn donsker_alpha_star<T: Real>(d: usize) -> T {
    -T::from_usize_lossy(d) * T::lit(0.5)
}

/// `∫₀¹ ln(y)·y^{α-1} dy = -1/α²`.
pub fn log_beta_integral<T: Real>(alpha: T) -> Result<T, ModelError> {
    check_unit_interval(alpha)?;
    Ok(-(alpha * alpha).recip())
}

/// The same integral by quadrature with the `y^{α-1}·ln y` weight declared.
pub fn log_beta_integral_quadrature<T: Real>(alpha: T, tol: T) -> Result<QuadratureResult<T>, ModelError> {
    check_unit_interval(alpha)?;
    let opts = QuadOptions { abs_tol: tol, rel_tol: tol, ..QuadOptions::default() };
    let r = integrate_1d(
        |_| T::one(),
        T::zero(),
        T::one(),
        Singularity::PowerLog { exponent: alpha - T::one(), endpoint: Endpoint::Left },
        &opts,
    )?;
    Ok(r.require_converged()?)
}

fn check_unit_interval<T: Real>(alpha: T) -> Result<(), ModelError> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(ModelError::Domain(format!("alpha = {} must lie in (0, 1)", alpha.as_f64())))
    }
}

/// `(1/π)∫_{ℝ²} exp(-λ²(x²-y²))·exp(-x²-y²) dx dy`, which equals
/// `(1+λ²)^{-1/2}(1-λ²)^{-1/2}`.
pub fn donsker_reduced_integral<T: Real>(lambda: T, tol: T) -> Result<QuadratureResult<T>, ModelError> {
    if !(lambda >= T::zero() && lambda < T::one()) {
        return Err(ModelError::Domain(format!("lambda = {} must lie in [0, 1)", lambda.as_f64())));
    }
    let l2 = lambda * lambda;
    let inv_pi = T::FRAC_1_PI();
    let f = |x: T, y: T| inv_pi * (-(T::one() + l2) * x * x - (T::one() - l2) * y * y).exp();
    Ok(integrate_2d_gaussian(f, T::one() - l2, tol)?)
}

/// `SΦ(λu) = Π_k (2π‖f_k‖²)^{-1/2}·exp(-λ²u_k²/2)` in the basis `e_k = f_k/‖f_k‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct DonskerEvaluator {
    spec: DonskerSpec<f64>,
    scale: f64,
}

impl DonskerEvaluator {
    pub fn new(spec: DonskerSpec<f64>) -> Self {
        let scale = (0.5 * spec.ln_constant()).exp();
        Self { spec, scale }
    }
}

impl STransform for DonskerEvaluator {
    fn name(&self) -> String {
        format!("donsker(d={})", self.spec.d)
    }
    fn dim(&self) -> usize {
        self.spec.d
    }
    fn check_lambda(&self, lambda: f64) -> Result<(), McError> {
        if (0.0..1.0).contains(&lambda) {
            Ok(())
        } else {
            Err(McError::Domain(format!("lambda = {lambda} must lie in [0, 1)")))
        }
    }
    fn eval(&self, lambda: f64, u: &[Complex64]) -> Complex64 {
        let l2 = lambda * lambda;
        let s: Complex64 = u[..self.spec.d].iter().map(|z| z * z).sum();
        (s * (-0.5 * l2)).exp() * self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::bs_norm_sq;
    use crate::regularity::alpha_threshold;
    use crate::scalar::Extended;

    const INV_2PI: f64 = 0.159_154_943_091_895_35;

    #[test]
    fn closed_form_examples() {
        let s1 = DonskerSpec::<f64>::unit(1).unwrap();
        assert!((donsker_bs_norm(&s1, 0.0).unwrap() - INV_2PI).abs() < 1e-16);
        let v = donsker_bs_norm(&s1, 0.5).unwrap();
        assert!((v - INV_2PI / (1.0f64 - 0.0625).sqrt()).abs() < 1e-15);
        let s2 = DonskerSpec::<f64>::unit(2).unwrap();
        let v2 = donsker_bs_norm(&s2, 0.5).unwrap();
        assert!((v2 - v * v).abs() < 1e-15);
        assert!(donsker_bs_norm(&s1, 1.0).is_err());
    }

    #[test]
    fn profile_coefficients() {
        let p = donsker_chaos_profile(&DonskerSpec::<f64>::unit(1).unwrap(), 10).unwrap();
        let h = p.head();
        assert!((h[0] - INV_2PI).abs() < 1e-16);
        assert!((h[2] - INV_2PI * 0.5).abs() < 1e-16);
        assert!((h[4] - INV_2PI * 0.375).abs() < 1e-16);
        assert!(h.iter().skip(1).step_by(2).all(|&b| b == 0.0));
        let p2 = donsker_chaos_profile(&DonskerSpec::<f64>::unit(2).unwrap(), 10).unwrap();
        let c = INV_2PI * INV_2PI;
        assert!(p2.head().iter().step_by(2).all(|&b| (b - c).abs() < 1e-15 * c));
    }

    #[test]
    fn threshold_is_minus_half_d() {
        for d in 1..=6 {
            let p = donsker_chaos_profile(&DonskerSpec::<f64>::unit(d).unwrap(), 20).unwrap();
            assert_eq!(alpha_threshold(&p), Extended::Finite(donsker_alpha_star::<f64>(d)));
        }
    }

    #[test]
    fn profile_round_trip() {
        let spec = DonskerSpec::new(vec![0.8, 1.3]).unwrap();
        let p = donsker_chaos_profile(&spec, 200).unwrap();
        for &l in &[0.1, 0.5, 0.9] {
            let series = bs_norm_sq(&p, l).unwrap().value.finite().unwrap();
            let exact: f64 = donsker_bs_norm(&spec, l).unwrap();
            assert!((series - exact).abs() < 1e-8 * exact);
        }
    }

    #[test]
    fn log_integral() {
        assert_eq!(log_beta_integral(0.5f64).unwrap(), -4.0);
        assert_eq!(log_beta_integral(0.25f64).unwrap(), -16.0);
        let q = log_beta_integral_quadrature(0.5f64, 1e-10).unwrap();
        assert!((q.value + 4.0).abs() < 1e-6);
        assert!(log_beta_integral(1.0f64).is_err());
    }

    #[test]
    fn reduced_integral_matches_closed_form() {
        for &l in &[0.0f64, 0.5, 0.9] {
            let q = donsker_reduced_integral(l, 1e-10).unwrap();
            let exact = 1.0 / ((1.0 + l * l).sqrt() * (1.0 - l * l).sqrt());
            assert!((q.value - exact).abs() < 1e-8 * exact, "l={l}");
        }
    }

    #[test]
    fn spec_json() {
        let s: DonskerSpec<f64> = serde_json::from_str(r#"{"d":2,"norms":[1.0,2.0]}"#).unwrap();
        assert_eq!(s.norms, vec![1.0, 2.0]);
        let s: DonskerSpec<f64> = serde_json::from_str(r#"{"d":3}"#).unwrap();
        assert_eq!(s.norms.len(), 3);
        assert!(serde_json::from_str::<DonskerSpec<f64>>(r#"{"d":2,"norms":[1.0]}"#).is_err());
        assert!(serde_json::from_str::<DonskerSpec<f64>>(r#"{"d":1,"norms":[0.0]}"#).is_err());
    }
}
