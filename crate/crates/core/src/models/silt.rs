//! Self-intersection local times of a Gaussian process `X_t = ⟨f_t, ω⟩`.
//!
//! Increments `f(t,s) = f_t - f_s` enter through their norms and
//! cross products. For a pair of increments with correlation `σ`, the
//! pairwise Donsker norm is
//! `1/(2π‖f‖‖g‖)·(1 - σ²λ⁴)^{-1/2}`; integrating it (and its λ-derivative)
//! at `λ = 1` over both time simplices gives the L² and first-order criteria.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::gaussian_mc::{mc_mean, ComplexEstimate, ComplexGaussianBatch, McError};
use crate::quadrature::{integrate_simplex4, SimplexMesh, TubeExclusion, TubeTrend};
use crate::scalar::Real;

/// Inner products of process increments on `[0, T]`.
pub trait CovarianceModel<T: Real>: Sync {
    /// `‖f_t - f_s‖²`.
    fn incr_norm_sq(&self, t: T, s: T) -> T;
    /// `⟨f(t1,s1), f(t2,s2)⟩`.
    fn cross(&self, t1: T, s1: T, t2: T, s2: T) -> T;
    fn horizon(&self) -> T;
    fn name(&self) -> String;
}

/// Fractional Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbmParams<T> {
    #[serde(rename = "H")]
    pub hurst: T,
    #[serde(rename = "T", default = "unit_horizon", bound(deserialize = "T: Real + Deserialize<'de>"))]
    pub horizon: T,
}

fn unit_horizon<T: Real>() -> T {
    T::one()
}

impl<T: Real> FbmParams<T> {
    pub fn new(hurst: T, horizon: T) -> Result<Self, ModelError> {
        let p = Self { hurst, horizon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.hurst > T::zero() && self.hurst < T::one()) {
            return Err(ModelError::InvalidSpec(format!("H = {} must lie in (0, 1)", self.hurst.as_f64())));
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(ModelError::InvalidSpec(format!("T = {} must be positive", self.horizon.as_f64())));
        }
        Ok(())
    }

    fn pow(&self, x: T) -> T {
        x.abs().powf(T::lit(2.0) * self.hurst)
    }

    /// `|x+b|^{2H} - |x|^{2H}` without cancellation when `x` and `x+b` share a sign.
    fn pow_step(&self, x: T, b: T) -> T {
        let y = x + b;
        if x != T::zero() && (x > T::zero()) == (y > T::zero()) && y != T::zero() {
            let e = T::lit(2.0) * self.hurst;
            self.pow(x) * (e * (b / x).ln_1p()).exp_m1()
        } else {
            self.pow(y) - self.pow(x)
        }
    }
}

/// `½(|t1-s2|^{2H} + |s1-t2|^{2H} - |t1-t2|^{2H} - |s1-s2|^{2H})`.
///
/// Evaluated as a difference of increments of `|x|^{2H}` so that short,
/// well separated intervals keep their relative accuracy.
pub fn fbm_cross<T: Real>(params: &FbmParams<T>, t1: T, s1: T, t2: T, s2: T) -> T {
    let ((t1, s1), (t2, s2)) = if (t1, s1) >= (t2, s2) { ((t1, s1), (t2, s2)) } else { ((t2, s2), (t1, s1)) };
    let d = t1 - t2;
    let b = t2 - s2;
    let a = t1 - s1;
    T::lit(0.5) * (params.pow_step(d, b) - params.pow_step(d - a, b))
}

impl<T: Real> CovarianceModel<T> for FbmParams<T> {
    fn incr_norm_sq(&self, t: T, s: T) -> T {
        self.pow(t - s)
    }
    fn cross(&self, t1: T, s1: T, t2: T, s2: T) -> T {
        fbm_cross(self, t1, s1, t2, s2)
    }
    fn horizon(&self) -> T {
        self.horizon
    }
    fn name(&self) -> String {
        format!("fbm(H={}, T={})", self.hurst, self.horizon)
    }
}

/// Plug-in model with constant increment norm and constant correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCovariance<T> {
    pub norm_sq: T,
    pub sigma: T,
    pub horizon: T,
}

impl<T: Real> CovarianceModel<T> for ConstantCovariance<T> {
    fn incr_norm_sq(&self, _: T, _: T) -> T {
        self.norm_sq
    }
    fn cross(&self, _: T, _: T, _: T, _: T) -> T {
        self.sigma * self.norm_sq
    }
    fn horizon(&self) -> T {
        self.horizon
    }
    fn name(&self) -> String {
        format!("constant(norm_sq={}, sigma={})", self.norm_sq, self.sigma)
    }
}

fn pair_geometry<T: Real>(cov: &dyn CovarianceModel<T>, t1: T, s1: T, t2: T, s2: T) -> Result<(T, T, T), ModelError> {
    let nf = cov.incr_norm_sq(t1, s1).sqrt();
    let ng = cov.incr_norm_sq(t2, s2).sqrt();
    if !(nf > T::zero() && ng > T::zero()) {
        return Err(ModelError::Singular(format!(
            "increment norm vanishes at ({}, {}) or ({}, {})",
            t1.as_f64(),
            s1.as_f64(),
            t2.as_f64(),
            s2.as_f64()
        )));
    }
    let sigma = cov.cross(t1, s1, t2, s2) / (nf * ng);
    if sigma.abs() > T::one() + T::lit(1e-12) {
        return Err(ModelError::InvalidSpec(format!("correlation {} exceeds 1 in modulus", sigma.as_f64())));
    }
    Ok((nf, ng, sigma.max(-T::one()).min(T::one())))
}

/// `1/(2π‖f‖‖g‖)·(1 - σ²λ⁴)^{-1/2}` for the increments `(t1,s1)`, `(t2,s2)`.
pub fn silt_pair_density<T: Real>(
    cov: &dyn CovarianceModel<T>,
    t1: T,
    s1: T,
    t2: T,
    s2: T,
    lambda: T,
) -> Result<T, ModelError> {
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(ModelError::Domain(format!("lambda = {} must lie in [0, 1]", lambda.as_f64())));
    }
    let (nf, ng, sigma) = pair_geometry(cov, t1, s1, t2, s2)?;
    let rad = T::one() - sigma * sigma * lambda.powi(4);
    if !(rad > T::zero()) {
        return Err(ModelError::Divergent("perfectly correlated increments at lambda = 1".into()));
    }
    Ok((T::lit(2.0) * T::PI() * (nf * ng) * rad.sqrt()).recip())
}

/// `(‖f‖²‖g‖² - ⟨f,g⟩², ⟨f,g⟩)`.
fn gram<T: Real>(cov: &dyn CovarianceModel<T>, t1: T, s1: T, t2: T, s2: T) -> (T, T) {
    let a = cov.incr_norm_sq(t1, s1);
    let b = cov.incr_norm_sq(t2, s2);
    let c = cov.cross(t1, s1, t2, s2);
    (a * b - c * c, c)
}

/// `1/(2π·sqrt(det))`, the pair density at `λ = 1`.
pub fn silt_l2_integrand<T: Real>(cov: &dyn CovarianceModel<T>, t1: T, s1: T, t2: T, s2: T) -> T {
    let (det, _) = gram(cov, t1, s1, t2, s2);
    if !(det > T::zero()) {
        return T::infinity();
    }
    (T::lit(2.0) * T::PI() * det.sqrt()).recip()
}

/// `⟨f,g⟩²/(π·det^{3/2})`, the λ-derivative of the pair density at `λ = 1`.
pub fn silt_d12_integrand<T: Real>(cov: &dyn CovarianceModel<T>, t1: T, s1: T, t2: T, s2: T) -> T {
    let (det, c) = gram(cov, t1, s1, t2, s2);
    if c == T::zero() {
        return T::zero();
    }
    if !(det > T::zero()) {
        return T::infinity();
    }
    c * c / (T::PI() * det * det.sqrt())
}

/// `d^k/dx^k (a - b x⁴)^{-1/2}` for `k = 1, 2, 3`.
pub fn silt_lambda_derivative<T: Real>(a: T, b: T, x: T) -> Result<[T; 3], ModelError> {
    if !(x > T::zero() && x < T::one()) {
        return Err(ModelError::Domain(format!("x = {} must lie in (0, 1)", x.as_f64())));
    }
    let r = a - b * x.powi(4);
    if !(r > T::zero()) {
        return Err(ModelError::Domain("a - b x⁴ must be positive".into()));
    }
    let c = |k: f64| T::lit(k);
    let r32 = r.powf(c(-1.5));
    let r52 = r32 / r;
    let r72 = r52 / r;
    let bx4 = b * x.powi(4);
    let d1 = c(2.0) * b * x.powi(3) * r32;
    let d2 = c(6.0) * b * x * x * (a + bx4) * r52;
    let d3 = (c(12.0) * a * a * b * x + c(84.0) * a * b * b * x.powi(5) + c(24.0) * b.powi(3) * x.powi(9)) * r72;
    Ok([d1, d2, d3])
}

/// One mesh level of a criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionLevel<T> {
    pub mesh: SimplexMesh,
    pub value: T,
    pub error_bound: T,
    pub tube_values: Vec<(T, T)>,
    pub rate: Option<T>,
    pub trend: Option<TubeTrend>,
    pub nonfinite: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiltCriterion<T> {
    /// Finest-level extrapolated value.
    pub value: T,
    /// Tube extrapolation error plus the change across mesh levels.
    pub error_bound: T,
    pub levels: Vec<CriterionLevel<T>>,
    /// `|v_fine - v_coarse| / |v_fine|`.
    pub relative_change: T,
    /// Why the criterion is considered infinite, if it is.
    pub divergence: Option<String>,
}

impl<T: Real> SiltCriterion<T> {
    /// Finite, free of divergence indicators and stable within `rel` across levels.
    pub fn is_finite_and_stable(&self, rel: T) -> bool {
        self.divergence.is_none() && self.value.is_finite() && self.relative_change <= rel
    }
}

/// Relative change across mesh levels accepted as stable.
pub const STABILITY: f64 = 0.05;

fn criterion<T: Real>(
    cov: &dyn CovarianceModel<T>,
    mesh: &SimplexMesh,
    integrand: fn(&dyn CovarianceModel<T>, T, T, T, T) -> T,
) -> Result<SiltCriterion<T>, ModelError> {
    let tube = TubeExclusion::default();
    let meshes = [*mesh, mesh.refined()];
    let mut levels = Vec::with_capacity(meshes.len());
    for m in meshes {
        let r = integrate_simplex4(|t1, s1, t2, s2| integrand(cov, t1, s1, t2, s2), cov.horizon(), &m, Some(&tube))?;
        levels.push(CriterionLevel {
            mesh: m,
            value: r.estimate.value,
            error_bound: r.estimate.error_bound,
            tube_values: r.tube_values,
            rate: r.rate,
            trend: r.trend,
            nonfinite: r.nonfinite,
        });
    }
    let fine = levels.last().expect("two levels");
    let coarse = &levels[0];
    let relative_change = if fine.value == coarse.value {
        T::zero()
    } else {
        (fine.value - coarse.value).abs() / fine.value.abs().max(T::min_positive_value())
    };
    let divergence = if levels.iter().any(|l| l.nonfinite) {
        Some("integrand is infinite on a set of positive measure".to_string())
    } else if levels.iter().any(|l| l.trend == Some(TubeTrend::Diverging)) {
        let rate = fine.rate.map(|r| r.as_f64()).unwrap_or(f64::NAN);
        Some(format!("excluded tube contribution does not decay (fitted rate {rate:.3})"))
    } else {
        None
    };
    Ok(SiltCriterion {
        value: fine.value,
        error_bound: fine.error_bound + (fine.value - coarse.value).abs(),
        relative_change,
        divergence,
        levels,
    })
}

/// `∫∫ 1/(2π·sqrt(‖f₁‖²‖f₂‖² - ⟨f₁,f₂⟩²))` over both time simplices.
pub fn silt_l2_criterion<T: Real>(
    cov: &dyn CovarianceModel<T>,
    mesh: &SimplexMesh,
) -> Result<SiltCriterion<T>, ModelError> {
    criterion(cov, mesh, silt_l2_integrand)
}

/// `∫∫ ⟨f₁,f₂⟩²/(π·(‖f₁‖²‖f₂‖² - ⟨f₁,f₂⟩²)^{3/2})` over both time simplices.
pub fn silt_d12_criterion<T: Real>(
    cov: &dyn CovarianceModel<T>,
    mesh: &SimplexMesh,
) -> Result<SiltCriterion<T>, ModelError> {
    criterion(cov, mesh, silt_d12_integrand)
}

/// `∫ Sδ_f(λu)·conj(Sδ_g(λu)) dν(u)` by Monte Carlo in a two-dimensional basis
/// `f = ‖f‖e₁`, `g = ‖g‖(σe₁ + sqrt(1-σ²)e₂)`.
pub fn silt_pair_mc(
    norm_f: f64,
    norm_g: f64,
    sigma: f64,
    lambda: f64,
    batch: &ComplexGaussianBatch,
) -> Result<ComplexEstimate, McError> {
    if batch.dim() < 2 {
        return Err(McError::InvalidArgument("pair estimate needs two coordinates".into()));
    }
    if !(sigma.abs() <= 1.0) || !(norm_f > 0.0 && norm_g > 0.0) {
        return Err(McError::InvalidArgument("need |sigma| <= 1 and positive norms".into()));
    }
    let tau = (1.0 - sigma * sigma).sqrt();
    let scale = 1.0 / (2.0 * std::f64::consts::PI * norm_f * norm_g);
    let l2 = lambda * lambda;
    Ok(mc_mean(batch, |u| {
        let x = u[0];
        let y = u[0] * sigma + u[1] * tau;
        let sf = (x * x * (-0.5 * l2)).exp();
        let sg = (y * y * (-0.5 * l2)).exp();
        sf * sg.conj() * scale
    }))
}

/// Pair correlation `σ` for a covariance model.
pub fn pair_correlation<T: Real>(cov: &dyn CovarianceModel<T>, t1: T, s1: T, t2: T, s2: T) -> Result<T, ModelError> {
    pair_geometry(cov, t1, s1, t2, s2).map(|g| g.2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_mc::sample_nu;
    use num_complex::Complex64;

    fn bm() -> FbmParams<f64> {
        FbmParams::new(0.5, 1.0).unwrap()
    }

    #[test]
    fn cross_examples() {
        let p = bm();
        assert!((fbm_cross(&p, 1.0, 0.0, 0.75, 0.25) - 0.5).abs() < 1e-15);
        assert!(fbm_cross(&p, 1.0, 0.6, 0.4, 0.0).abs() < 1e-15);
        let h = FbmParams::new(0.3, 1.0).unwrap();
        let (t, s): (f64, f64) = (0.8, 0.35);
        assert!((fbm_cross(&h, t, s, t, s) - (t - s).powf(0.6)).abs() < 1e-15);
    }

    #[test]
    fn pair_density_examples() {
        let p = bm();
        let v = silt_pair_density(&p, 1.0, 0.6, 0.4, 0.0, 0.7).unwrap();
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI * 0.4f64.sqrt() * 0.4f64.sqrt())).abs() < 1e-14);
        let v = silt_pair_density(&p, 1.0, 0.0, 0.75, 0.25, 0.0).unwrap();
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI * 0.5f64.sqrt())).abs() < 1e-14);
        // σ² = 0.5²/(1·0.5) = 0.5
        let v = silt_pair_density(&p, 1.0, 0.0, 0.75, 0.25, 1.0).unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI * 0.5f64.sqrt()) / (1.0f64 - 0.5).sqrt();
        assert!((v - want).abs() < 1e-14);
        assert!(matches!(silt_pair_density(&p, 0.5, 0.2, 0.5, 0.2, 1.0), Err(ModelError::Divergent(_))));
        assert!(matches!(silt_pair_density(&p, 0.5, 0.5, 0.7, 0.2, 1.0), Err(ModelError::Singular(_))));
    }

    #[test]
    fn pair_density_mc() {
        let b = sample_nu(2, 1_000_000, 11).unwrap();
        let sigma = 0.5f64.sqrt();
        for &l in &[0.5, 0.8] {
            let e = silt_pair_mc(1.0, 0.5f64.sqrt(), sigma, l, &b).unwrap();
            let cov = ConstantCovariance { norm_sq: 1.0, sigma, horizon: 1.0 };
            let want = silt_pair_density(&cov, 1.0, 0.0, 1.0, 0.0, l).unwrap() / 0.5f64.sqrt();
            assert!(e.z_score(Complex64::new(want, 0.0)) < 4.0, "l={l}");
        }
    }

    #[test]
    fn integrands_symmetric_and_cross_free() {
        let p = FbmParams::new(0.7, 1.0).unwrap();
        let q = (0.9, 0.2, 0.6, 0.1);
        let a = silt_l2_integrand(&p, q.0, q.1, q.2, q.3);
        let b = silt_l2_integrand(&p, q.2, q.3, q.0, q.1);
        assert_eq!(a, b);
        let a = silt_d12_integrand(&p, q.0, q.1, q.2, q.3);
        let b = silt_d12_integrand(&p, q.2, q.3, q.0, q.1);
        assert_eq!(a, b);
        let zero = ConstantCovariance { norm_sq: 1.0, sigma: 0.0, horizon: 1.0 };
        assert_eq!(silt_d12_integrand(&zero, 0.5, 0.1, 0.4, 0.2), 0.0);
    }

    #[test]
    fn cross_short_distant_increments() {
        let h = FbmParams::new(0.75, 1.0).unwrap();
        let (a, b) = (2e-10, 1e-12);
        let (t1, t2) = (0.9f64, 0.1f64);
        let c = fbm_cross(&h, t1, t1 - a, t2, t2 - b);
        let d: f64 = t1 - t2;
        let approx = 0.75 * 0.5 * d.powf(-0.5) * a * b;
        assert!(((c - approx) / approx).abs() < 1e-4, "{c} vs {approx}");
        let det = h.incr_norm_sq(t1, t1 - a) * h.incr_norm_sq(t2, t2 - b) - c * c;
        assert!(det > 0.0);
    }

    #[test]
    fn derivative_examples() {
        let d = silt_lambda_derivative(2.0f64, 1.0, 0.5).unwrap();
        assert!((d[0] - 0.25 / 1.9375f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(silt_lambda_derivative(1.0f64, 0.0, 0.5).unwrap(), [0.0; 3]);
        let f = |x: f64| (1.0 - 0.5 * x.powi(4)).powf(-0.5);
        let h = 1e-3;
        let x = 0.3;
        let fd2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
        let d = silt_lambda_derivative(1.0, 0.5, x).unwrap();
        assert!(((d[1] - fd2) / d[1]).abs() < 1e-5);
        let h = 1e-2;
        let fd3 = (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h.powi(3));
        assert!(((d[2] - fd3) / d[2]).abs() < 1e-3);
        assert!(silt_lambda_derivative(1.0f64, 2.0, 0.9).is_err());
    }

    #[test]
    fn constant_criteria() {
        let cov = ConstantCovariance { norm_sq: 1.0, sigma: 0.0, horizon: 1.0 };
        let r = silt_l2_criterion(&cov, &SimplexMesh::default()).unwrap();
        assert!((r.value - 1.0 / (8.0 * std::f64::consts::PI)).abs() < 1e-10);
        assert!(r.is_finite_and_stable(0.05));
        let r = silt_d12_criterion(&cov, &SimplexMesh::default()).unwrap();
        assert_eq!(r.value, 0.0);
        let bad = ConstantCovariance { norm_sq: 1.0, sigma: 1.0, horizon: 1.0 };
        let r = silt_l2_criterion(&bad, &SimplexMesh::default()).unwrap();
        assert!(r.divergence.is_some());
    }

    #[test]
    fn fbm_json() {
        let p: FbmParams<f64> = serde_json::from_str(r#"{"H":0.3}"#).unwrap();
        assert_eq!(p.horizon, 1.0);
        assert!(FbmParams::new(1.0, 1.0).is_err());
    }
}
