//! Riemann–Liouville operators on `(0, 1)`.
//!
//! Closed forms act on monomials through Gamma ratios; the quadrature
//! versions evaluate the defining integrals directly and serve as oracles.
//! An order `β = m + α` with integer `m ≥ 0` and `α ∈ [0, 1)` means `m`
//! ordinary derivatives followed by `D^α`.

use crate::chaos::{weighted_sum, ChaosProfile, ChaosWeight, Geometric, ProfileError, SeriesValue};
use crate::quadrature::{integrate_1d, Endpoint, QuadOptions, QuadratureError, QuadratureResult, Singularity};
use crate::scalar::{Extended, Real};
use crate::special::{gamma, ln_gamma_shift, GammaError};

pub use crate::special::gamma_ratio;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FracError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("quadrature did not reach tolerance: best estimate {value}, error bound {error_bound}")]
    Accuracy { value: f64, error_bound: f64 },
}

/// `β = m + alpha` with `m` a non-negative integer and `0 ≤ alpha < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder<T> {
    pub m: usize,
    pub alpha: T,
}

impl<T: Real> FracOrder<T> {
    pub fn decompose(beta: T) -> Result<Self, FracError> {
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(FracError::Domain(format!("order {} must be finite and non-negative", beta.as_f64())));
        }
        let m = beta.floor();
        Ok(Self { m: m.to_usize().unwrap_or(usize::MAX), alpha: beta - m })
    }

    pub fn beta(&self) -> T {
        T::from_usize_lossy(self.m) + self.alpha
    }
}

fn check_alpha<T: Real>(alpha: T) -> Result<(), FracError> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(FracError::Domain(format!("elementary order {} must lie in (0, 1)", alpha.as_f64())))
    }
}

/// `I^α x^n = c·x^{n+α}`; returns `c = Γ(n+1)/Γ(n+1+α)`.
pub fn rl_integral_monomial<T: Real>(n: usize, alpha: T) -> Result<T, FracError> {
    check_alpha(alpha)?;
    let x = T::from_usize_lossy(n) + T::one();
    Ok(ln_gamma_shift(x, alpha)?.exp())
}

/// `D^α x^n = c·x^{n-α}`; returns `c = Γ(n+1)/Γ(n+1-α)`.
pub fn rl_derivative_monomial<T: Real>(n: usize, alpha: T) -> Result<T, FracError> {
    check_alpha(alpha)?;
    let x = T::from_usize_lossy(n) + T::one();
    Ok(gamma_ratio(x, alpha)?)
}

/// `ln` of the chaos weight produced by an operator of order `β` acting on `λ^{2n}` at `λ = 1`.
///
/// `β > 0`: `Γ(2n+1)/Γ(2n+1-β)`, zero when `2n < ⌊β⌋`.
/// `β < 0`: `Γ(2n+1)/Γ(2n+1+|β|)`.
/// With `keep_constant = false` the `n = 0` term of a positive order is dropped.
pub fn ln_operator_weight<T: Real>(x: T, beta: T, keep_constant: bool) -> T {
    if beta == T::zero() {
        return T::zero();
    }
    let a = T::lit(2.0) * x + T::one();
    if beta > T::zero() {
        if x == T::zero() && !keep_constant {
            return T::neg_infinity();
        }
        if T::lit(2.0) * x < beta.floor() {
            return T::neg_infinity();
        }
        ln_gamma_shift(a, -beta).unwrap_or(T::neg_infinity())
    } else {
        ln_gamma_shift(a, -beta).unwrap_or(T::neg_infinity())
    }
}

/// Weight of the order-`β` operator applied termwise to `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorWeight<T> {
    pub beta: T,
    pub keep_constant: bool,
}

impl<T: Real> ChaosWeight<T> for OperatorWeight<T> {
    fn ln_weight(&self, x: T) -> T {
        ln_operator_weight(x, self.beta, self.keep_constant)
    }
    fn growth(&self) -> (T, T) {
        (T::zero(), self.beta)
    }
}

/// The order-`β` operator applied termwise to `B(λ) = Σ b_n λ^{2n}`.
///
/// `β > 0`: `Σ b_n Γ(2n+1)/Γ(2n+1-β) λ^{2n-β}` over `2n ≥ ⌊β⌋`, including
/// the `n = 0` term `b_0 λ^{-β}/Γ(1-β)` when `β < 1`.
/// `β < 0`: `Σ b_n Γ(2n+1)/Γ(2n+1+|β|) λ^{2n+|β|}`.
/// `λ = 1` is accepted and gives the limiting value (possibly `+inf`).
pub fn rl_apply_series<T: Real>(profile: &ChaosProfile<T>, beta: T, lambda: T) -> Result<SeriesValue<T>, FracError> {
    if !(lambda > T::zero() && lambda <= T::one()) {
        return Err(FracError::Domain(format!("lambda = {} must lie in (0, 1]", lambda.as_f64())));
    }
    if !beta.is_finite() {
        return Err(FracError::Domain("order must be finite".into()));
    }
    let w = Geometric { inner: OperatorWeight { beta, keep_constant: true }, ln_q: T::lit(2.0) * lambda.ln() };
    let mut s = weighted_sum(profile, &w, T::default_tol());
    let scale = lambda.powf(-beta);
    if let Extended::Finite(v) = s.value {
        s.value = Extended::Finite(v * scale);
        s.remainder_bound = s.remainder_bound * scale;
    }
    Ok(s)
}

fn check_point<T: Real>(x: T) -> Result<(), FracError> {
    if x > T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(FracError::Domain(format!("x = {} must lie in (0, 1]", x.as_f64())))
    }
}

fn accept<T: Real>(r: QuadratureResult<T>) -> Result<QuadratureResult<T>, FracError> {
    if r.converged {
        Ok(r)
    } else {
        Err(FracError::Accuracy { value: r.value.as_f64(), error_bound: r.error_bound.as_f64() })
    }
}

/// `I^α f(x) = (1/Γ(α)) ∫₀ˣ f(t)(x-t)^{α-1} dt` by quadrature.
///
/// The kernel is absorbed by `x - t = x·u^{1/α}`.
pub fn rl_integral_quadrature<T: Real>(
    f: impl Fn(T) -> T,
    alpha: T,
    x: T,
    tol: T,
) -> Result<QuadratureResult<T>, FracError> {
    check_alpha(alpha)?;
    check_point(x)?;
    let g = gamma(alpha)?;
    let opts = QuadOptions { abs_tol: tol * g, rel_tol: tol, ..QuadOptions::default() };
    let r = integrate_1d(
        f,
        T::zero(),
        x,
        Singularity::Power { exponent: alpha - T::one(), endpoint: Endpoint::Right },
        &opts,
    )?;
    accept(QuadratureResult { value: r.value / g, error_bound: r.error_bound / g, ..r })
}

/// Five-point derivative on `[lo, hi]`, one-sided near the ends.
pub fn stencil_derivative<T: Real>(f: &impl Fn(T) -> T, t: T, h: T, lo: T, hi: T) -> T {
    let c = |k: f64| T::lit(k);
    if t - c(2.0) * h >= lo && t + c(2.0) * h <= hi {
        (f(t - c(2.0) * h) - c(8.0) * f(t - h) + c(8.0) * f(t + h) - f(t + c(2.0) * h)) / (c(12.0) * h)
    } else {
        let s = if t - c(2.0) * h < lo { h } else { -h };
        (c(-25.0) * f(t) + c(48.0) * f(t + s) - c(36.0) * f(t + c(2.0) * s) + c(16.0) * f(t + c(3.0) * s)
            - c(3.0) * f(t + c(4.0) * s))
            / (c(12.0) * s)
    }
}

/// `D^α f(x)` in the form `f(0)x^{-α}/Γ(1-α) + (1/Γ(1-α)) ∫₀ˣ f′(t)(x-t)^{-α} dt`.
///
/// `derivative` supplies `f′`; otherwise five-point differences with step
/// `min(1e-3, x/8)` are used, one-sided within two steps of `0` or `x`.
pub fn rl_derivative_quadrature<T: Real>(
    f: impl Fn(T) -> T,
    derivative: Option<&dyn Fn(T) -> T>,
    alpha: T,
    x: T,
    tol: T,
) -> Result<QuadratureResult<T>, FracError> {
    check_alpha(alpha)?;
    check_point(x)?;
    let g = gamma(T::one() - alpha)?;
    let h = T::lit(1e-3).min(x / T::lit(8.0));
    let df = |t: T| match derivative {
        Some(d) => d(t),
        None => stencil_derivative(&f, t, h, T::zero(), x),
    };
    let opts = QuadOptions { abs_tol: tol * g, rel_tol: tol, ..QuadOptions::default() };
    let r = integrate_1d(df, T::zero(), x, Singularity::Power { exponent: -alpha, endpoint: Endpoint::Right }, &opts)?;
    let boundary = f(T::zero()) * x.powf(-alpha);
    accept(QuadratureResult {
        value: (boundary + r.value) / g,
        error_bound: r.error_bound / g,
        evaluations: r.evaluations + 1,
        converged: r.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioSign {
    /// `Γ(n+1)/Γ(n+1-α) ~ n^α`.
    Plus,
    /// `Γ(n+1)/Γ(n+1+α) ~ n^{-α}`.
    Minus,
}

/// `|Γ(n+1)/Γ(n+1∓α) · n^{∓α} - 1|`.
pub fn gamma_ratio_asymptotic_error<T: Real>(n: usize, alpha: T, sign: RatioSign) -> Result<T, FracError> {
    if n == 0 {
        return Err(FracError::Domain("n must be at least 1".into()));
    }
    let x = T::from_usize_lossy(n) + T::one();
    let ln_n = T::from_usize_lossy(n).ln();
    let ln_rel = match sign {
        RatioSign::Plus => ln_gamma_shift(x, -alpha)? - alpha * ln_n,
        RatioSign::Minus => ln_gamma_shift(x, alpha)? + alpha * ln_n,
    };
    Ok(ln_rel.exp_m1().abs())
}
