//! Membership in `D^{α,2}` by two equivalent routes.
//!
//! * Sobolev route: `‖Φ‖²_{α,2} = Σ w(n,α)·b_n` with `w = 1 + n^α` for
//!   `α ≥ 0` and `w = 1/(1 + n^{|α|})` for `α < 0`.
//! * Criterion route: the λ-domain characterization evaluated at `λ → 1`,
//!   which acts on chaos coefficients through `W(n,β) = Γ(2n+1)/Γ(2n+1∓|β|)`.
//!
//! The two must agree on finiteness; a disagreement is reported as an
//! internal-consistency error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaos::{bs_norm_sq_tol, weighted_sum, ChaosProfile, ChaosWeight, ProfileError, SeriesValue, TailModel};
use crate::fractional::{
    ln_operator_weight, rl_apply_series, rl_derivative_quadrature, FracError, FracOrder, OperatorWeight,
};
use crate::quadrature::{integrate_1d, Endpoint, QuadOptions, Singularity};
use crate::scalar::{Extended, Real};
use crate::special::gamma;

/// Orders closer than this to the critical order are tagged as boundary.
pub const BOUNDARY_WINDOW: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegularityError {
    #[error("routes disagree at alpha = {alpha}: sobolev sum {sobolev}, criterion sum {criterion}")]
    RouteDisagreement { alpha: f64, sobolev: String, criterion: String },
    #[error(transparent)]
    Frac(#[from] FracError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("invalid grid: {0}")]
    Grid(String),
}

/// Chaos weight of the `D^{α,2}` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevWeight<T> {
    pub alpha: T,
}

impl<T: Real> ChaosWeight<T> for SobolevWeight<T> {
    fn ln_weight(&self, x: T) -> T {
        if x == T::zero() {
            return T::zero();
        }
        let a = self.alpha.abs();
        // ln(1 + x^a) without overflow
        let lx = a * x.ln();
        let l = if lx > T::zero() { lx + (-lx).exp().ln_1p() } else { lx.exp().ln_1p() };
        if self.alpha >= T::zero() {
            l
        } else {
            -l
        }
    }
    fn growth(&self) -> (T, T) {
        (T::zero(), self.alpha)
    }
}

/// `w(n, α)`.
pub fn sobolev_weight<T: Real>(n: usize, alpha: T) -> T {
    SobolevWeight { alpha }.ln_weight(T::from_usize_lossy(n)).exp()
}

/// `W(n, β)`; `W(0, β) = 0` for `β > 0` and `1/Γ(1+|β|)` for `β < 0`.
pub fn criterion_weight<T: Real>(n: usize, beta: T) -> T {
    ln_operator_weight(T::from_usize_lossy(n), beta, false).exp()
}

fn criterion_weight_fn<T: Real>(beta: T) -> OperatorWeight<T> {
    OperatorWeight { beta, keep_constant: false }
}

/// `Σ w(n, α)·b_n`.
pub fn sobolev_norm_sq<T: Real>(profile: &ChaosProfile<T>, alpha: T) -> SeriesValue<T> {
    weighted_sum(profile, &SobolevWeight { alpha }, T::default_tol())
}

/// `Σ W(n, β)·b_n`, the λ-criterion of order `β` in the limit `λ → 1`.
///
/// All coefficients are non-negative, so the criterion curve is monotone in
/// λ and its supremum over `(0, 1)` is this limit.
pub fn criterion_sum<T: Real>(profile: &ChaosProfile<T>, beta: T) -> SeriesValue<T> {
    weighted_sum(profile, &criterion_weight_fn(beta), T::default_tol())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Member,
    Nonmember,
    Boundary,
}

/// Supporting numbers behind one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence<T> {
    pub criterion: String,
    pub value: Extended<T>,
    pub remainder_bound: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership<T> {
    pub alpha: T,
    pub decision: Decision,
    pub sobolev_sum: Extended<T>,
    pub criterion_sum: Extended<T>,
    pub evidence: Vec<Evidence<T>>,
}

/// `α*`: `+inf` for `rho < 1` or a vanishing tail, `p - 1` for `rho = 1`,
/// `-inf` for `rho > 1`. Head terms never matter.
pub fn alpha_threshold<T: Real>(profile: &ChaosProfile<T>) -> Extended<T> {
    match *profile.tail() {
        TailModel::GeometricPolynomial { rho, p, .. } if rho > T::zero() => {
            if rho < T::one() {
                Extended::PosInf
            } else if rho > T::one() {
                Extended::NegInf
            } else {
                Extended::Finite(p - T::one())
            }
        }
        _ => Extended::PosInf,
    }
}

/// Decides `Φ ∈ D^{α,2}` by both routes and checks that they agree.
pub fn membership<T: Real>(profile: &ChaosProfile<T>, alpha: T) -> Result<Membership<T>, RegularityError> {
    let s = sobolev_norm_sq(profile, alpha);
    let c = criterion_sum(profile, alpha);
    if s.value.is_finite() != c.value.is_finite() {
        return Err(RegularityError::RouteDisagreement {
            alpha: alpha.as_f64(),
            sobolev: s.value.to_string(),
            criterion: c.value.to_string(),
        });
    }
    let near_threshold = match alpha_threshold(profile) {
        Extended::Finite(a) => (alpha - a).abs() < T::lit(BOUNDARY_WINDOW),
        _ => false,
    };
    let decision = if near_threshold {
        Decision::Boundary
    } else if s.value.is_finite() {
        Decision::Member
    } else {
        Decision::Nonmember
    };
    let evidence = vec![
        Evidence { criterion: "sobolev_norm".into(), value: s.value, remainder_bound: s.remainder_bound },
        Evidence { criterion: "lambda_criterion".into(), value: c.value, remainder_bound: c.remainder_bound },
    ];
    Ok(Membership { alpha, decision, sobolev_sum: s.value, criterion_sum: c.value, evidence })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct VerdictQuery<T> {
    pub alpha: T,
    pub decision: Decision,
    pub sobolev_sum: Extended<T>,
    pub criterion_sum: Extended<T>,
}

/// Critical order plus per-α decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct RegularityVerdict<T> {
    pub alpha_star: Extended<T>,
    pub queries: Vec<VerdictQuery<T>>,
    #[serde(skip)]
    pub evidence: Vec<Vec<Evidence<T>>>,
}

impl<T: Real> RegularityVerdict<T> {
    pub fn decision(&self, alpha: T) -> Option<Decision> {
        self.queries.iter().find(|q| q.alpha == alpha).map(|q| q.decision)
    }
}

pub fn classify<T: Real>(profile: &ChaosProfile<T>, alphas: &[T]) -> Result<RegularityVerdict<T>, RegularityError> {
    let mut queries = Vec::with_capacity(alphas.len());
    let mut evidence = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let m = membership(profile, alpha)?;
        queries.push(VerdictQuery {
            alpha,
            decision: m.decision,
            sobolev_sum: m.sobolev_sum,
            criterion_sum: m.criterion_sum,
        });
        evidence.push(m.evidence);
    }
    Ok(RegularityVerdict { alpha_star: alpha_threshold(profile), queries, evidence })
}

/// [`classify`] over many profiles in parallel; results keep input order.
pub fn classify_many<T: Real>(
    profiles: &[ChaosProfile<T>],
    alphas: &[T],
) -> Vec<Result<RegularityVerdict<T>, RegularityError>> {
    profiles.par_iter().map(|p| classify(p, alphas)).collect()
}

/// Criterion value at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPoint<T> {
    pub lambda: T,
    pub value: Extended<T>,
    pub error_bound: T,
}

/// The λ-domain criterion of order `β` evaluated on a grid in `(0, 1]`.
///
/// * `β < 0`: `(1/Γ(|β|)) ∫₀^λ (λ-t)^{|β|-1} B(t) dt` by quadrature, the
///   iterated and fractional integrals merged into one kernel.
/// * `β = m` integer: `∂^m B(λ)` termwise.
/// * `β = m + a`, `0 < a < 1`: `D^a` by quadrature applied to
///   `∂^m (B - b_0)`, with the derivative supplied termwise.
///
/// At `λ = 1` the termwise representation is used, which is `+inf` where the
/// criterion diverges.
pub fn criterion_sum_numeric<T: Real>(
    profile: &ChaosProfile<T>,
    beta: T,
    grid: &[T],
    tol: T,
) -> Result<Vec<NumericPoint<T>>, RegularityError> {
    for &x in grid {
        if !(x > T::zero() && x <= T::one()) {
            return Err(RegularityError::Grid(format!("grid point {} outside (0, 1]", x.as_f64())));
        }
    }
    let reduced = without_constant(profile);
    grid.iter()
        .map(|&x| {
            if x == T::one() {
                let src = if beta > T::zero() { &reduced } else { profile };
                let s = rl_apply_series(src, beta, x)?;
                return Ok(NumericPoint { lambda: x, value: s.value, error_bound: s.remainder_bound });
            }
            if beta == T::zero() {
                let s = bs_norm_sq_tol(profile, x, tol)?;
                return Ok(NumericPoint { lambda: x, value: s.value, error_bound: s.remainder_bound });
            }
            if beta < T::zero() {
                return negative_order_point(profile, -beta, x, tol);
            }
            positive_order_point(profile, &reduced, beta, x, tol)
        })
        .collect()
}

fn without_constant<T: Real>(profile: &ChaosProfile<T>) -> ChaosProfile<T> {
    let mut head = profile.head().to_vec();
    head[0] = T::zero();
    ChaosProfile::new(head, *profile.tail()).expect("valid profile stays valid")
}

fn negative_order_point<T: Real>(
    profile: &ChaosProfile<T>,
    order: T,
    x: T,
    tol: T,
) -> Result<NumericPoint<T>, RegularityError> {
    let g = gamma(order).map_err(FracError::from)?;
    let b = |t: T| bs_norm_sq_tol(profile, t, tol * T::lit(1e-2)).map(|v| v.value.to_float()).unwrap_or(T::nan());
    let opts = QuadOptions { abs_tol: tol * g, rel_tol: tol, ..QuadOptions::default() };
    let r = integrate_1d(
        b,
        T::zero(),
        x,
        Singularity::Power { exponent: order - T::one(), endpoint: Endpoint::Right },
        &opts,
    )
    .map_err(FracError::from)?;
    if !r.converged {
        return Err(FracError::Accuracy { value: r.value.as_f64(), error_bound: r.error_bound.as_f64() }.into());
    }
    Ok(NumericPoint { lambda: x, value: Extended::from_float(r.value / g), error_bound: r.error_bound / g })
}

fn positive_order_point<T: Real>(
    profile: &ChaosProfile<T>,
    reduced: &ChaosProfile<T>,
    beta: T,
    x: T,
    tol: T,
) -> Result<NumericPoint<T>, RegularityError> {
    let order = FracOrder::decompose(beta)?;
    let m = T::from_usize_lossy(order.m);
    let series = |k: T, t: T| -> T { rl_apply_series(reduced, k, t).map(|v| v.value.to_float()).unwrap_or(T::nan()) };
    if order.alpha == T::zero() {
        let s = rl_apply_series(reduced, m, x)?;
        return Ok(NumericPoint { lambda: x, value: s.value, error_bound: s.remainder_bound });
    }
    // g = ∂^m (B - b_0); g(0) is the coefficient of λ^m times m!.
    let g0 = if order.m >= 2 && order.m % 2 == 0 {
        profile.coefficient(order.m / 2) * gamma(m + T::one()).map_err(FracError::from)?
    } else {
        T::zero()
    };
    let g = |t: T| {
        if t == T::zero() {
            g0
        } else if order.m == 0 {
            series(T::zero(), t)
        } else {
            series(m, t)
        }
    };
    let dg = |t: T| series(m + T::one(), t);
    let r = rl_derivative_quadrature(g, Some(&dg), order.alpha, x, tol)?;
    Ok(NumericPoint { lambda: x, value: Extended::from_float(r.value), error_bound: r.error_bound })
}

/// Parses `"start:stop:count"` into an evenly spaced grid.
pub fn parse_grid<T: Real>(spec: &str) -> Result<Vec<T>, RegularityError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || RegularityError::Grid(format!("grid spec {spec:?} is not start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !start.is_finite() || !stop.is_finite() || (count > 1 && stop < start) {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![T::lit(start)]);
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|i| T::lit(if i + 1 == count { stop } else { start + step * i as f64 })).collect())
}
