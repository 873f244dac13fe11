//! Chaos profiles and the Bargmann–Segal norm curve.
//!
//! A [`ChaosProfile`] stores `b_n = n!·|F⁽ⁿ⁾|²` for the explicit head and a
//! [`TailModel`] for the rest. Every norm in the crate is a weighted sum
//! `Σ w(n)·b_n`; [`weighted_sum`] evaluates such sums with the divergence
//! decision taken from the tail asymptotics, never from floating overflow.
//!
//! Profiles supplied by users are assumed to define a generalized function of
//! finite exponential order. Every tail variant satisfies this, so no check
//! is made.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::quadrature::{integrate_1d, Endpoint, QuadOptions, Singularity};
use crate::scalar::{Extended, KahanSum, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("chaos coefficient b_{index} = {value} must be finite and non-negative")]
    NegativeCoefficient { index: usize, value: f64 },
    #[error("profile head must contain at least b_0")]
    EmptyHead,
    #[error("invalid tail: {0}")]
    InvalidTail(String),
    #[error("lambda = {0} must be finite and non-negative")]
    InvalidLambda(f64),
}

/// Behaviour of `b_n` beyond the explicit head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel<T> {
    /// `b_n = 0` for every index past the head.
    FiniteSupport,
    /// `b_n = c·rho^{2n}·n^{-p}` for every index past the head.
    GeometricPolynomial { c: T, rho: T, p: T },
}

impl<T: Real> TailModel<T> {
    pub fn validate(&self) -> Result<(), ProfileError> {
        match *self {
            TailModel::FiniteSupport => Ok(()),
            TailModel::GeometricPolynomial { c, rho, p } => {
                if !(c > T::zero()) || !c.is_finite() {
                    return Err(ProfileError::InvalidTail(format!("C = {} must be positive", c.as_f64())));
                }
                if !(rho >= T::zero()) || !rho.is_finite() {
                    return Err(ProfileError::InvalidTail(format!("rho = {} must be non-negative", rho.as_f64())));
                }
                if !p.is_finite() {
                    return Err(ProfileError::InvalidTail("p must be finite".into()));
                }
                Ok(())
            }
        }
    }
}

/// Chaos coefficients `b_n = n!·|F⁽ⁿ⁾|²`: explicit head `b_0..b_N` plus tail.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosProfile<T> {
    head: Vec<T>,
    tail: TailModel<T>,
}

impl<T: Real> ChaosProfile<T> {
    pub fn new(head: Vec<T>, tail: TailModel<T>) -> Result<Self, ProfileError> {
        if head.is_empty() {
            return Err(ProfileError::EmptyHead);
        }
        for (index, &b) in head.iter().enumerate() {
            if !(b >= T::zero()) || !b.is_finite() {
                return Err(ProfileError::NegativeCoefficient { index, value: b.as_f64() });
            }
        }
        tail.validate()?;
        Ok(Self { head, tail })
    }

    pub fn finite(head: Vec<T>) -> Result<Self, ProfileError> {
        Self::new(head, TailModel::FiniteSupport)
    }

    /// `b_n = c·rho^{2n}·n^{-p}` for every `n ≥ 1`, with the given `b_0`.
    pub fn geometric(b0: T, c: T, rho: T, p: T) -> Result<Self, ProfileError> {
        Self::new(vec![b0], TailModel::GeometricPolynomial { c, rho, p })
    }

    pub fn head(&self) -> &[T] {
        &self.head
    }

    pub fn tail(&self) -> &TailModel<T> {
        &self.tail
    }

    /// Index of the first tail coefficient.
    pub fn tail_start(&self) -> usize {
        self.head.len()
    }

    pub fn coefficient(&self, n: usize) -> T {
        if n < self.head.len() {
            return self.head[n];
        }
        match self.tail {
            TailModel::FiniteSupport => T::zero(),
            TailModel::GeometricPolynomial { .. } => self.ln_tail_term(T::from_usize_lossy(n)).exp(),
        }
    }

    /// `ln b(x)` of the tail formula at a real index.
    fn ln_tail_term(&self, x: T) -> T {
        match self.tail {
            TailModel::FiniteSupport => T::neg_infinity(),
            TailModel::GeometricPolynomial { c, rho, p } => {
                if rho == T::zero() {
                    return T::neg_infinity();
                }
                c.ln() + T::lit(2.0) * x * rho.ln() - p * x.ln()
            }
        }
    }

    /// Copy with `extra` tail coefficients moved into the head.
    pub fn materialize(&self, extra: usize) -> Self {
        let start = self.head.len();
        let mut head = self.head.clone();
        head.extend((start..start + extra).map(|n| self.coefficient(n)));
        Self { head, tail: self.tail }
    }

    /// `rho` of a geometric tail; `None` when the tail vanishes identically.
    pub fn tail_rho(&self) -> Option<T> {
        match self.tail {
            TailModel::GeometricPolynomial { rho, .. } if rho > T::zero() => Some(rho),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
enum TailRepr<T> {
    #[serde(rename = "finite")]
    Finite,
    #[serde(rename = "geom_poly")]
    GeomPoly {
        #[serde(rename = "C")]
        c: T,
        rho: T,
        p: T,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileRepr<T> {
    head: Vec<T>,
    tail: TailRepr<T>,
}

impl<T: Real + Serialize> Serialize for ChaosProfile<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let tail = match self.tail {
            TailModel::FiniteSupport => TailRepr::Finite,
            TailModel::GeometricPolynomial { c, rho, p } => TailRepr::GeomPoly { c, rho, p },
        };
        ProfileRepr { head: self.head.clone(), tail }.serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for ChaosProfile<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = ProfileRepr::<T>::deserialize(d)?;
        let tail = match raw.tail {
            TailRepr::Finite => TailModel::FiniteSupport,
            TailRepr::GeomPoly { c, rho, p } => TailModel::GeometricPolynomial { c, rho, p },
        };
        ChaosProfile::new(raw.head, tail).map_err(serde::de::Error::custom)
    }
}

/// A non-negative weight sequence `w(n)` applied to a profile.
///
/// Implementors give `ln w` at real arguments (the smooth continuation is
/// used for the integral tail estimate) and the growth law
/// `w(n) ≍ q^n·n^e`, which decides convergence against a geometric tail.
pub trait ChaosWeight<T: Real>: Sync {
    /// `ln w(x)`; `-inf` where the weight vanishes.
    fn ln_weight(&self, x: T) -> T;
    /// `(ln q, e)` with `w(n) ≍ q^n·n^e` as `n → ∞`.
    fn growth(&self) -> (T, T);
}

/// `w ≡ 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitWeight;

impl<T: Real> ChaosWeight<T> for UnitWeight {
    fn ln_weight(&self, _: T) -> T {
        T::zero()
    }
    fn growth(&self) -> (T, T) {
        (T::zero(), T::zero())
    }
}

/// `w(n) = q^n · inner(n)`.
#[derive(Debug, Clone, Copy)]
pub struct Geometric<W, T> {
    pub inner: W,
    pub ln_q: T,
}

impl<T: Real, W: ChaosWeight<T>> ChaosWeight<T> for Geometric<W, T> {
    fn ln_weight(&self, x: T) -> T {
        let lw = self.inner.ln_weight(x);
        if x == T::zero() {
            lw
        } else {
            lw + x * self.ln_q
        }
    }
    fn growth(&self) -> (T, T) {
        let (lq, e) = self.inner.growth();
        (lq + self.ln_q, e)
    }
}

/// Result of a weighted chaos sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue<T> {
    pub value: Extended<T>,
    /// Bound on the neglected remainder; zero when summed exactly.
    pub remainder_bound: T,
    /// Explicitly summed terms.
    pub terms: usize,
}

impl<T: Real> SeriesValue<T> {
    fn divergent() -> Self {
        Self { value: Extended::PosInf, remainder_bound: T::zero(), terms: 0 }
    }
}

/// Analytic convergence decision for `Σ w(n)·b_n`.
pub fn weighted_sum_converges<T: Real, W: ChaosWeight<T> + ?Sized>(profile: &ChaosProfile<T>, weight: &W) -> bool {
    match profile.tail {
        TailModel::FiniteSupport => true,
        TailModel::GeometricPolynomial { rho, p, .. } => {
            if rho == T::zero() {
                return true;
            }
            let (ln_qw, e) = weight.growth();
            if ln_qw == T::neg_infinity() {
                return true;
            }
            let ln_q = T::lit(2.0) * rho.ln() + ln_qw;
            if ln_q < T::zero() {
                true
            } else if ln_q > T::zero() {
                false
            } else {
                p - e > T::one()
            }
        }
    }
}

const MAX_EXPLICIT_TERMS: usize = 20_000;
const EULER_MACLAURIN_START: usize = 256;

/// `Σ_n w(n)·b_n` with absolute tolerance `tol` on the tail remainder.
///
/// The head is summed in ascending order with compensation. A convergent tail
/// is summed term by term until a geometric bound on the remainder drops
/// below `tol`; when the decay is too slow for that, the remainder from an
/// index `M` on is replaced by its Euler–Maclaurin estimate
/// `∫_M^∞ g + g(M)/2 − g′(M)/12 + g‴(M)/720`.
pub fn weighted_sum<T: Real, W: ChaosWeight<T> + ?Sized>(
    profile: &ChaosProfile<T>,
    weight: &W,
    tol: T,
) -> SeriesValue<T> {
    let mut acc = KahanSum::new();
    for (n, &b) in profile.head.iter().enumerate() {
        if b == T::zero() {
            continue;
        }
        let lw = weight.ln_weight(T::from_usize_lossy(n));
        if lw == T::neg_infinity() {
            continue;
        }
        acc.add((b.ln() + lw).exp());
    }
    let head_terms = profile.head.len();
    if !weighted_sum_converges(profile, weight) {
        return SeriesValue::divergent();
    }
    let TailModel::GeometricPolynomial { rho, p, .. } = profile.tail else {
        return finish(acc.value(), T::zero(), head_terms);
    };
    if rho == T::zero() {
        return finish(acc.value(), T::zero(), head_terms);
    }
    let (ln_qw, e) = weight.growth();
    let ln_q = T::lit(2.0) * rho.ln() + ln_qw;
    let ln_term = |x: T| {
        let lw = weight.ln_weight(x);
        if lw == T::neg_infinity() {
            T::neg_infinity()
        } else {
            profile.ln_tail_term(x) + lw
        }
    };
    let q = ln_q.exp();
    let slow = q > T::lit(0.999);
    let mut n = profile.tail_start();
    let mut terms = head_terms;
    let mut t = ln_term(T::from_usize_lossy(n)).exp();
    loop {
        if slow && n >= EULER_MACLAURIN_START.max(profile.tail_start()) {
            let (rest, err) = euler_maclaurin_tail(&ln_term, n, p - e, ln_q, tol);
            acc.add(rest);
            return finish(acc.value(), err, terms);
        }
        acc.add(t);
        terms += 1;
        let next = ln_term(T::from_usize_lossy(n + 1)).exp();
        n += 1;
        if t > T::zero() && next >= T::zero() {
            let r = (next / t).max(q);
            if r < T::one() {
                let bound = next / (T::one() - r);
                if bound <= tol.max(T::epsilon() * acc.value().abs()) {
                    return finish(acc.value() + next, bound, terms + 1);
                }
            }
        }
        t = next;
        if terms > MAX_EXPLICIT_TERMS + head_terms && !slow {
            // Very slow geometric decay: hand over to the integral estimate.
            let (rest, err) = euler_maclaurin_tail(&ln_term, n, p - e, ln_q, tol);
            acc.add(rest);
            return finish(acc.value(), err, terms);
        }
    }
}

fn finish<T: Real>(value: T, remainder_bound: T, terms: usize) -> SeriesValue<T> {
    SeriesValue { value: Extended::from_float(value), remainder_bound, terms }
}

/// `Σ_{k≥m} g(k)` for `g = exp(ln_g)` with `g(x) ≍ q^x x^{-s}`.
fn euler_maclaurin_tail<T: Real>(ln_g: &impl Fn(T) -> T, m: usize, s: T, ln_q: T, tol: T) -> (T, T) {
    let mf = T::from_usize_lossy(m);
    let g = |x: T| ln_g(x).exp();
    // x = M/u maps [M, ∞) onto (0, 1].
    let integrand = |u: T| {
        if u <= T::zero() {
            return T::zero();
        }
        let x = mf / u;
        g(x) * mf / (u * u)
    };
    let opts =
        QuadOptions { abs_tol: tol * T::lit(0.25), rel_tol: T::epsilon() * T::lit(16.0), ..QuadOptions::default() };
    let quad = if ln_q < T::zero() {
        integrate_1d(integrand, T::zero(), T::one(), Singularity::None, &opts)
    } else {
        // Power behaviour u^{s-2} at u = 0, declared in weight form.
        let ex = s - T::lit(2.0);
        integrate_1d(
            |u: T| integrand(u) / u.powf(ex),
            T::zero(),
            T::one(),
            Singularity::Power { exponent: ex, endpoint: Endpoint::Left },
            &opts,
        )
    }
    .expect("valid interval and exponent");
    let h = mf / T::lit(20.0);
    let d1 = (g(mf - h - h) - T::lit(8.0) * g(mf - h) + T::lit(8.0) * g(mf + h) - g(mf + h + h)) / (T::lit(12.0) * h);
    let d3 = (-g(mf - h - h) + T::lit(2.0) * g(mf - h) - T::lit(2.0) * g(mf + h) + g(mf + h + h))
        / (T::lit(2.0) * h * h * h);
    let correction = g(mf) / T::lit(2.0) - d1 / T::lit(12.0) + d3 / T::lit(720.0);
    let err = quad.error_bound + (d3 / T::lit(720.0)).abs();
    (quad.value + correction, err)
}

/// `B(λ) = Σ b_n λ^{2n}`.
pub fn bs_norm_sq<T: Real>(profile: &ChaosProfile<T>, lambda: T) -> Result<SeriesValue<T>, ProfileError> {
    bs_norm_sq_tol(profile, lambda, T::default_tol())
}

pub fn bs_norm_sq_tol<T: Real>(profile: &ChaosProfile<T>, lambda: T, tol: T) -> Result<SeriesValue<T>, ProfileError> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(ProfileError::InvalidLambda(lambda.as_f64()));
    }
    if lambda == T::zero() {
        return Ok(SeriesValue { value: Extended::Finite(profile.head[0]), remainder_bound: T::zero(), terms: 1 });
    }
    let w = Geometric { inner: UnitWeight, ln_q: T::lit(2.0) * lambda.ln() };
    Ok(weighted_sum(profile, &w, tol))
}

/// `‖F‖²_s = B(2^s)`.
pub fn gs_norm_sq<T: Real>(profile: &ChaosProfile<T>, s: T) -> Result<SeriesValue<T>, ProfileError> {
    bs_norm_sq(profile, T::lit(2.0).powf(s))
}

/// Radius of convergence of `B` and whether `B` is finite on the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radius<T> {
    pub radius: Extended<T>,
    pub finite_at_boundary: bool,
}

pub fn convergence_radius<T: Real>(profile: &ChaosProfile<T>) -> Radius<T> {
    match profile.tail_rho() {
        None => Radius { radius: Extended::PosInf, finite_at_boundary: true },
        Some(rho) => {
            let TailModel::GeometricPolynomial { p, .. } = profile.tail else { unreachable!() };
            Radius { radius: Extended::Finite(rho.recip()), finite_at_boundary: p > T::one() }
        }
    }
}

/// One tabulated point of a norm curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T> {
    pub lambda: T,
    pub value: Extended<T>,
    pub remainder_bound: T,
}

/// `λ ↦ B(λ)` for a fixed profile, with tabulated values.
#[derive(Debug, Clone, PartialEq)]
pub struct BsNormCurve<T> {
    profile: ChaosProfile<T>,
    points: Vec<CurvePoint<T>>,
}

impl<T: Real> BsNormCurve<T> {
    pub fn tabulate(profile: ChaosProfile<T>, grid: &[T]) -> Result<Self, ProfileError> {
        let points = grid
            .iter()
            .map(|&lambda| {
                bs_norm_sq(&profile, lambda).map(|v| CurvePoint {
                    lambda,
                    value: v.value,
                    remainder_bound: v.remainder_bound,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { profile, points })
    }

    pub fn profile(&self) -> &ChaosProfile<T> {
        &self.profile
    }

    pub fn points(&self) -> &[CurvePoint<T>] {
        &self.points
    }

    pub fn eval(&self, lambda: T) -> Result<SeriesValue<T>, ProfileError> {
        bs_norm_sq(&self.profile, lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn val(v: SeriesValue<f64>) -> f64 {
        v.value.finite().expect("finite")
    }

    #[test]
    fn bs_norm_examples() {
        let one = ChaosProfile::finite(vec![1.0]).unwrap();
        assert_eq!(val(bs_norm_sq(&one, 0.7).unwrap()), 1.0);
        let four = ChaosProfile::finite(vec![1.0; 4]).unwrap();
        assert!((val(bs_norm_sq(&four, 0.5).unwrap()) - 1.328125).abs() < 1e-15);
        let geo = ChaosProfile::geometric(1.0, 1.0, 1.0, 0.0).unwrap();
        assert!((val(bs_norm_sq(&geo, 0.5).unwrap()) - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(bs_norm_sq(&geo, 1.0).unwrap().value, Extended::PosInf);
    }

    #[test]
    fn gs_norm_examples() {
        let one = ChaosProfile::finite(vec![1.0]).unwrap();
        assert_eq!(val(gs_norm_sq(&one, 3.0).unwrap()), 1.0);
        let e1 = ChaosProfile::finite(vec![0.0, 1.0]).unwrap();
        assert!((val(gs_norm_sq(&e1, 1.0).unwrap()) - 4.0).abs() < 1e-14);
        let four = ChaosProfile::finite(vec![1.0; 4]).unwrap();
        assert!((val(gs_norm_sq(&four, -1.0).unwrap()) - 1.328125).abs() < 1e-15);
    }

    #[test]
    fn radius_examples() {
        let r = convergence_radius(&ChaosProfile::finite(vec![1.0, 2.0]).unwrap());
        assert_eq!(r.radius, Extended::PosInf);
        let r = convergence_radius(&ChaosProfile::geometric(0.0, 1.0, 0.5, 0.0).unwrap());
        assert_eq!(r.radius, Extended::Finite(2.0));
        let r = convergence_radius(&ChaosProfile::geometric(0.0, 1.0, 1.0, 2.0).unwrap());
        assert_eq!(r.radius, Extended::Finite(1.0));
        assert!(r.finite_at_boundary);
    }

    #[test]
    fn boundary_sum_uses_integral_tail() {
        // Σ_{n≥1} n^{-2} = π²/6
        let prof = ChaosProfile::geometric(0.0, 1.0, 1.0, 2.0).unwrap();
        let v = bs_norm_sq(&prof, 1.0).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 6.0;
        assert!((val(v) - exact).abs() < 1e-11, "{}", val(v) - exact);
        // Σ n^{-3} = ζ(3)
        let prof = ChaosProfile::geometric(0.0, 1.0, 1.0, 3.0).unwrap();
        let v = bs_norm_sq(&prof, 1.0).unwrap();
        assert!((val(v) - 1.202_056_903_159_594_2).abs() < 1e-11);
        // Σ n^{-1.5} = ζ(1.5)
        let prof = ChaosProfile::geometric(0.0, 1.0, 1.0, 1.5).unwrap();
        let v = bs_norm_sq(&prof, 1.0).unwrap();
        assert!((val(v) - 2.612_375_348_685_488_3).abs() < 1e-10);
    }

    #[test]
    fn slow_geometric_decay() {
        // Σ_{n≥1} q^n / n = -ln(1-q)
        let q: f64 = 0.9995;
        let prof = ChaosProfile::geometric(0.0, 1.0, q.sqrt(), 1.0).unwrap();
        let v = bs_norm_sq(&prof, 1.0).unwrap();
        assert!((val(v) + (1.0 - q).ln()).abs() < 1e-10);
    }

    #[test]
    fn invalid_profiles() {
        assert!(ChaosProfile::finite(vec![1.0, -0.1]).is_err());
        assert!(ChaosProfile::<f64>::finite(vec![]).is_err());
        assert!(ChaosProfile::geometric(1.0, 0.0, 1.0, 0.0).is_err());
        assert!(ChaosProfile::geometric(1.0, 1.0, -1.0, 0.0).is_err());
        let p = ChaosProfile::finite(vec![1.0]).unwrap();
        assert!(bs_norm_sq(&p, -0.1).is_err());
    }

    #[test]
    fn json_schema() {
        let p: ChaosProfile<f64> =
            serde_json::from_str(r#"{"head":[1.0,0.5],"tail":{"kind":"geom_poly","C":2.0,"rho":1.0,"p":1.5}}"#)
                .unwrap();
        assert_eq!(p.tail(), &TailModel::GeometricPolynomial { c: 2.0, rho: 1.0, p: 1.5 });
        let s = serde_json::to_string(&p).unwrap();
        let back: ChaosProfile<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let f: ChaosProfile<f64> = serde_json::from_str(r#"{"head":[1],"tail":{"kind":"finite"}}"#).unwrap();
        assert_eq!(f.tail(), &TailModel::FiniteSupport);
        assert!(serde_json::from_str::<ChaosProfile<f64>>(r#"{"head":[-1],"tail":{"kind":"finite"}}"#).is_err());
        assert!(serde_json::from_str::<ChaosProfile<f64>>(r#"{"head":[1],"tail":{"kind":"other"}}"#).is_err());
    }

    #[test]
    fn curve_tabulation() {
        let p = ChaosProfile::geometric(1.0, 1.0, 1.0, 0.0).unwrap();
        let c = BsNormCurve::<f64>::tabulate(p, &[0.0, 0.5]).unwrap();
        assert_eq!(c.points()[0].value, Extended::Finite(1.0));
        assert!((c.points()[1].value.finite().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_precision_sum() {
        let p = ChaosProfile::<f32>::geometric(1.0, 1.0, 1.0, 0.0).unwrap();
        let v = bs_norm_sq(&p, 0.5).unwrap().value.finite().unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-5);
    }
}
