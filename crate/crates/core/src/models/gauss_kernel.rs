//! Gauss kernels `Φ_A` for a diagonal operator `A` with eigenvalues in `(0, 2)`.
//!
//! With `κ_n = 1 - a_n`, `B(λ) = Π_n (1 - λ⁴κ_n²)^{-1/2}` and
//! `B(1)^{-2} = det(2A - A²) = Π a_n(2 - a_n)`.

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::chaos::{ChaosProfile, TailModel};
use crate::fractional::{rl_derivative_quadrature, FracOrder};
use crate::gaussian_mc::STransform;
use crate::regularity::{criterion_sum, NumericPoint};
use crate::scalar::{Extended, Real};
use crate::special::ln_gamma;

/// `κ_n = c·r^n` for `n > M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaTail<T> {
    pub c: T,
    pub r: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussKernelSpec<T> {
    pub eigs_head: Vec<T>,
    #[serde(default)]
    pub eigs_tail: Option<KappaTail<T>>,
}

/// Tail factors with `|κ|` below this are dropped.
const KAPPA_NEGLIGIBLE: f64 = 1e-18;

impl<T: Real> GaussKernelSpec<T> {
    pub fn new(eigs_head: Vec<T>, eigs_tail: Option<KappaTail<T>>) -> Result<Self, ModelError> {
        let s = Self { eigs_head, eigs_tail };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for &a in &self.eigs_head {
            if !(a > T::zero() && a < T::lit(2.0)) {
                return Err(ModelError::InvalidSpec(format!("eigenvalue {} outside (0, 2)", a.as_f64())));
            }
        }
        if let Some(KappaTail { c, r }) = self.eigs_tail {
            if !(r >= T::zero() && r < T::one()) || !c.is_finite() {
                return Err(ModelError::InvalidSpec(format!("tail ratio {} must lie in [0, 1)", r.as_f64())));
            }
            let first = c.abs() * r.powi(self.eigs_head.len() as i32 + 1);
            if !(first < T::one()) {
                return Err(ModelError::InvalidSpec("tail eigenvalues must lie in (0, 2)".into()));
            }
        }
        Ok(())
    }

    /// Every non-negligible `κ_n`, head first.
    pub fn kappas(&self) -> Vec<T> {
        let mut out: Vec<T> = self.eigs_head.iter().map(|&a| T::one() - a).collect();
        if let Some(KappaTail { c, r }) = self.eigs_tail {
            let mut n = self.eigs_head.len() + 1;
            loop {
                let k = c * r.powi(n as i32);
                if k.abs() < T::lit(KAPPA_NEGLIGIBLE) || n > 100_000 {
                    break;
                }
                out.push(k);
                n += 1;
            }
        }
        out
    }
}

/// `Π (1 - λ⁴κ_n²)^{-1/2}`; `+inf` if some factor's radicand is not positive.
pub fn gk_bs_norm<T: Real>(spec: &GaussKernelSpec<T>, lambda: T) -> Result<Extended<T>, ModelError> {
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(ModelError::Domain(format!("lambda = {} must lie in [0, 1]", lambda.as_f64())));
    }
    Ok(match ln_gk_bs_norm(spec, lambda) {
        Some(l) => Extended::Finite(l.exp()),
        None => Extended::PosInf,
    })
}

fn ln_gk_bs_norm<T: Real>(spec: &GaussKernelSpec<T>, lambda: T) -> Option<T> {
    let l4 = lambda.powi(4);
    let mut acc = T::zero();
    for k in spec.kappas() {
        let x = l4 * k * k;
        if !(x < T::one()) {
            return None;
        }
        acc = acc - T::lit(0.5) * (-x).ln_1p();
    }
    Some(acc)
}

/// Result of the L² test `0 < det(2A - A²) < ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkL2<T> {
    pub det: T,
    pub member: bool,
    pub norm_at_one: Extended<T>,
    /// `|B(1)²·det - 1|`.
    pub identity_residual: T,
}

/// `det(2A - A²) = Π a_n(2 - a_n)` by a log-sum.
pub fn gk_det<T: Real>(spec: &GaussKernelSpec<T>) -> T {
    spec.kappas().iter().map(|&k| (-k * k).ln_1p()).fold(T::zero(), |a, b| a + b).exp()
}

pub fn gk_l2_check<T: Real>(spec: &GaussKernelSpec<T>) -> Result<GkL2<T>, ModelError> {
    let det = gk_det(spec);
    let norm_at_one = gk_bs_norm(spec, T::one())?;
    let identity_residual = match norm_at_one {
        Extended::Finite(b) => (b * b * det - T::one()).abs(),
        _ => T::infinity(),
    };
    Ok(GkL2 { det, member: det > T::zero() && det.is_finite(), norm_at_one, identity_residual })
}

/// `B, B′, …, B^{(k)}` at `λ` by logarithmic differentiation.
///
/// Each factor contributes `-½ Σ_r ln(λ - r)` over the four roots `r` of
/// `1 - κ²λ⁴`, so `(ln B)^{(j)} = ½(j-1)! Σ (r - λ)^{-j}` and
/// `B^{(k+1)} = Σ_j C(k,j) B^{(j)} (ln B)^{(k+1-j)}`.
pub fn gk_derivatives<T: Real>(spec: &GaussKernelSpec<T>, lambda: T, k: usize) -> Result<Vec<T>, ModelError> {
    let Some(ln_b) = ln_gk_bs_norm(spec, lambda) else {
        return Err(ModelError::Divergent("a factor of the product vanishes".into()));
    };
    let roots: Vec<Complex<T>> = spec
        .kappas()
        .into_iter()
        .filter(|k| *k != T::zero())
        .flat_map(|kappa| {
            let m = kappa.abs().powf(T::lit(-0.5));
            [
                Complex::new(m, T::zero()),
                Complex::new(T::zero(), m),
                Complex::new(-m, T::zero()),
                Complex::new(T::zero(), -m),
            ]
        })
        .collect();
    let z = Complex::new(lambda, T::zero());
    let mut dl = vec![T::zero(); k + 1];
    let mut fact = T::one();
    for j in 1..=k {
        if j > 1 {
            fact = fact * T::from_usize_lossy(j - 1);
        }
        let s: Complex<T> =
            roots.iter().map(|&r| (r - z).powi(-(j as i32))).fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
        dl[j] = T::lit(0.5) * fact * s.re;
    }
    let mut g = vec![ln_b.exp()];
    for n in 0..k {
        let mut acc = T::zero();
        let mut binom = T::one();
        for j in 0..=n {
            if j > 0 {
                binom = binom * T::from_usize_lossy(n + 1 - j) / T::from_usize_lossy(j);
            }
            acc = acc + binom * g[j] * dl[n + 1 - j];
        }
        g.push(acc);
    }
    Ok(g)
}

/// Series depth of [`gk_chaos_profile`] in powers of `λ⁴`.
pub const GK_SERIES_DEPTH: usize = 100;

/// Chaos profile of `Φ_A` from the power series of `exp(-½ Σ ln(1 - κ²λ⁴))`.
///
/// `ln B = Σ_k c_k λ^{4k}` with `c_k = P_k/(2k)`, `P_k = Σ κ^{2k}`, and
/// `e_k = (1/k) Σ_j j·c_j·e_{k-j}` gives `b_{2k} = e_k`. The tail uses the
/// dominant singularity: `rho = sqrt(max|κ|)`, `p = 1 - mult/2`.
pub fn gk_chaos_profile<T: Real>(spec: &GaussKernelSpec<T>, depth: usize) -> Result<ChaosProfile<T>, ModelError> {
    let kappas: Vec<T> = spec.kappas().into_iter().filter(|k| *k != T::zero()).collect();
    if kappas.is_empty() {
        return Ok(ChaosProfile::finite(vec![T::one()])?);
    }
    let sq: Vec<T> = kappas.iter().map(|&k| k * k).collect();
    let mut power = sq.clone();
    let mut c = vec![T::zero(); depth + 1];
    for (k, ck) in c.iter_mut().enumerate().skip(1) {
        let p: T = power.iter().fold(T::zero(), |a, &b| a + b);
        *ck = p / (T::lit(2.0) * T::from_usize_lossy(k));
        for (pw, s) in power.iter_mut().zip(&sq) {
            *pw = *pw * *s;
        }
    }
    let mut e = vec![T::zero(); depth + 1];
    e[0] = T::one();
    for k in 1..=depth {
        let mut acc = T::zero();
        for j in 1..=k {
            acc = acc + T::from_usize_lossy(j) * c[j] * e[k - j];
        }
        e[k] = acc / T::from_usize_lossy(k);
    }
    let mut head = vec![T::zero(); 2 * depth + 1];
    for (k, ek) in e.iter().enumerate() {
        head[2 * k] = *ek;
    }
    let kmax = kappas.iter().fold(T::zero(), |a, k| a.max(k.abs()));
    let tie = T::lit(1e-12) * kmax;
    let mult = kappas.iter().filter(|k| (k.abs() - kmax).abs() <= tie).count();
    let half = T::from_usize_lossy(mult) * T::lit(0.5);
    // Remaining factors at the dominant singularity λ⁴ = 1/κmax².
    let others: T = kappas
        .iter()
        .filter(|k| (k.abs() - kmax).abs() > tie)
        .map(|&k| -T::lit(0.5) * (-(k * k) / (kmax * kmax)).ln_1p())
        .fold(T::zero(), |a, b| a + b);
    let ln_c = others - half * T::LN_2() - ln_gamma(half)?;
    let tail = TailModel::GeometricPolynomial { c: ln_c.exp(), rho: kmax.sqrt(), p: T::one() - half };
    Ok(ChaosProfile::new(head, tail)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GkRegularity<T> {
    pub alpha: T,
    pub points: Vec<NumericPoint<T>>,
    /// Criterion at the largest grid point.
    pub sup_estimate: T,
    /// `Σ W(n, α)·b_n` on the expanded chaos profile.
    pub chaos_value: Extended<T>,
    /// `|sup_estimate - chaos_value| / chaos_value`.
    pub relative_gap: T,
    pub bounded: bool,
}

/// `∂^α B` on a grid in `(0, 1]` for `α > 0`.
///
/// Integer parts come from [`gk_derivatives`]; the fractional part is
/// `D^a` by quadrature applied to `∂^m B` (to `B - 1` when `m = 0`).
/// Boundedness implies membership in `D^{α,2}`; unboundedness is not used
/// to conclude anything.
pub fn gk_regularity<T: Real>(
    spec: &GaussKernelSpec<T>,
    alpha: T,
    grid: &[T],
    tol: T,
) -> Result<GkRegularity<T>, ModelError> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(ModelError::Domain(format!("order {} must be positive", alpha.as_f64())));
    }
    if grid.is_empty() || grid.iter().any(|&x| !(x > T::zero() && x <= T::one())) {
        return Err(ModelError::Domain("grid points must lie in (0, 1]".into()));
    }
    let order = FracOrder::decompose(alpha)?;
    let m = order.m;
    let deriv = |j: usize, t: T| -> T { gk_derivatives(spec, t, j).map(|v| v[j]).unwrap_or(T::nan()) };
    let mut points = Vec::with_capacity(grid.len());
    for &x in grid {
        let (value, err) = if order.alpha == T::zero() {
            (deriv(m, x), T::zero())
        } else {
            let shift = if m == 0 { T::one() } else { T::zero() };
            let g = |t: T| deriv(m, t) - shift;
            let dg = |t: T| deriv(m + 1, t);
            let r = rl_derivative_quadrature(g, Some(&dg), order.alpha, x, tol)?;
            (r.value, r.error_bound)
        };
        points.push(NumericPoint { lambda: x, value: Extended::from_float(value), error_bound: err });
    }
    let last = points.iter().max_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap()).unwrap();
    let sup_estimate = last.value.to_float();
    let profile = gk_chaos_profile(spec, GK_SERIES_DEPTH)?;
    let chaos_value = criterion_sum(&profile, alpha).value;
    let relative_gap = match chaos_value {
        Extended::Finite(c) if c != T::zero() => (sup_estimate - c).abs() / c.abs(),
        Extended::Finite(_) => sup_estimate.abs(),
        _ => T::infinity(),
    };
    let bounded = points.iter().all(|p| p.value.is_finite()) && chaos_value.is_finite();
    Ok(GkRegularity { alpha, points, sup_estimate, chaos_value, relative_gap, bounded })
}

/// `SΦ_A(λu) = exp(-½λ² Σ κ_n u_n²)` truncated to the first `dim` eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussKernelEvaluator {
    kappas: Vec<f64>,
}

impl GaussKernelEvaluator {
    pub fn new(spec: &GaussKernelSpec<f64>, dim: usize) -> Self {
        let mut kappas = spec.kappas();
        kappas.truncate(dim);
        kappas.resize(dim.max(1), 0.0);
        Self { kappas }
    }
}

impl STransform for GaussKernelEvaluator {
    fn name(&self) -> String {
        format!("gauss-kernel(m={})", self.kappas.len())
    }
    fn dim(&self) -> usize {
        self.kappas.len()
    }
    fn eval(&self, lambda: f64, u: &[Complex64]) -> Complex64 {
        let s: Complex64 = self.kappas.iter().zip(u).map(|(k, z)| z * z * *k).sum();
        (s * (-0.5 * lambda * lambda)).exp()
    }
}
