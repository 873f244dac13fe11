//! Numerical integration.
//!
//! * [`integrate_1d`]: globally adaptive 15-point Gauss–Kronrod with an
//!   optional algebraic and/or logarithmic endpoint weight absorbed by a
//!   power substitution.
//! * [`integrate_2d_gaussian`]: nested adaptive rule over a truncated square
//!   for integrands with Gaussian decay.
//! * [`integrate_simplex4`]: product of two triangles `{0<s<t<T}` with a
//!   singular set on the diagonal `(t1,s1) = (t2,s2)`, handled by a Duffy
//!   split of the inner triangle around the outer point and an optional
//!   ε-tube exclusion with extrapolation in ε.

use rayon::prelude::*;

use crate::scalar::{KahanSum, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("invalid quadrature input: {0}")]
    InvalidInput(String),
    #[error("quadrature did not converge: best estimate {value} with error bound {error_bound}")]
    NotConverged { value: f64, error_bound: f64 },
}

/// Outcome of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub error_bound: T,
    pub evaluations: usize,
    pub converged: bool,
}

impl<T: Real> QuadratureResult<T> {
    /// Turns a non-converged result into an accuracy error carrying the best estimate.
    pub fn require_converged(self) -> Result<Self, QuadratureError> {
        if self.converged {
            Ok(self)
        } else {
            Err(QuadratureError::NotConverged { value: self.value.as_f64(), error_bound: self.error_bound.as_f64() })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
}

/// Endpoint behaviour of the integrand, declared in weight form: the caller
/// passes the regular factor `g` and the weight is applied here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Singularity<T> {
    None,
    /// `g(t) · d^exponent`, `d` the distance to `endpoint`, `exponent > -1`.
    Power {
        exponent: T,
        endpoint: Endpoint,
    },
    /// `g(t) · ln d`.
    Log {
        endpoint: Endpoint,
    },
    /// `g(t) · d^exponent · ln d`.
    PowerLog {
        exponent: T,
        endpoint: Endpoint,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_depth: usize,
    pub max_panels: usize,
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-10).max(T::epsilon() * T::lit(100.0)),
            rel_tol: T::lit(1e-12).max(T::epsilon() * T::lit(100.0)),
            max_depth: 40,
            max_panels: 4000,
        }
    }
}

impl<T: Real> QuadOptions<T> {
    pub fn with_tol(abs_tol: T) -> Self {
        Self { abs_tol, ..Self::default() }
    }

    fn target(&self, value: T) -> T {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    depth: usize,
}

/// One G7K15 panel: Kronrod value and QUADPACK-style error estimate.
fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let h = half * (b - a);
    let fc = f(center);
    let mut res_k = fc * T::lit(WGK[7]);
    let mut res_g = fc * T::lit(WG[3]);
    let mut res_abs = res_k.abs();
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::lit(WGK[j]);
        res_k = res_k + w * (f1 + f2);
        res_abs = res_abs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = T::lit(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        res_asc = res_asc + T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * h;
    let res_abs = res_abs * h.abs();
    let res_asc = res_asc * h.abs();
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != T::zero() && err != T::zero() {
        let scale = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
        err = res_asc * scale.min(T::one());
    }
    let round = T::lit(50.0) * T::epsilon() * res_abs;
    if res_abs > T::min_positive_value() / (T::lit(50.0) * T::epsilon()) {
        err = err.max(round);
    }
    (value, err)
}

/// Globally adaptive G7K15 over `[a, b]` for a regular integrand.
fn adaptive<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, opts: &QuadOptions<T>) -> QuadratureResult<T> {
    let (v0, e0) = gk15(&mut f, a, b);
    let mut panels = vec![Panel { a, b, value: v0, error: e0, depth: 0 }];
    let mut evaluations = 15;
    loop {
        let mut total = KahanSum::new();
        let mut err = T::zero();
        for p in &panels {
            total.add(p.value);
            err = err + p.error;
        }
        let value = total.value();
        let finite = value.is_finite() && err.is_finite();
        if finite && err <= opts.target(value) {
            return QuadratureResult { value, error_bound: err, evaluations, converged: true };
        }
        // Worst panel that may still be split.
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.depth < opts.max_depth)
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap_or(std::cmp::Ordering::Greater))
            .map(|(i, _)| i);
        let Some(i) = worst else {
            return QuadratureResult { value, error_bound: err, evaluations, converged: false };
        };
        if panels.len() >= opts.max_panels || !finite && panels[i].depth >= opts.max_depth {
            return QuadratureResult { value, error_bound: err, evaluations, converged: false };
        }
        let p = panels.swap_remove(i);
        let mid = T::lit(0.5) * (p.a + p.b);
        let (vl, el) = gk15(&mut f, p.a, mid);
        let (vr, er) = gk15(&mut f, mid, p.b);
        evaluations += 30;
        panels.push(Panel { a: p.a, b: mid, value: vl, error: el, depth: p.depth + 1 });
        panels.push(Panel { a: mid, b: p.b, value: vr, error: er, depth: p.depth + 1 });
    }
}

/// `∫_a^b g(t) w(t) dt` with the endpoint weight `w` declared by `singularity`.
///
/// The weight is removed analytically by `d = (b-a) u^γ`; the remaining
/// integrand over `u ∈ (0,1)` is handled adaptively. Non-convergence is
/// reported through [`QuadratureResult::converged`].
pub fn integrate_1d<T: Real, F: Fn(T) -> T>(
    g: F,
    a: T,
    b: T,
    singularity: Singularity<T>,
    opts: &QuadOptions<T>,
) -> Result<QuadratureResult<T>, QuadratureError> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(QuadratureError::InvalidInput(format!(
            "interval [{}, {}] must satisfy a < b",
            a.as_f64(),
            b.as_f64()
        )));
    }
    let (exponent, endpoint, log, k) = match singularity {
        Singularity::None => return Ok(adaptive(g, a, b, opts)),
        Singularity::Power { exponent, endpoint } => (exponent, endpoint, false, T::one()),
        Singularity::Log { endpoint } => (T::zero(), endpoint, true, T::lit(3.0)),
        Singularity::PowerLog { exponent, endpoint } => (exponent, endpoint, true, T::lit(3.0)),
    };
    if !(exponent > -T::one()) {
        return Err(QuadratureError::InvalidInput(format!("power exponent {} must exceed -1", exponent.as_f64())));
    }
    let len = b - a;
    let gamma = k / (T::one() + exponent);
    let scale = len.powf(T::one() + exponent) * gamma;
    let ln_len = len.ln();
    let place = move |d: T| match endpoint {
        Endpoint::Left => a + d,
        Endpoint::Right => b - d,
    };
    let h = |u: T| {
        if u <= T::zero() {
            return T::zero();
        }
        let d = len * u.powf(gamma);
        let t = place(d);
        let mut v = scale * u.powf(k - T::one()) * g(t);
        if log {
            v = v * (ln_len + gamma * u.ln());
        }
        v
    };
    Ok(adaptive(h, T::zero(), T::one(), opts))
}

/// `∫_{R²} f(x, y) dx dy` for integrands bounded by `K exp(-c (x² + y²))`.
///
/// The plane is truncated to `[-R, R]²` with `R² = (ln(10/tol) + 2) / c`.
pub fn integrate_2d_gaussian<T: Real, F: Fn(T, T) -> T>(
    f: F,
    decay_rate: T,
    tol: T,
) -> Result<QuadratureResult<T>, QuadratureError> {
    if !(decay_rate > T::zero()) {
        return Err(QuadratureError::InvalidInput("decay rate must be positive".into()));
    }
    if !(tol > T::zero()) {
        return Err(QuadratureError::InvalidInput("tolerance must be positive".into()));
    }
    let radius = (((T::lit(10.0) / tol).ln() + T::lit(2.0)) / decay_rate).sqrt();
    let inner_opts = QuadOptions::with_tol(tol / (T::lit(8.0) * radius));
    let outer_opts = QuadOptions::with_tol(tol / T::lit(2.0));
    let mut evaluations = 0usize;
    let mut all_converged = true;
    let mut inner_err = T::zero();
    let outer = adaptive(
        |x: T| {
            let r = adaptive(|y: T| f(x, y), -radius, radius, &inner_opts);
            evaluations += r.evaluations;
            all_converged &= r.converged;
            inner_err = inner_err.max(r.error_bound);
            r.value
        },
        -radius,
        radius,
        &outer_opts,
    );
    let error_bound = outer.error_bound + T::lit(2.0) * radius * inner_err;
    Ok(QuadratureResult {
        value: outer.value,
        error_bound,
        evaluations,
        converged: outer.converged && all_converged && error_bound <= tol,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on `[0, 1]` mapped through `map`, which
/// returns `(u, du/dw)` for the panel coordinate `w ∈ [0, 1]`.
fn composite_rule<T: Real>(panels: usize, order: usize, map: impl Fn(f64) -> (f64, f64)) -> Vec<(T, T)> {
    let (x, w) = gauss_legendre(order);
    let mut out = Vec::with_capacity(panels * order);
    let h = 1.0 / panels as f64;
    for p in 0..panels {
        let lo = p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let s = lo + 0.5 * h * (xi + 1.0);
            let (u, du) = map(s);
            out.push((T::lit(u), T::lit(0.5 * h * wi * du)));
        }
    }
    out
}

/// Tensor mesh for [`integrate_simplex4`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SimplexMesh {
    /// Panels per coordinate for the outer pair `(t1, s1)`.
    pub outer_panels: usize,
    /// Panels per coordinate for the inner pair `(t2, s2)`.
    pub inner_panels: usize,
    /// Gauss–Legendre points per panel.
    pub order: usize,
}

impl Default for SimplexMesh {
    fn default() -> Self {
        Self { outer_panels: 3, inner_panels: 3, order: 6 }
    }
}

impl SimplexMesh {
    /// Next refinement level: every panel count doubled.
    pub fn refined(&self) -> Self {
        Self { outer_panels: self.outer_panels * 2, inner_panels: self.inner_panels * 2, order: self.order }
    }

    /// Parses `"outer:inner:order"`.
    pub fn parse(spec: &str) -> Result<Self, QuadratureError> {
        let parts: Vec<_> = spec.split(':').collect();
        let bad = || QuadratureError::InvalidInput(format!("mesh spec {spec:?} is not outer:inner:order"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Result<Vec<usize>, _> = parts.iter().map(|p| p.trim().parse::<usize>()).collect();
        let nums = nums.map_err(|_| bad())?;
        if nums.iter().any(|&n| n == 0) {
            return Err(bad());
        }
        Ok(Self { outer_panels: nums[0], inner_panels: nums[1], order: nums[2] })
    }
}

impl std::fmt::Display for SimplexMesh {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.outer_panels, self.inner_panels, self.order)
    }
}

/// Relative radii of the excluded tube around the diagonal, successively halved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeExclusion<T> {
    pub eps: [T; 3],
}

impl<T: Real> Default for TubeExclusion<T> {
    fn default() -> Self {
        Self { eps: [T::lit(1e-2), T::lit(5e-3), T::lit(2.5e-3)] }
    }
}

/// Outcome of the ε-extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TubeTrend {
    /// Increments shrink geometrically; extrapolated.
    Converging,
    /// Increments do not shrink: the excluded neighbourhood carries a growing share.
    Diverging,
    /// Increments change sign; no extrapolation applied.
    NonMonotone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult<T> {
    pub estimate: QuadratureResult<T>,
    /// `(ε, value)` per tube radius; empty without exclusion.
    pub tube_values: Vec<(T, T)>,
    /// Fitted exponent `γ` in `I(ε) ≈ I₀ - c ε^γ`.
    pub rate: Option<T>,
    pub trend: Option<TubeTrend>,
    /// The integrand produced a non-finite value somewhere on the mesh.
    pub nonfinite: bool,
}

/// Three-point extrapolation `I(ε) = I₀ - c ε^γ` for halving ε.
pub fn extrapolate_halving<T: Real>(values: [T; 3]) -> (T, T, Option<T>, TubeTrend) {
    let [i1, i2, i3] = values;
    let d1 = i2 - i1;
    let d2 = i3 - i2;
    let scale = i3.abs().max(T::min_positive_value());
    if d2.abs() <= T::lit(64.0) * T::epsilon() * scale {
        return (i3, d2.abs(), None, TubeTrend::Converging);
    }
    let r = d1 / d2;
    if r > T::one() {
        let rate = r.log2();
        let value = i3 + d2 / (r - T::one());
        (value, d2.abs(), Some(rate), TubeTrend::Converging)
    } else if r > T::zero() {
        (i3, d2.abs(), Some(r.log2()), TubeTrend::Diverging)
    } else {
        (i3, d1.abs().max(d2.abs()), None, TubeTrend::NonMonotone)
    }
}

/// Integrates `f(t1, s1, t2, s2)` over `{0<s1<t1<T} × {0<s2<t2<T}`.
///
/// The outer pair uses `t1 = T x`, `t1 - s1 = t1 w⁴`. For each outer point the
/// inner triangle is split into three sub-triangles with the outer point as
/// common vertex and each is Duffy-mapped, so the diagonal becomes the edge
/// `u = 0`. With `exclusion`, the region `u < ε` of every sub-triangle is
/// removed (a polygon of relative size ε around the diagonal) and the
/// results for the three radii are extrapolated to ε = 0.
pub fn integrate_simplex4<T: Real, F>(
    f: F,
    horizon: T,
    mesh: &SimplexMesh,
    exclusion: Option<&TubeExclusion<T>>,
) -> Result<SimplexResult<T>, QuadratureError>
where
    F: Fn(T, T, T, T) -> T + Sync,
{
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(QuadratureError::InvalidInput("horizon must be positive".into()));
    }
    if mesh.outer_panels == 0 || mesh.inner_panels == 0 || mesh.order == 0 {
        return Err(QuadratureError::InvalidInput("mesh counts must be positive".into()));
    }
    if let Some(ex) = exclusion {
        for w in ex.eps.windows(2) {
            if !(w[1] > T::zero() && w[0] > w[1] && w[0] < T::lit(0.5)) {
                return Err(QuadratureError::InvalidInput("tube radii must be decreasing within (0, 1/2)".into()));
            }
        }
    }

    // Outer rules.
    let x_rule = composite_rule::<T>(mesh.outer_panels, mesh.order, |s| (s, 1.0));
    let z_rule = composite_rule::<T>(mesh.outer_panels, mesh.order, |s| (s.powi(4), 4.0 * s.powi(3)));
    // Inner rules: v across the far edge, u from the diagonal outwards.
    let v_rule = composite_rule::<T>(mesh.inner_panels, mesh.order, |s| (s, 1.0));
    let far_rule = composite_rule::<T>(mesh.inner_panels, mesh.order, |s| {
        (1.0 - 0.5 * (1.0 - s).powi(4), 2.0 * (1.0 - s).powi(3))
    });
    let near_rules: Vec<Vec<(T, T)>> = match exclusion {
        None => vec![composite_rule::<T>(mesh.inner_panels, mesh.order, |s| (0.5 * s.powi(3), 1.5 * s * s))],
        Some(ex) => ex
            .eps
            .iter()
            .map(|&e| {
                let e = e.as_f64();
                let span = (0.5 / e).ln();
                composite_rule::<T>(mesh.inner_panels, mesh.order, move |s| {
                    let u = e * (span * s).exp();
                    (u, u * span)
                })
            })
            .collect(),
    };

    let outer_nodes: Vec<(T, T, T)> = x_rule
        .iter()
        .flat_map(|&(x, wx)| {
            z_rule.iter().map(move |&(z, wz)| {
                let t1 = horizon * x;
                let s1 = t1 - t1 * z;
                (t1, s1, wx * wz * horizon * t1)
            })
        })
        .collect();

    let zero = T::zero();
    let verts = [(zero, zero), (horizon, zero), (horizon, horizon)];

    // Per outer node: far contribution plus one near contribution per radius.
    let n_near = near_rules.len();
    let rows: Vec<(T, Vec<T>, bool)> = outer_nodes
        .par_iter()
        .map(|&(t1, s1, w_outer)| {
            let mut far = KahanSum::new();
            let mut near = vec![KahanSum::new(); n_near];
            let mut nonfinite = false;
            for k in 0..3 {
                let (at, as_) = verts[k];
                let (bt, bs) = verts[(k + 1) % 3];
                let (pa_t, pa_s) = (at - t1, as_ - s1);
                let (ab_t, ab_s) = (bt - at, bs - as_);
                let jac = (pa_t * ab_s - pa_s * ab_t).abs();
                if jac == zero {
                    continue;
                }
                let mut eval_u = |u: T, wu: T, acc: &mut KahanSum<T>| {
                    for &(v, wv) in &v_rule {
                        let t2 = t1 + u * (pa_t + v * ab_t);
                        let s2 = s1 + u * (pa_s + v * ab_s);
                        let val = f(t1, s1, t2, s2);
                        if !val.is_finite() {
                            // Rounding can land a node on the simplex boundary.
                            if s2 > zero && s2 < t2 && t2 < horizon {
                                nonfinite = true;
                            }
                            continue;
                        }
                        acc.add(val * wu * wv * u * jac);
                    }
                };
                for &(u, wu) in &far_rule {
                    eval_u(u, wu, &mut far);
                }
                for (rule, acc) in near_rules.iter().zip(near.iter_mut()) {
                    for &(u, wu) in rule {
                        eval_u(u, wu, acc);
                    }
                }
            }
            let far = far.value() * w_outer;
            let near = near.iter().map(|a| a.value() * w_outer).collect();
            (far, near, nonfinite)
        })
        .collect();

    let nonfinite = rows.iter().any(|r| r.2);
    let mut far = KahanSum::new();
    let mut near = vec![KahanSum::new(); n_near];
    for (f_row, n_row, _) in &rows {
        far.add(*f_row);
        for (acc, v) in near.iter_mut().zip(n_row) {
            acc.add(*v);
        }
    }
    let totals: Vec<T> = near.iter().map(|n| far.value() + n.value()).collect();
    let evaluations =
        outer_nodes.len() * 3 * v_rule.len() * (far_rule.len() + near_rules.iter().map(Vec::len).sum::<usize>());

    match exclusion {
        None => Ok(SimplexResult {
            estimate: QuadratureResult { value: totals[0], error_bound: T::zero(), evaluations, converged: !nonfinite },
            tube_values: Vec::new(),
            rate: None,
            trend: None,
            nonfinite,
        }),
        Some(ex) => {
            let (value, err, rate, trend) = extrapolate_halving([totals[0], totals[1], totals[2]]);
            Ok(SimplexResult {
                estimate: QuadratureResult {
                    value,
                    error_bound: err,
                    evaluations,
                    converged: !nonfinite && trend == TubeTrend::Converging,
                },
                tube_values: ex.eps.iter().copied().zip(totals).collect(),
                rate,
                trend: Some(trend),
                nonfinite,
            })
        }
    }
}
