//! Monte Carlo over the complex Gaussian measure ν.
//!
//! Each coordinate `u = v + i·w` has independent real and imaginary parts
//! with variance 1/2. Samples come in fixed blocks of [`BLOCK`]; block `k` is
//! drawn from ChaCha20 seeded with `seed` on stream `k`, so the batch does not
//! depend on the number of worker threads. Normals are produced by
//! Box–Muller without the usual factor 2, which gives variance 1/2 directly.
//!
//! Estimates carry jackknife standard errors over [`JACKKNIFE_GROUPS`]
//! contiguous groups.

use crate::scalar::KahanSum;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const GENERATOR: &str = "chacha20-stream-per-block/box-muller";
pub const BLOCK: usize = 4096;
pub const JACKKNIFE_GROUPS: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("evaluator domain violation: {0}")]
    Domain(String),
}

/// Reproducibility record attached to every result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BatchMeta {
    pub seed: u64,
    pub generator: &'static str,
    pub count: usize,
    pub dim: usize,
}

/// `count` samples of a `dim`-dimensional complex Gaussian, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGaussianBatch {
    dim: usize,
    count: usize,
    seed: u64,
    samples: Vec<Complex64>,
}

impl ComplexGaussianBatch {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample(&self, i: usize) -> &[Complex64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[Complex64]> {
        self.samples.chunks_exact(self.dim)
    }

    pub fn meta(&self) -> BatchMeta {
        BatchMeta { seed: self.seed, generator: GENERATOR, count: self.count, dim: self.dim }
    }

    /// Every coordinate multiplied by `e^{iθ}`.
    pub fn rotated(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self { samples: self.samples.iter().map(|z| z * phase).collect(), ..self.clone() }
    }
}

/// Draws `count` i.i.d. samples of ν restricted to `dim` coordinates.
pub fn sample_nu(dim: usize, count: usize, seed: u64) -> Result<ComplexGaussianBatch, McError> {
    if dim == 0 || count == 0 {
        return Err(McError::InvalidArgument("dim and count must be positive".into()));
    }
    let mut samples = vec![Complex64::new(0.0, 0.0); dim * count];
    samples.par_chunks_mut(BLOCK * dim).enumerate().for_each(|(block, chunk)| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(block as u64);
        for z in chunk.iter_mut() {
            *z = box_muller(&mut rng);
        }
    });
    Ok(ComplexGaussianBatch { dim, count, seed, samples })
}

fn box_muller(rng: &mut impl Rng) -> Complex64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    Complex64::new(r * c, r * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealEstimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub value: Complex64,
    /// `sqrt(se_re² + se_im²)`.
    pub se: f64,
}

/// Differences at rounding level score `0`; with zero spread any other difference is `+inf`.
fn z(diff: f64, se: f64, scale: f64) -> f64 {
    if diff <= 64.0 * f64::EPSILON * scale {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY
    }
}

impl ComplexEstimate {
    /// `|estimate - target| / se`.
    pub fn z_score(&self, target: Complex64) -> f64 {
        z((self.value - target).norm(), self.se, self.value.norm().max(target.norm()))
    }
}

impl RealEstimate {
    pub fn z_score(&self, target: f64) -> f64 {
        z((self.value - target).abs(), self.se, self.value.abs().max(target.abs()))
    }
}

/// Group sums in fixed order.
fn group_sums(
    batch: &ComplexGaussianBatch,
    f: &(impl Fn(&[Complex64]) -> Complex64 + Sync),
) -> Vec<(Complex64, usize)> {
    let groups = JACKKNIFE_GROUPS.min(batch.count);
    (0..groups)
        .into_par_iter()
        .map(|g| {
            let lo = g * batch.count / groups;
            let hi = (g + 1) * batch.count / groups;
            let (mut re, mut im) = (KahanSum::new(), KahanSum::new());
            for i in lo..hi {
                let v = f(batch.sample(i));
                re.add(v.re);
                im.add(v.im);
            }
            (Complex64::new(re.value(), im.value()), hi - lo)
        })
        .collect()
}

fn jackknife(groups: &[(Complex64, usize)]) -> ComplexEstimate {
    let total: Complex64 = groups.iter().map(|g| g.0).sum();
    let n: usize = groups.iter().map(|g| g.1).sum();
    let mean = total / n as f64;
    let k = groups.len();
    if k < 2 {
        return ComplexEstimate { value: mean, se: f64::INFINITY };
    }
    let loo: Vec<Complex64> = groups.iter().map(|(s, c)| (total - s) / (n - c) as f64).collect();
    let loo_mean: Complex64 = loo.iter().sum::<Complex64>() / k as f64;
    let (mut vr, mut vi) = (0.0, 0.0);
    for t in &loo {
        let d = t - loo_mean;
        vr += d.re * d.re;
        vi += d.im * d.im;
    }
    let scale = (k - 1) as f64 / k as f64;
    ComplexEstimate { value: mean, se: (scale * (vr + vi)).sqrt() }
}

/// Sample mean of `f(u)` with jackknife standard error.
pub fn mc_mean(batch: &ComplexGaussianBatch, f: impl Fn(&[Complex64]) -> Complex64 + Sync) -> ComplexEstimate {
    jackknife(&group_sums(batch, &f))
}

/// Sample mean of a real-valued `f(u)`.
pub fn mc_mean_real(batch: &ComplexGaussianBatch, f: impl Fn(&[Complex64]) -> f64 + Sync) -> RealEstimate {
    let e = mc_mean(batch, |u| Complex64::new(f(u), 0.0));
    RealEstimate { value: e.value.re, se: e.se }
}

/// `E[zⁿ·conj(z)^m]` for the first coordinate `z`; equals `n!·δ_nm`.
pub fn mc_monomial_moment(n: u32, m: u32, batch: &ComplexGaussianBatch) -> ComplexEstimate {
    mc_mean(batch, |u| {
        let z = u[0];
        z.powu(n) * z.conj().powu(m)
    })
}

/// A closed-form S-transform `h ↦ SΦ(h)` depending on finitely many coordinates.
pub trait STransform: Sync {
    fn name(&self) -> String;
    /// Number of coordinates of `u` that are read.
    fn dim(&self) -> usize;
    /// Rejects `λ` outside the admissible range.
    fn check_lambda(&self, lambda: f64) -> Result<(), McError> {
        if lambda.is_finite() && lambda >= 0.0 {
            Ok(())
        } else {
            Err(McError::Domain(format!("lambda = {lambda} must be finite and non-negative")))
        }
    }
    /// `SΦ(λu)`.
    fn eval(&self, lambda: f64, u: &[Complex64]) -> Complex64;
}

/// `∫|SΦ(λu)|² dν(u)` by Monte Carlo.
pub fn mc_bs_norm(
    evaluator: &dyn STransform,
    lambda: f64,
    batch: &ComplexGaussianBatch,
) -> Result<RealEstimate, McError> {
    evaluator.check_lambda(lambda)?;
    if batch.dim() < evaluator.dim() {
        return Err(McError::InvalidArgument(format!(
            "evaluator {} needs {} coordinates, batch has {}",
            evaluator.name(),
            evaluator.dim(),
            batch.dim()
        )));
    }
    Ok(mc_mean_real(batch, |u| evaluator.eval(lambda, u).norm_sqr()))
}

/// `SΦ ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub Complex64);

impl STransform for Constant {
    fn name(&self) -> String {
        "constant".into()
    }
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, _: f64, _: &[Complex64]) -> Complex64 {
        self.0
    }
}

/// `SΦ(h) = ⟨e₁, h⟩`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstChaos;

impl STransform for FirstChaos {
    fn name(&self) -> String {
        "first-chaos".into()
    }
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, lambda: f64, u: &[Complex64]) -> Complex64 {
        u[0] * lambda
    }
}

/// `SΦ(h) = Σ c_n ⟨e₁, h⟩ⁿ`, kernels `c_n e₁^{⊗n}`, so `b_n = n!·c_n²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOnePolynomial {
    coeffs: Vec<f64>,
}

impl RankOnePolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Realizes chaos coefficients `b_n` with `c_n = sqrt(b_n / n!)`.
    pub fn from_coefficients(b: &[f64]) -> Result<Self, McError> {
        let mut fact = 1.0;
        let mut coeffs = Vec::with_capacity(b.len());
        for (n, &bn) in b.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            if !(bn >= 0.0) || !bn.is_finite() {
                return Err(McError::InvalidArgument(format!("b_{n} = {bn} must be finite and non-negative")));
            }
            coeffs.push((bn / fact).sqrt());
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

impl STransform for RankOnePolynomial {
    fn name(&self) -> String {
        format!("rank-one-polynomial(degree {})", self.coeffs.len().saturating_sub(1))
    }
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, lambda: f64, u: &[Complex64]) -> Complex64 {
        let z = u[0] * lambda;
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}
