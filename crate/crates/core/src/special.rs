//! Gamma function machinery.
//!
//! Ratios are evaluated as differences of log-gamma values. For large
//! arguments the difference is formed analytically from the Stirling series
//! so that `Γ(x)/Γ(x-δ)` keeps full relative precision up to `x ~ 1e6` and
//! beyond.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GammaError {
    #[error("gamma argument {0} is a pole or outside the supported domain")]
    Domain(f64),
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `B_{2k} / (2k (2k-1))` for k = 1..7.
const STIRLING_COEF: [f64; 7] =
    [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360_360.0, 1.0 / 156.0];

/// Arguments at or above this use the Stirling series.
const STIRLING_MIN: f64 = 10.0;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> Result<T, GammaError> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(GammaError::Domain(x.as_f64()));
    }
    if x >= T::lit(STIRLING_MIN) {
        return Ok(stirling_ln_gamma(x));
    }
    if x < T::lit(0.5) {
        // Reflection keeps the Lanczos sum in its accurate range.
        let pi = T::PI();
        let s = (pi * x).sin();
        return Ok(pi.ln() - s.ln() - lanczos_ln_gamma(T::one() - x));
    }
    Ok(lanczos_ln_gamma(x))
}

fn lanczos_ln_gamma<T: Real>(x: T) -> T {
    let xm1 = x - T::one();
    let mut a = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a = a + T::lit(c) / (xm1 + T::from_usize_lossy(i));
    }
    let t = xm1 + T::lit(LANCZOS_G + 0.5);
    T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + (xm1 + T::lit(0.5)) * t.ln() - t + a.ln()
}

fn stirling_series<T: Real>(x: T) -> T {
    let inv = x.recip();
    let inv2 = inv * inv;
    let mut pow = inv;
    let mut acc = T::zero();
    for &c in STIRLING_COEF.iter() {
        acc = acc + T::lit(c) * pow;
        pow = pow * inv2;
    }
    acc
}

fn stirling_ln_gamma<T: Real>(x: T) -> T {
    (x - T::lit(0.5)) * x.ln() - x + T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + stirling_series(x)
}

/// `Γ(x)` for real `x` away from the non-positive integers.
pub fn gamma<T: Real>(x: T) -> Result<T, GammaError> {
    if x > T::zero() {
        return ln_gamma(x).map(|l| l.exp());
    }
    if x == x.floor() || !x.is_finite() {
        return Err(GammaError::Domain(x.as_f64()));
    }
    let pi = T::PI();
    let g1 = gamma(T::one() - x)?;
    Ok(pi / ((pi * x).sin() * g1))
}

/// `Γ(x) / Γ(x - delta)` for `x > 0` and `x - delta > 0`.
pub fn gamma_ratio<T: Real>(x: T, delta: T) -> Result<T, GammaError> {
    let y = x - delta;
    if !(x > T::zero()) || !x.is_finite() {
        return Err(GammaError::Domain(x.as_f64()));
    }
    if !(y > T::zero()) || !y.is_finite() {
        return Err(GammaError::Domain(y.as_f64()));
    }
    Ok(ln_gamma_shift(x, -delta)?.exp())
}

/// `ln Γ(x) - ln Γ(x + d)` with the gap given exactly, so that `x ≫ |d|`
/// keeps full accuracy.
pub fn ln_gamma_shift<T: Real>(x: T, d: T) -> Result<T, GammaError> {
    let y = x + d;
    if !(x > T::zero()) || !x.is_finite() {
        return Err(GammaError::Domain(x.as_f64()));
    }
    if !(y > T::zero()) || !y.is_finite() {
        return Err(GammaError::Domain(y.as_f64()));
    }
    if d == T::zero() {
        return Ok(T::zero());
    }
    if x.min(y) < T::lit(STIRLING_MIN) || d.abs() > T::lit(0.25) * x.min(y) {
        return Ok(ln_gamma_ratio_unchecked(x, y));
    }
    let main = -(y - T::lit(0.5)) * (d / x).ln_1p() - d * x.ln() + d;
    Ok(main + stirling_series(x) - stirling_series(y))
}

/// `ln Γ(x) - ln Γ(y)` for positive `x`, `y`.
pub fn ln_gamma_diff<T: Real>(x: T, y: T) -> Result<T, GammaError> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(GammaError::Domain(x.as_f64()));
    }
    if !(y > T::zero()) || !y.is_finite() {
        return Err(GammaError::Domain(y.as_f64()));
    }
    if x == y {
        return Ok(T::zero());
    }
    Ok(ln_gamma_ratio_unchecked(x, y))
}

fn ln_gamma_ratio_unchecked<T: Real>(mut x: T, mut y: T) -> T {
    let lo = T::lit(STIRLING_MIN);
    // Large gaps gain nothing from the difference formula.
    if (x - y).abs() > T::lit(0.25) * x.min(y) && x.min(y) >= lo {
        return stirling_ln_gamma(x) - stirling_ln_gamma(y);
    }
    // Γ(x)/Γ(y) = Γ(x+1)/Γ(y+1) · y/x
    let mut shift = T::zero();
    while x.min(y) < lo {
        shift = shift + (y / x).ln();
        x = x + T::one();
        y = y + T::one();
    }
    let delta = x - y;
    let main = (y - T::lit(0.5)) * (delta / y).ln_1p() + delta * x.ln() - delta;
    main + stirling_series(x) - stirling_series(y) + shift
}
