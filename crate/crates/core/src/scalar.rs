//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All core math is written against [`Real`], which is implemented for `f32`
//! and `f64`. Constants are injected through [`Real::lit`] so that tables of
//! `f64` coefficients can be reused at either precision.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Floating-point scalar used throughout the crate: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`, rounding if necessary.
    fn lit(x: f64) -> Self;

    /// Converts a chaos index or count.
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    /// Default absolute tolerance for certified series remainders.
    ///
    /// `1e-12` at double precision; scaled to the type's epsilon otherwise.
    fn default_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(64.0))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
}

/// An extended real: finite, `+inf`, or `-inf`.
///
/// Divergent series are reported as [`Extended::PosInf`] after an analytic
/// decision, never by letting a float overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended<T> {
    Finite(T),
    PosInf,
    NegInf,
}

impl<T: Real> Extended<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<T> {
        match *self {
            Extended::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Maps to a float with `±inf` for the infinite variants.
    pub fn to_float(&self) -> T {
        match *self {
            Extended::Finite(v) => v,
            Extended::PosInf => T::infinity(),
            Extended::NegInf => T::neg_infinity(),
        }
    }

    pub fn from_float(v: T) -> Self {
        if v.is_finite() {
            Extended::Finite(v)
        } else if v > T::zero() {
            Extended::PosInf
        } else {
            Extended::NegInf
        }
    }
}

impl<T: Real> Display for Extended<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::PosInf => f.write_str("+inf"),
            Extended::NegInf => f.write_str("-inf"),
        }
    }
}

// JSON form: a number, or the strings "+inf" / "-inf".
impl<T: Real + Serialize> Serialize for Extended<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => v.serialize(s),
            Extended::PosInf => s.serialize_str("+inf"),
            Extended::NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for Extended<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr<T> {
            Num(T),
            Tag(String),
        }
        match Repr::<T>::deserialize(d)? {
            Repr::Num(v) => Ok(Extended::Finite(v)),
            Repr::Tag(s) => match s.as_str() {
                "+inf" | "inf" => Ok(Extended::PosInf),
                "-inf" => Ok(Extended::NegInf),
                other => {
                    Err(serde::de::Error::custom(format!("expected a number, \"+inf\" or \"-inf\", got {other:?}")))
                }
            },
        }
    }
}

/// Compensated (Kahan) accumulator; terms are added in call order.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> KahanSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum
    }
}
