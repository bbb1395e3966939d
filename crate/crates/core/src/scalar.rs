//! Scalar abstractions.
//!
//! Analytic quantities (rates, means, extinction probabilities, dimensions)
//! are generic over [`Real`], which covers `f32` and `f64`. Cell measures and
//! interval embeddings are generic over [`Exact`], which additionally admits
//! exact rationals such as `num_rational::BigRational`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, Num};

/// Floating-point scalar used by the analytic modules.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field-like scalar that may be exact. Used for cell measures, block masses
/// and interval endpoints, where rational arithmetic makes mass conservation
/// an equality rather than an approximation.
pub trait Exact: Clone + Num + FromPrimitive + PartialOrd + Debug + Display {
    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }
}

impl<T: Clone + Num + FromPrimitive + PartialOrd + Debug + Display> Exact for T {}

/// Value in `[0, ∞]`, used for tail sums and Cesàro limits that may diverge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended<F> {
    Finite(F),
    Infinite,
}

impl<F: Real> Extended<F> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(&self) -> Option<F> {
        match *self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Extended::Finite(v) if v.is_zero())
    }

    /// Value as an `f64`, with `Infinite` mapped to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        match *self {
            Extended::Finite(v) => v.to_f64_lossy(),
            Extended::Infinite => f64::INFINITY,
        }
    }
}

impl<F: Real> Display for Extended<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

impl<F: Real> serde::Serialize for Extended<F> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(v.to_f64_lossy()),
            Extended::Infinite => s.serialize_str("inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn exact_counts() {
        let r = <BigRational as Exact>::from_count(3);
        assert_eq!(r.to_string(), "3");
        assert_eq!(<f64 as Exact>::from_count(7), 7.0);
    }

    #[test]
    fn extended_display() {
        assert_eq!(Extended::<f64>::Infinite.to_string(), "inf");
        assert_eq!(Extended::Finite(0.5f64).to_string(), "0.5");
        assert!(Extended::Finite(0.0f32).is_zero());
        assert_eq!(Extended::<f32>::Infinite.to_f64(), f64::INFINITY);
    }
}
