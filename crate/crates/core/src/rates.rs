//! Rate sequences `(r_n)` for reproduction events at level `n`, as closed-form
//! families that carry their own tail behaviour.
//!
//! Phase classification depends on `Σ|S|^n r_n`, `Σ r_n` and the Cesàro
//! limsup `limsup (1/n) Σ_{j≤n} r_j`. None of these is computable from a
//! finite prefix, so every family declares them symbolically and a raw table
//! without a declaration is rejected.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Extended, Real};

/// Tail data of a rate sequence for a given alphabet size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "F: Real"))]
pub struct TailMeta<F> {
    /// Whether `Σ |S|^n r_n < ∞`.
    pub sum_weighted_finite: bool,
    /// `Σ r_n`.
    pub sum: Extended<F>,
    /// `limsup (1/n) Σ_{j=1}^n r_j`.
    pub cesaro_limsup: Extended<F>,
}

impl<F: Real> TailMeta<F> {
    pub fn validate(&self) -> Result<()> {
        if let Extended::Finite(v) = self.sum {
            if v < F::zero() || !v.is_finite() {
                return Err(Error::InconsistentTail(format!("sum {v} out of range")));
            }
        }
        if let Extended::Finite(v) = self.cesaro_limsup {
            if v < F::zero() || !v.is_finite() {
                return Err(Error::InconsistentTail(format!("Cesàro limsup {v} out of range")));
            }
        }
        if self.sum_weighted_finite && !self.sum.is_finite() {
            return Err(Error::InconsistentTail(
                "weighted sum finite but plain sum infinite".into(),
            ));
        }
        if self.sum.is_finite() && !self.cesaro_limsup.is_zero() {
            return Err(Error::InconsistentTail(
                "finite sum requires a zero Cesàro limsup".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RateFamily<F> {
    /// `r_n = c`.
    Constant(F),
    /// `r_n = scale · ratio^n`, `ratio ∈ (0,1)`.
    Geometric { scale: F, ratio: F },
    /// `r_0 = 0`, `r_n = c / n`.
    Harmonic(F),
    /// `r_n = c · n`.
    Linear(F),
    /// `inner` for `n ≤ depth`, zero beyond.
    Truncated { inner: Box<RateFamily<F>>, depth: usize },
    /// `values[n]` for `n < len`; the last value is held for larger `n`.
    Table { values: Vec<F>, tail: Option<TailMeta<F>> },
}

impl<F: Real> RateFamily<F> {
    pub fn truncated(self, depth: usize) -> Self {
        RateFamily::Truncated { inner: Box::new(self), depth }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: F| {
            if v >= F::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidRates(format!("{name} must be finite and non-negative, got {v}")))
            }
        };
        match self {
            RateFamily::Constant(c) | RateFamily::Harmonic(c) | RateFamily::Linear(c) => {
                nonneg("coefficient", *c)
            }
            RateFamily::Geometric { scale, ratio } => {
                nonneg("scale", *scale)?;
                if *ratio > F::zero() && *ratio < F::one() {
                    Ok(())
                } else {
                    Err(Error::InvalidRates(format!("geometric ratio must lie in (0,1), got {ratio}")))
                }
            }
            RateFamily::Truncated { inner, .. } => inner.validate(),
            RateFamily::Table { values, tail } => {
                if values.is_empty() {
                    return Err(Error::InvalidRates("empty rate table".into()));
                }
                values.iter().try_for_each(|v| nonneg("table entry", *v))?;
                match tail {
                    Some(t) => t.validate(),
                    None => Ok(()),
                }
            }
        }
    }

    /// `r_n`.
    pub fn rate(&self, n: usize) -> F {
        match self {
            RateFamily::Constant(c) => *c,
            RateFamily::Geometric { scale, ratio } => *scale * ratio.powi(n as i32),
            RateFamily::Harmonic(c) => {
                if n == 0 {
                    F::zero()
                } else {
                    *c / F::from_count(n)
                }
            }
            RateFamily::Linear(c) => *c * F::from_count(n),
            RateFamily::Truncated { inner, depth } => {
                if n > *depth {
                    F::zero()
                } else {
                    inner.rate(n)
                }
            }
            RateFamily::Table { values, .. } => *values.get(n).unwrap_or(values.last().unwrap()),
        }
    }

    /// `Σ_{j=from}^{to} r_j` (empty when `from > to`).
    pub fn partial_sum(&self, from: usize, to: usize) -> F {
        (from..=to).fold(F::zero(), |acc, j| acc + self.rate(j))
    }

    /// True when every rate is zero.
    pub fn is_zero(&self) -> bool {
        match self {
            RateFamily::Constant(c) | RateFamily::Harmonic(c) | RateFamily::Linear(c) => c.is_zero(),
            RateFamily::Geometric { scale, .. } => scale.is_zero(),
            RateFamily::Truncated { inner, depth } => (0..=*depth).all(|n| inner.rate(n).is_zero()),
            RateFamily::Table { values, .. } => values.iter().all(|v| v.is_zero()),
        }
    }

    /// Exact tail metadata for alphabet size `alphabet_size`.
    pub fn analytics(&self, alphabet_size: u32) -> Result<TailMeta<F>> {
        self.validate()?;
        let zero = TailMeta {
            sum_weighted_finite: true,
            sum: Extended::Finite(F::zero()),
            cesaro_limsup: Extended::Finite(F::zero()),
        };
        if self.is_zero() {
            return Ok(zero);
        }
        let s = F::from_count(alphabet_size as usize);
        let tail = match self {
            RateFamily::Constant(c) => TailMeta {
                sum_weighted_finite: false,
                sum: Extended::Infinite,
                cesaro_limsup: Extended::Finite(*c),
            },
            RateFamily::Geometric { scale, ratio } => TailMeta {
                sum_weighted_finite: *ratio * s < F::one(),
                sum: Extended::Finite(*scale / (F::one() - *ratio)),
                cesaro_limsup: Extended::Finite(F::zero()),
            },
            RateFamily::Harmonic(_) => TailMeta {
                sum_weighted_finite: false,
                sum: Extended::Infinite,
                cesaro_limsup: Extended::Finite(F::zero()),
            },
            RateFamily::Linear(_) => TailMeta {
                sum_weighted_finite: false,
                sum: Extended::Infinite,
                cesaro_limsup: Extended::Infinite,
            },
            RateFamily::Truncated { depth, .. } => TailMeta {
                sum_weighted_finite: true,
                sum: Extended::Finite(self.partial_sum(0, *depth)),
                cesaro_limsup: Extended::Finite(F::zero()),
            },
            RateFamily::Table { tail, .. } => (*tail).ok_or(Error::MissingTail)?,
        };
        Ok(tail)
    }

    /// Mean of the Cesàro averages `(1/n) Σ_{j≤n} r_j` over `n ∈ [lo, hi]`.
    /// Advisory only; never used for classification.
    pub fn cesaro_window_estimate(&self, lo: usize, hi: usize) -> F {
        let lo = lo.max(1);
        let mut acc = self.partial_sum(1, lo - 1);
        let mut total = F::zero();
        for n in lo..=hi {
            acc = acc + self.rate(n);
            total = total + acc / F::from_count(n);
        }
        total / F::from_count(hi + 1 - lo)
    }
}

impl<F: Real> fmt::Display for RateFamily<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFamily::Constant(c) => write!(f, "constant:{c}"),
            RateFamily::Geometric { scale, ratio } => write!(f, "geometric:{scale}:{ratio}"),
            RateFamily::Harmonic(c) => write!(f, "harmonic:{c}"),
            RateFamily::Linear(c) => write!(f, "linear:{c}"),
            RateFamily::Truncated { inner, depth } => write!(f, "truncated:{inner}:{depth}"),
            RateFamily::Table { values, tail } => {
                f.write_str("table:")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                if let Some(t) = tail {
                    let w = if t.sum_weighted_finite { "finite" } else { "infinite" };
                    write!(f, ";weighted={w};sum={};cesaro={}", t.sum, t.cesaro_limsup)?;
                }
                Ok(())
            }
        }
    }
}

fn parse_num<F: Real>(text: &str) -> Result<F> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::InvalidRates(format!("not a number: {text:?}")))?;
    Ok(F::lit(v))
}

fn parse_extended<F: Real>(text: &str) -> Result<Extended<F>> {
    match text.trim() {
        "inf" | "infinite" | "∞" => Ok(Extended::Infinite),
        other => parse_num(other).map(Extended::Finite),
    }
}

/// Parses specs such as `constant:1`, `geometric:1:0.125`, `harmonic:1`,
/// `linear:0.5`, `truncated:constant:1:5` and
/// `table:1,2,3;weighted=infinite;sum=inf;cesaro=2`.
impl<F: Real> FromStr for RateFamily<F> {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let args: Vec<&str> = if rest.is_empty() { vec![] } else { rest.split(':').collect() };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidRates(format!("{kind} expects {n} argument(s) in {spec:?}")))
            }
        };
        let family = match kind {
            "constant" => {
                arity(1)?;
                RateFamily::Constant(parse_num(args[0])?)
            }
            "geometric" => {
                arity(2)?;
                RateFamily::Geometric { scale: parse_num(args[0])?, ratio: parse_num(args[1])? }
            }
            "harmonic" => {
                arity(1)?;
                RateFamily::Harmonic(parse_num(args[0])?)
            }
            "linear" => {
                arity(1)?;
                RateFamily::Linear(parse_num(args[0])?)
            }
            "truncated" => {
                let (inner, depth) = rest
                    .rsplit_once(':')
                    .ok_or_else(|| Error::InvalidRates(format!("truncated needs inner:depth in {spec:?}")))?;
                let depth = depth
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidRates(format!("bad truncation depth {depth:?}")))?;
                inner.parse::<RateFamily<F>>()?.truncated(depth)
            }
            "table" => {
                let mut parts = rest.split(';');
                let values = parts
                    .next()
                    .unwrap_or("")
                    .split(',')
                    .filter(|v| !v.trim().is_empty())
                    .map(parse_num)
                    .collect::<Result<Vec<F>>>()?;
                let mut weighted = None;
                let mut sum = None;
                let mut cesaro = None;
                for part in parts {
                    let (key, value) = part
                        .split_once('=')
                        .ok_or_else(|| Error::InvalidRates(format!("bad tail field {part:?}")))?;
                    match key.trim() {
                        "weighted" => {
                            weighted = Some(match value.trim() {
                                "finite" | "true" => true,
                                "infinite" | "false" => false,
                                v => return Err(Error::InvalidRates(format!("bad weighted flag {v:?}"))),
                            })
                        }
                        "sum" => sum = Some(parse_extended(value)?),
                        "cesaro" => cesaro = Some(parse_extended(value)?),
                        k => return Err(Error::InvalidRates(format!("unknown tail field {k:?}"))),
                    }
                }
                let tail = match (weighted, sum, cesaro) {
                    (None, None, None) => None,
                    (Some(w), Some(s), Some(c)) => {
                        Some(TailMeta { sum_weighted_finite: w, sum: s, cesaro_limsup: c })
                    }
                    _ => {
                        return Err(Error::InvalidRates(
                            "tail declaration needs weighted, sum and cesaro".into(),
                        ))
                    }
                };
                RateFamily::Table { values, tail }
            }
            other => return Err(Error::InvalidRates(format!("unknown family {other:?}"))),
        };
        family.validate()?;
        Ok(family)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(s: &str) -> RateFamily<f64> {
        s.parse().unwrap()
    }

    #[test]
    fn rate_examples() {
        assert_eq!(fam("constant:1").rate(7), 1.0);
        assert_eq!(fam("geometric:1:0.125").rate(2), 1.0 / 64.0);
        assert_eq!(fam("truncated:constant:1:5").rate(6), 0.0);
        assert_eq!(fam("truncated:constant:1:5").rate(5), 1.0);
        assert_eq!(fam("harmonic:2").rate(0), 0.0);
        assert_eq!(fam("harmonic:2").rate(4), 0.5);
        assert_eq!(fam("linear:0.5").rate(3), 1.5);
    }

    #[test]
    fn analytics_examples() {
        let c = fam("constant:1").analytics(2).unwrap();
        assert_eq!(
            c,
            TailMeta {
                sum_weighted_finite: false,
                sum: Extended::Infinite,
                cesaro_limsup: Extended::Finite(1.0)
            }
        );
        let g = fam("geometric:1:0.125").analytics(2).unwrap();
        assert!(g.sum_weighted_finite);
        assert!((g.sum.finite().unwrap() - 8.0 / 7.0).abs() < 1e-15);
        assert!(g.cesaro_limsup.is_zero());
        let h = fam("harmonic:1").analytics(2).unwrap();
        assert_eq!((h.sum_weighted_finite, h.sum, h.cesaro_limsup.is_zero()), (false, Extended::Infinite, true));
        let l = fam("linear:1").analytics(3).unwrap();
        assert_eq!(l.cesaro_limsup, Extended::Infinite);
    }

    #[test]
    fn truncated_is_always_weighted_finite() {
        for inner in ["constant:1", "linear:3", "harmonic:1", "geometric:2:0.9"] {
            let t = fam(inner).truncated(7).analytics(5).unwrap();
            assert!(t.sum_weighted_finite);
            assert!(t.cesaro_limsup.is_zero());
            assert_eq!(t.sum.finite().unwrap(), fam(inner).partial_sum(0, 7));
        }
    }

    #[test]
    fn geometric_weighted_finiteness_matches_partial_sums() {
        for size in [2u32, 3, 5] {
            for q in [0.125, 0.25, 0.3, 0.5, 0.75] {
                let f = RateFamily::Geometric { scale: 1.0, ratio: q };
                let declared = f.analytics(size).unwrap().sum_weighted_finite;
                let term = |n: usize| (size as f64).powi(n as i32) * f.rate(n);
                let growing = term(60) >= term(59);
                assert_eq!(declared, !growing, "|S|={size} q={q}");
                let weighted: f64 = (0..=60).map(term).sum();
                if declared {
                    assert!(weighted < 1.0 / (1.0 - q * size as f64) + 1e-9);
                } else {
                    assert!(weighted >= 60.0);
                }
            }
        }
    }

    #[test]
    fn table_requires_tail() {
        let t: RateFamily<f64> = "table:1,2,3".parse().unwrap();
        assert_eq!(t.analytics(2), Err(Error::MissingTail));
        assert_eq!(t.rate(10), 3.0);
        let d: RateFamily<f64> = "table:1,2,3;weighted=infinite;sum=inf;cesaro=3".parse().unwrap();
        assert_eq!(d.analytics(2).unwrap().cesaro_limsup, Extended::Finite(3.0));
        assert!("table:1;weighted=finite;sum=inf;cesaro=0".parse::<RateFamily<f64>>().is_err());
        assert!("table:1;weighted=infinite;sum=2;cesaro=1".parse::<RateFamily<f64>>().is_err());
        assert!("table:1;sum=2".parse::<RateFamily<f64>>().is_err());
    }

    #[test]
    fn invalid_specs() {
        for bad in ["constant", "constant:-1", "geometric:1:1", "geometric:1:0", "cubic:1", "truncated:constant:1:x", "table:"] {
            assert!(bad.parse::<RateFamily<f64>>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trip() {
        for spec in ["constant:1", "geometric:1:0.125", "harmonic:1", "linear:0.5", "truncated:constant:1:5", "table:1,2;weighted=infinite;sum=inf;cesaro=2"] {
            let f = fam(spec);
            assert_eq!(f.to_string().parse::<RateFamily<f64>>().unwrap(), f);
        }
    }

    #[test]
    fn cesaro_estimate_is_advisory() {
        let h = fam("harmonic:1");
        let est = h.cesaro_window_estimate(500, 1000);
        assert!(est > 0.0 && est < 0.02);
        assert!((fam("constant:2").cesaro_window_estimate(1, 50) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn generic_over_f32() {
        let f: RateFamily<f32> = "geometric:1:0.5".parse().unwrap();
        assert_eq!(f.rate(3), 0.125f32);
        assert!(!f.analytics(2).unwrap().sum_weighted_finite);
    }
}
