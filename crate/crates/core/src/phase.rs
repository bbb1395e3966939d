//! Phase classification, the critical time, and the Hausdorff dimension of
//! the dust on the Cantor geometry.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::LevelCounts;
use crate::rates::{RateFamily, TailMeta};
use crate::scalar::{Extended, Real};
use crate::space::Geometry;
use crate::stats::{linear_fit, Summary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PhaseLabel {
    LowerSubcritical,
    UpperSubcritical,
    Semicritical,
    Critical,
    Supercritical,
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Phase<F> {
    pub label: PhaseLabel,
    /// Present iff the phase is critical.
    pub critical_time: Option<F>,
}

pub fn classify<F: Real>(alphabet_size: u32, tail: &TailMeta<F>) -> Result<Phase<F>> {
    tail.validate()?;
    let label = if tail.sum_weighted_finite {
        PhaseLabel::LowerSubcritical
    } else if tail.sum.is_finite() {
        PhaseLabel::UpperSubcritical
    } else {
        match tail.cesaro_limsup {
            Extended::Infinite => PhaseLabel::Supercritical,
            l if l.is_zero() => PhaseLabel::Semicritical,
            _ => PhaseLabel::Critical,
        }
    };
    let critical_time = match label {
        PhaseLabel::Critical => Some(critical_time(alphabet_size, tail.cesaro_limsup)?),
        _ => None,
    };
    Ok(Phase { label, critical_time })
}

/// Classifies a rate family; all-zero families describe no coalescent at all
/// and are rejected.
pub fn classify_rates<F: Real>(alphabet_size: u32, rates: &RateFamily<F>) -> Result<Phase<F>> {
    if rates.is_zero() {
        return Err(Error::TrivialModel);
    }
    classify(alphabet_size, &rates.analytics(alphabet_size)?)
}

/// `t_0 = ln|S| / L` for a Cesàro limsup `L ∈ (0, ∞)`.
pub fn critical_time<F: Real>(alphabet_size: u32, cesaro_limsup: Extended<F>) -> Result<F> {
    match cesaro_limsup {
        Extended::Finite(l) if l > F::zero() => Ok(F::from_count(alphabet_size as usize).ln() / l),
        other => Err(Error::NotCritical(format!("Cesàro limsup {other} is not in (0, inf)"))),
    }
}

/// `ln(2|S| - 1)`, the exponent of the contraction ratio of the Cantor maps.
pub fn contraction_exponent<F: Real>(alphabet_size: u32) -> F {
    F::from_count(2 * alphabet_size as usize - 1).ln()
}

/// `dim_H K = ln|S| / ln(2|S| - 1)`.
pub fn space_dimension<F: Real>(alphabet_size: u32) -> F {
    F::from_count(alphabet_size as usize).ln() / contraction_exponent(alphabet_size)
}

/// `max(0, (ln|S| - t L) / ln(2|S| - 1))`.
pub fn dust_dimension_analytic<F: Real>(
    alphabet_size: u32,
    geometry: Geometry,
    cesaro_limsup: Extended<F>,
    t: F,
) -> Result<F> {
    if geometry != Geometry::CantorSet {
        return Err(Error::GeometryNotCompatible);
    }
    let Extended::Finite(l) = cesaro_limsup else { return Ok(F::zero()) };
    let num = F::from_count(alphabet_size as usize).ln() - t * l;
    Ok((num / contraction_exponent::<F>(alphabet_size)).max(F::zero()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmpiricalDimension {
    pub estimate: f64,
    pub std_error: f64,
    /// 95% normal half-width.
    pub half_width: f64,
    pub replicates_used: usize,
    pub replicates_total: usize,
    /// Fitted levels `lo..=hi`.
    pub levels: (usize, usize),
}

/// Box-counting slope of `ln B_n` against `n ln(2|S| - 1)` over the upper half
/// of `[1, N]`, averaged over replicates whose depth-`N` count is positive.
pub fn dust_dimension_empirical<C: LevelCounts>(
    alphabet_size: u32,
    geometry: Geometry,
    samples: &[C],
) -> Result<EmpiricalDimension> {
    if geometry != Geometry::CantorSet {
        return Err(Error::GeometryNotCompatible);
    }
    let depth = samples.first().map_or(0, |c| c.level_counts().len().saturating_sub(1));
    if depth < 2 {
        return Err(Error::InvalidParameter("dimension fit needs depth at least 2".into()));
    }
    if samples.iter().any(|c| c.level_counts().len() != depth + 1) {
        return Err(Error::InvalidParameter("replicates have different depths".into()));
    }
    let lo = depth.div_ceil(2);
    let scale: f64 = contraction_exponent(alphabet_size);
    let x: Vec<f64> = (lo..=depth).map(|n| n as f64 * scale).collect();
    let slopes: Vec<f64> = samples
        .iter()
        .map(|c| c.level_counts())
        .filter(|b| b[depth] > 0)
        .map(|b| {
            let y: Vec<f64> = (lo..=depth).map(|n| (b[n] as f64).ln()).collect();
            linear_fit(&x, &y).0
        })
        .collect();
    if slopes.is_empty() {
        return Err(Error::NoSurvivors);
    }
    let s = Summary::of(slopes.iter().copied());
    let std_error = if s.n > 1 { s.std_error } else { f64::NAN };
    Ok(EmpiricalDimension {
        estimate: s.mean,
        std_error,
        half_width: 1.96 * std_error,
        replicates_used: s.n,
        replicates_total: samples.len(),
        levels: (lo, depth),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DimensionReport {
    pub t: f64,
    pub analytic_dim: f64,
    pub empirical: EmpiricalDimension,
    pub conditioned_on_survival: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseReport {
    pub alphabet_size: u32,
    pub rates: String,
    pub phase: PhaseLabel,
    pub t0: Option<f64>,
    pub tail: TailMeta<f64>,
    /// Windowed mean of Cesàro averages; advisory, not used to classify.
    pub cesaro_estimate: f64,
    pub space_dimension: f64,
    /// Dimension of the dust at `t`, on the Cantor geometry.
    pub dust_dimension: Option<f64>,
    /// `ln m_n` for `n = 0..` when a time was supplied.
    pub log_m: Option<Vec<f64>>,
    /// Partial sums of `g^t` when a time was supplied.
    pub g_partial: Option<Vec<f64>>,
}

impl PhaseReport {
    pub fn new(alphabet_size: u32, rates: &RateFamily<f64>, t: Option<f64>, trace: usize) -> Result<Self> {
        let phase = classify_rates(alphabet_size, rates)?;
        let tail = rates.analytics(alphabet_size)?;
        let (mut log_m, mut g_partial, mut dust_dimension) = (None, None, None);
        if let Some(t) = t {
            let spec = crate::gwve::GwveSpec::new(alphabet_size, rates.clone(), t)?;
            log_m = Some(spec.log_m_trace(trace));
            let mut acc = 0.0;
            g_partial = Some((1..=trace).map(|n| {
                acc += spec.g_term(n);
                acc
            }).collect());
            dust_dimension = Some(dust_dimension_analytic(alphabet_size, Geometry::CantorSet, tail.cesaro_limsup, t)?);
        }
        Ok(PhaseReport {
            alphabet_size,
            rates: rates.to_string(),
            phase: phase.label,
            t0: phase.critical_time,
            tail,
            cesaro_estimate: rates.cesaro_window_estimate(1000, 2000),
            space_dimension: space_dimension(alphabet_size),
            dust_dimension,
            log_m,
            g_partial,
        })
    }
}
