//! The Galton-Watson process in varying environment formed by survivor
//! counts: `B_0 ~ Bernoulli(e^{-t r_0})`, and each level-`n` survivor has
//! `Binomial(|S|, e^{-t r_{n+1}})` surviving children.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phase::critical_time;
use crate::rates::RateFamily;
use crate::scalar::{Extended, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct GwveSpec<F> {
    pub alphabet_size: u32,
    pub rates: RateFamily<F>,
    pub t: F,
}

impl<F: Real> GwveSpec<F> {
    pub fn new(alphabet_size: u32, rates: RateFamily<F>, t: F) -> Result<Self> {
        if !(2..=255).contains(&alphabet_size) {
            return Err(Error::InvalidAlphabet(alphabet_size));
        }
        rates.validate()?;
        if !(t > F::zero() && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("time must be positive and finite, got {t}")));
        }
        Ok(GwveSpec { alphabet_size, rates, t })
    }

    fn size(&self) -> F {
        F::from_count(self.alphabet_size as usize)
    }

    /// Survival probability `e^{-t r_n}` of a single level-`n` complex.
    pub fn survival(&self, n: usize) -> F {
        (-self.t * self.rates.rate(n)).exp()
    }

    /// `ln m_n = n ln|S| - t Σ_{j=1}^n r_j`.
    pub fn log_m(&self, n: usize) -> F {
        self.log_m_trace(n)[n]
    }

    /// `ln m_0, ..., ln m_n`.
    pub fn log_m_trace(&self, n: usize) -> Vec<F> {
        let ln_s = self.size().ln();
        let mut out = Vec::with_capacity(n + 1);
        let mut acc = F::zero();
        out.push(acc);
        for j in 1..=n {
            acc = acc + ln_s - self.t * self.rates.rate(j);
            out.push(acc);
        }
        out
    }

    pub fn m(&self, n: usize) -> F {
        self.log_m(n).exp()
    }

    /// `E[B_n] = e^{-t r_0} m_n`.
    pub fn mean_b(&self, n: usize) -> F {
        (self.log_m(n) - self.t * self.rates.rate(0)).exp()
    }

    /// One trajectory `B_0, ..., B_{n_max}`.
    pub fn simulate<R: Rng + ?Sized>(&self, n_max: usize, rng: &mut R) -> Result<Vec<u64>> {
        let s = self.alphabet_size as u64;
        let mut out = Vec::with_capacity(n_max + 1);
        let mut b = u64::from(rng.random::<f64>() < self.survival(0).to_f64_lossy());
        out.push(b);
        for n in 1..=n_max {
            if b > 0 {
                let trials = b.checked_mul(s).ok_or_else(|| {
                    Error::InvalidParameter(format!("population overflow at generation {n}"))
                })?;
                let p = self.survival(n).to_f64_lossy();
                b = Binomial::new(trials, p)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?
                    .sample(rng);
            }
            out.push(b);
        }
        Ok(out)
    }

    /// `P[B_n = 0]` by backward composition of the offspring generating
    /// functions. Iterates on the survival probability `1 - s` so that values
    /// close to 1 keep their precision.
    pub fn extinct_prob_by(&self, n: usize) -> F {
        let s = self.size();
        let mut alive = F::one();
        for k in (0..n).rev() {
            let p = self.survival(k + 1);
            alive = -(s * (-p * alive).ln_1p()).exp_m1();
        }
        F::one() - self.survival(0) * alive
    }

    /// `lim_n P[B_n = 0]`, evaluated at doubling `n` from `floor` until two
    /// successive values are within `tol`, or `cap` is passed.
    pub fn extinct_prob_limit_with(&self, tol: F, floor: usize, cap: usize) -> ExtinctionEstimate<F> {
        let floor = floor.max(1);
        let mut n = floor;
        let mut prev = self.extinct_prob_by(n);
        loop {
            let next_n = n.saturating_mul(2);
            if next_n > cap {
                return ExtinctionEstimate { value: prev, n, converged: false, tol };
            }
            let next = self.extinct_prob_by(next_n);
            if (next - prev).abs() < tol {
                return ExtinctionEstimate { value: next, n: next_n, converged: true, tol };
            }
            prev = next;
            n = next_n;
        }
    }

    pub fn extinct_prob_limit(&self, tol: F) -> ExtinctionEstimate<F> {
        self.extinct_prob_limit_with(tol, 1_000, 1_000_000)
    }

    fn log_term(&self, n: usize, log_m: F) -> F {
        let log_x = -self.rates.rate(n + 1) * self.t;
        log_f(self.alphabet_size, log_x) - self.size().ln() - log_x - log_m
    }

    /// The `n`-th term `f(x) / (|S| x m_n)` of `g^t`, with `x = e^{-t r_{n+1}}`
    /// and `f(x) = (1-x)^{|S|} + |S| x - 1`.
    pub fn g_term(&self, n: usize) -> F {
        self.log_term(n, self.log_m(n)).exp()
    }

    /// `Σ_{k=1}^n` of the terms of `g^t`.
    pub fn g_partial(&self, n: usize) -> F {
        let trace = self.log_m_trace(n);
        (1..=n).fold(F::zero(), |acc, k| acc + self.log_term(k, trace[k]).exp())
    }

    /// Decides whether `B_n` hits zero almost surely, which happens unless
    /// both `inf m_n > 0` and `g^t < ∞`.
    pub fn degeneracy_test(&self, horizon: usize, tol: F) -> Result<DegeneracyReport<F>> {
        let tail = self.rates.analytics(self.alphabet_size)?;
        let ln_s = self.size().ln();
        let t0 = match tail.cesaro_limsup {
            Extended::Finite(l) if l > F::zero() => Some(critical_time(self.alphabet_size, tail.cesaro_limsup)?),
            _ => None,
        };
        let near = |a: F, b: F| (a - b).abs() <= F::lit(1e-12) * b.abs();
        let at_critical = t0.is_some_and(|t0| near(self.t, t0));
        let constant = match &self.rates {
            RateFamily::Constant(c) => Some(*c),
            _ => None,
        };
        let horizon = horizon.max(2);
        let trace = self.log_m_trace(horizon);

        let (inf_m_positive, inf_m_basis) = match (tail.cesaro_limsup, t0) {
            (Extended::Infinite, _) => (false, InfMBasis::CesaroLimsup),
            (_, None) => (true, InfMBasis::CesaroLimsup),
            (_, Some(_)) if at_critical && constant.is_some() => (true, InfMBasis::ExactConstant),
            (_, Some(_)) if at_critical => {
                let min = trace.iter().copied().fold(F::infinity(), F::min);
                (min > -ln_s * F::from_count(horizon), InfMBasis::NumericHorizon)
            }
            (_, Some(t0)) => (self.t < t0, InfMBasis::CesaroLimsup),
        };

        let g = if t0.is_none_or(|t0| self.t < t0 && !at_critical) && tail.cesaro_limsup.is_finite() {
            // Exponential growth of m_n with bounded f(x)/x makes the series
            // converge; sum until the terms drop below tol.
            let mut sum = F::zero();
            let mut terms = 0;
            for k in 1..=horizon {
                let term = self.log_term(k, trace[k]).exp();
                sum = sum + term;
                terms = k;
                if term < tol * F::lit(1e-3) && k >= 8 {
                    break;
                }
            }
            GVerdict::Finite { value: sum, terms, basis: GBasis::ExponentialGrowth }
        } else if let Some(c) = constant {
            let s = self.size();
            let x = (-c * self.t).exp();
            let first = self.g_term(1);
            let rho = F::one() / (s * x);
            if rho < F::one() && !at_critical {
                let lead = log_f(self.alphabet_size, x.ln()).exp() / (s * x);
                GVerdict::Finite { value: lead * rho / (F::one() - rho), terms: 0, basis: GBasis::ClosedForm }
            } else {
                GVerdict::Diverges { partial_sum: first, terms: 1, basis: GBasis::ClosedForm }
            }
        } else {
            self.g_numeric(horizon, &trace, tol)
        };

        let g_finite = matches!(g, GVerdict::Finite { .. });
        let (degenerate, fallback) = match g {
            GVerdict::Undecided { .. } if inf_m_positive => {
                let est = self.extinct_prob_limit(tol);
                (est.value >= F::one() - tol, Some(est))
            }
            _ => (!(inf_m_positive && g_finite), None),
        };
        Ok(DegeneracyReport {
            t: self.t,
            critical_time: t0,
            inf_m_positive,
            inf_m_basis,
            g,
            degenerate,
            fallback,
            horizon,
            tol,
        })
    }

    /// Partial sums over the horizon. Divergence is certified only when the
    /// terms overflow, or when the sum passes `1/tol` while no term in the
    /// second half of the horizon falls below the smallest term of the first.
    fn g_numeric(&self, horizon: usize, trace: &[F], tol: F) -> GVerdict<F> {
        let terms: Vec<F> = (1..=horizon).map(|k| self.log_term(k, trace[k]).exp()).collect();
        let sum = terms.iter().fold(F::zero(), |a, &b| a + b);
        if !sum.is_finite() {
            return GVerdict::Diverges { partial_sum: sum, terms: horizon, basis: GBasis::Overflow };
        }
        let half = horizon / 2;
        let early = terms[..half].iter().copied().fold(F::infinity(), F::min);
        let late = terms[half..].iter().copied().fold(F::infinity(), F::min);
        let threshold = tol.recip();
        if sum > threshold && late >= early && early > F::zero() {
            return GVerdict::Diverges { partial_sum: sum, terms: horizon, basis: GBasis::NonVanishingTerms };
        }
        GVerdict::Undecided { partial_sum: sum, terms: horizon, bound: threshold }
    }
}

/// `ln f(x)` for `f(x) = (1-x)^S + S x - 1`, given `ln x`. For small `S x` the
/// leading terms cancel, so `f(x) = x^2 Σ_{k≥2} C(S,k) (-x)^{k-2}` is used.
fn log_f<F: Real>(size: u32, log_x: F) -> F {
    let s = F::from_count(size as usize);
    let x = log_x.exp();
    if s * x < F::lit(0.1) {
        let mut coeff = s * (s - F::one()) / F::lit(2.0);
        let mut acc = F::zero();
        let mut power = F::one();
        for k in 2..=size as usize {
            if k > 2 {
                coeff = coeff * F::from_count(size as usize + 1 - k) / F::from_count(k);
            }
            let term = coeff * power;
            acc = if k % 2 == 0 { acc + term } else { acc - term };
            if term < acc.abs() * F::epsilon() {
                break;
            }
            power = power * x;
        }
        F::lit(2.0) * log_x + acc.ln()
    } else {
        ((s * (-x).ln_1p()).exp_m1() + s * x).ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtinctionEstimate<F> {
    pub value: F,
    /// Generation at which the reported value was computed.
    pub n: usize,
    pub converged: bool,
    pub tol: F,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InfMBasis {
    /// From the Cesàro limsup and the critical time.
    CesaroLimsup,
    /// Constant rates at the critical time, where `m_n = 1`.
    ExactConstant,
    /// Minimum of `m_n` over the horizon, checked against `|S|^{-horizon}`.
    NumericHorizon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GBasis {
    ExponentialGrowth,
    ClosedForm,
    Overflow,
    NonVanishingTerms,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GVerdict<F> {
    Finite { value: F, terms: usize, basis: GBasis },
    Diverges { partial_sum: F, terms: usize, basis: GBasis },
    Undecided { partial_sum: F, terms: usize, bound: F },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DegeneracyReport<F> {
    pub t: F,
    pub critical_time: Option<F>,
    pub inf_m_positive: bool,
    pub inf_m_basis: InfMBasis,
    pub g: GVerdict<F>,
    pub degenerate: bool,
    /// Extinction limit used when the `g` verdict is undecided.
    pub fallback: Option<ExtinctionEstimate<F>>,
    pub horizon: usize,
    pub tol: F,
}
