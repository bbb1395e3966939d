//! Sample summaries used by Monte Carlo aggregates.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub std_error: f64,
    /// Standard error of the sample variance.
    pub variance_se: f64,
}

impl Summary {
    pub fn of<I: IntoIterator<Item = f64>>(values: I) -> Summary {
        let xs: Vec<f64> = values.into_iter().collect();
        let n = xs.len();
        if n == 0 {
            return Summary { n, mean: f64::NAN, variance: f64::NAN, std_error: f64::NAN, variance_se: f64::NAN };
        }
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (m2, m4) = xs.iter().fold((0.0, 0.0), |(a, b), x| {
            let d = (x - mean) * (x - mean);
            (a + d, b + d * d)
        });
        let variance = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
        let pop = m2 / nf;
        let variance_se = ((m4 / nf - pop * pop).max(0.0) / nf).sqrt();
        Summary { n, mean, variance, std_error: (variance / nf).sqrt(), variance_se }
    }

    /// Whether the mean is within `k` standard errors of `target`.
    pub fn mean_within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + 1e-12 * target.abs().max(1.0)
    }
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Coefficient of determination of `predicted` as a model for `observed`.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> f64 {
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = observed.iter().zip(predicted).map(|(y, p)| (y - p) * (y - p)).sum();
    1.0 - ss_res / ss_tot
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_basics() {
        let s = Summary::of([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-12);
        assert!((s.std_error - (5.0 / 12.0f64).sqrt()).abs() < 1e-12);
        assert!(Summary::of(std::iter::empty()).mean.is_nan());
        assert_eq!(Summary::of([7.0]).variance, 0.0);
    }

    #[test]
    fn fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (a, b) = linear_fit(&x, &y);
        assert!((a - 2.0).abs() < 1e-12 && (b + 1.0).abs() < 1e-12);
        assert!((r_squared(&y, &y) - 1.0).abs() < 1e-12);
    }
}
