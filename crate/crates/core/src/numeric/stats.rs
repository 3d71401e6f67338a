//! Small statistics toolkit: intervals, regressions, two-sample KS.

use crate::error::{Error, Result};
use crate::numeric::sum::Accumulator;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes out of `trials`.
pub fn wilson(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits == trials { 1.0 } else { (center + half).min(1.0) };
    (lo.min(p), hi.max(p))
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().copied().collect::<Accumulator>().value() / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = xs
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<Accumulator>()
        .value()
        / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Unbiased sample variance with the standard error of that estimate
/// (fourth-moment formula).
pub fn variance_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mean, _) = mean_se(xs);
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    let se = ((m4 - m2 * m2) / n).max(0.0).sqrt();
    (var, se)
}

/// Sample covariance of paired data and the standard error of that estimate.
pub fn covariance_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let (mx, _) = mean_se(xs);
    let (my, _) = mean_se(ys);
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let (m, se) = mean_se(&prods);
    (m * n / (n - 1.0), se)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub points: usize,
}

/// Weighted least squares `y = a + b x`. Slope standard error from the
/// weighted residual scatter when `weights` are relative, which is the
/// usual case here.
pub fn weighted_line_fit(xs: &[f64], ys: &[f64], weights: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n || weights.len() != n {
        return Err(Error::domain("line fit needs at least two matching points"));
    }
    let sw: f64 = weights.iter().sum();
    let mx = xs.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(weights).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .zip(weights)
        .map(|((x, y), w)| w * (x - mx) * (y - my))
        .sum();
    if sxx <= 0.0 {
        return Err(Error::domain("line fit needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .zip(weights)
            .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (n as f64 - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        points: n,
    })
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    weighted_line_fit(xs, ys, &vec![1.0; xs.len()])
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of the two-sample KS statistic `d` (Stephens'
/// small-sample correction applied to the Kolmogorov distribution).
pub fn ks_p_value(d: f64, na: usize, nb: usize) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    kolmogorov_survival(lambda)
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Effective sample size of a series with the given lag-1 autocorrelation,
/// under an AR(1) approximation.
pub fn effective_sample_size(n: usize, lag1: f64) -> f64 {
    let r = lag1.clamp(-0.99, 0.99);
    (n as f64 * (1.0 - r) / (1.0 + r)).clamp(1.0, n as f64)
}

pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return 0.0;
    }
    let (m, _) = mean_se(xs);
    let num: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    let den: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_estimate() {
        let (lo, hi) = wilson(5, 100, Z95);
        assert!(lo < 0.05 && hi > 0.05);
        assert_eq!(wilson(0, 10, Z95).0, 0.0);
        assert_eq!(wilson(10, 10, Z95).1, 1.0);
    }

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = line_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && f.slope_stderr < 1e-12);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_eq!(ks_statistic(&a, &[10.0, 11.0]), 1.0);
        assert!(ks_p_value(1.0, 1000, 1000) < 1e-10);
        assert_eq!(ks_p_value(0.0, 10, 10), 1.0);
    }

    #[test]
    fn kolmogorov_median() {
        // Median of the Kolmogorov distribution is about 0.8276.
        assert!((kolmogorov_survival(0.8276) - 0.5).abs() < 1e-3);
    }
}
