//! Hölder exponents from mean increments at octave lags.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::sampler::SamplePath;
use crate::numeric::stats::{effective_sample_size, lag1_autocorrelation, mean_se, weighted_line_fit};

pub const MIN_PATHS: usize = 1000;
pub const MIN_LAGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    Time,
    Space,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagMoment {
    /// Mean separation of the pairs in this octave.
    pub lag: f64,
    /// `E ||u(a) - u(b)||`.
    pub mean: f64,
    /// Standard error from per-path means.
    pub se: f64,
    pub pairs: usize,
    /// Effective number of pairs under an AR(1) model along the axis.
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderFit {
    pub axis: Axis,
    pub alpha: f64,
    pub stderr: f64,
    pub lags: Vec<LagMoment>,
}

/// Overlapping pairs `(j, j + 2^m)` along `axis` at every position of the
/// other axis; `log E||increment||` regressed on `log lag`.
pub fn holder_fit(ensemble: &[SamplePath], axis: Axis) -> Result<HolderFit> {
    if ensemble.len() < MIN_PATHS {
        return Err(Error::refused(
            format!("{} paths, need at least {MIN_PATHS}", ensemble.len()),
            "sample a larger ensemble",
        ));
    }
    let first = &ensemble[0];
    let (along, across) = match axis {
        Axis::Time => (first.grid.times(), first.nx()),
        Axis::Space => (first.grid.sites(), first.nt()),
    };
    let n = along.len();
    let d = first.d;
    let mut offsets = Vec::new();
    let mut o = 1;
    while o <= n / 4 {
        offsets.push(o);
        o *= 2;
    }
    let mut lags = Vec::new();
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    for &off in &offsets {
        let lag = (0..n - off).map(|j| along[j + off] - along[j]).sum::<f64>() / (n - off) as f64;
        let mut path_means = Vec::with_capacity(ensemble.len());
        let mut ess = 0.0;
        let mut pairs = 0;
        for path in ensemble {
            if path.grid != first.grid {
                return Err(Error::Mismatch("ensemble paths live on different grids".into()));
            }
            let mut series = Vec::with_capacity((n - off) * across);
            for c in 0..across {
                for j in 0..n - off {
                    let (p, q) = match axis {
                        Axis::Time => ((j, c), (j + off, c)),
                        Axis::Space => ((c, j), (c, j + off)),
                    };
                    path.node(p.0, p.1, &mut a);
                    path.node(q.0, q.1, &mut b);
                    series.push(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt());
                }
            }
            pairs += series.len();
            ess += effective_sample_size(series.len(), lag1_autocorrelation(&series));
            path_means.push(series.iter().sum::<f64>() / series.len() as f64);
        }
        let (mean, se) = mean_se(&path_means);
        if mean > 0.0 && se.is_finite() {
            lags.push(LagMoment {
                lag,
                mean,
                se,
                pairs,
                ess,
            });
        }
    }
    if lags.len() < MIN_LAGS {
        return Err(Error::refused(
            format!("{} usable lags, need at least {MIN_LAGS}", lags.len()),
            "use more grid points along the axis",
        ));
    }
    let xs: Vec<f64> = lags.iter().map(|l| l.lag.ln()).collect();
    let ys: Vec<f64> = lags.iter().map(|l| l.mean.ln()).collect();
    let ws: Vec<f64> = lags
        .iter()
        .map(|l| if l.se > 0.0 { (l.mean / l.se).powi(2) } else { 1.0 })
        .collect();
    let fit = weighted_line_fit(&xs, &ys, &ws)?;
    Ok(HolderFit {
        axis,
        alpha: fit.slope,
        stderr: fit.slope_stderr,
        lags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::spec::GridSpec;
    use crate::rng::Stream;

    #[test]
    fn brownian_columns_have_exponent_half() {
        // Each path is a Brownian motion in the time direction at one site.
        let n = 257;
        let times: Vec<f64> = (0..n).map(|i| 0.5 + i as f64 / 256.0).collect();
        let grid = GridSpec::custom(times, vec![0.5]).unwrap();
        let paths: Vec<SamplePath> = (0..1000u64)
            .map(|r| {
                let mut s = Stream::new(r, &[1], 0);
                let mut w = 0.0;
                let v: Vec<f64> = (0..n)
                    .map(|_| {
                        w += s.normal() / 16.0;
                        w
                    })
                    .collect();
                SamplePath::new(1, grid.clone(), r, 0, v).unwrap()
            })
            .collect();
        let f = holder_fit(&paths, Axis::Time).unwrap();
        assert!((f.alpha - 0.5).abs() < 0.02, "{f:?}");
        assert!(holder_fit(&paths[..10], Axis::Time).is_err());
    }
}
