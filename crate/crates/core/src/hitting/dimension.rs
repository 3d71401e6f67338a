//! Box-counting dimension.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::stats::line_fit;
use crate::potential::kernel::MetricKind;
use crate::potential::measure::PointSet;

pub const MIN_POINTS: usize = 100;
pub const MIN_LEVELS: usize = 4;
/// A finest level adding fewer new boxes than this counts as saturated.
pub const SATURATION: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDimension {
    pub dim: f64,
    pub stderr: f64,
    /// `(level, occupied boxes)` for every requested level.
    pub counts: Vec<(u32, u64)>,
    /// Levels entering the fit.
    pub used: Vec<u32>,
}

/// Occupied half-open boxes at level `n`: side `2^{-n}` in every coordinate,
/// or `2^{-2n}` in time and `2^{-n}` in space for the parabolic metric.
pub fn box_count(points: &PointSet, kind: MetricKind, n: u32) -> Result<u64> {
    kind.check_dim(points.dim())?;
    let s = 2f64.powi(n as i32);
    let scale = |axis: usize| match kind {
        MetricKind::Parabolic if axis == 0 => s * s,
        _ => s,
    };
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    for p in points.iter() {
        seen.insert(p.iter().enumerate().map(|(a, &v)| (v * scale(a)).floor() as i64).collect());
    }
    Ok(seen.len() as u64)
}

/// Slope of `log N(2^{-n})` against `n log 2` over `levels`.
pub fn box_dimension(points: &PointSet, kind: MetricKind, levels: std::ops::RangeInclusive<u32>) -> Result<BoxDimension> {
    if points.len() < MIN_POINTS {
        return Err(Error::refused(
            format!("{} points, need at least {MIN_POINTS}", points.len()),
            "use a finer grid or a larger tolerance",
        ));
    }
    let levels: Vec<u32> = levels.collect();
    if levels.len() < MIN_LEVELS {
        return Err(Error::refused(
            format!("{} levels, need at least {MIN_LEVELS}", levels.len()),
            "widen the level range",
        ));
    }
    let counts = levels
        .iter()
        .map(|&n| Ok((n, box_count(points, kind, n)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut used = counts.len();
    for _ in 0..2 {
        if used > MIN_LEVELS && counts[used - 1].1 < counts[used - 2].1 + SATURATION {
            used -= 1;
        }
    }
    let xs: Vec<f64> = counts[..used].iter().map(|&(n, _)| n as f64 * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = counts[..used].iter().map(|&(_, c)| (c as f64).ln()).collect();
    let fit = line_fit(&xs, &ys)?;
    Ok(BoxDimension {
        dim: fit.slope,
        stderr: fit.slope_stderr,
        counts,
        used: levels[..used].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_has_dimension_one() {
        let pts = PointSet::interval_grid(0.0, 1.0, 4097);
        let b = box_dimension(&pts, MetricKind::Euclidean, 2..=10).unwrap();
        assert!((b.dim - 1.0).abs() < 0.05, "{}", b.dim);
    }

    #[test]
    fn counts_grow_with_level() {
        let pts = PointSet::interval_grid(0.0, 1.0, 300);
        let c: Vec<u64> = (0..12).map(|n| box_count(&pts, MetricKind::Euclidean, n).unwrap()).collect();
        assert!(c.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn refusals() {
        let few = PointSet::interval_grid(0.0, 1.0, 50);
        assert!(box_dimension(&few, MetricKind::Euclidean, 1..=8).is_err());
        let many = PointSet::interval_grid(0.0, 1.0, 500);
        assert!(box_dimension(&many, MetricKind::Euclidean, 1..=3).is_err());
    }
}
