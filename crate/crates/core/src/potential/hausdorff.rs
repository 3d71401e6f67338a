//! Greedy covers and the resulting upper estimate of Hausdorff content.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::sum::Accumulator;
use crate::potential::kernel::MetricKind;
use crate::potential::measure::PointSet;

/// A finite cover by metric balls, all of radius at most `eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverSet {
    pub kind: MetricKind,
    pub eps: f64,
    pub dim: usize,
    /// Ball centres, flattened.
    pub centers: Vec<f64>,
    pub radii: Vec<f64>,
}

impl CoverSet {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    /// True when every radius is within the mesh and every target point lies
    /// in some ball.
    pub fn covers(&self, target: &PointSet) -> bool {
        if self.radii.iter().any(|&r| r > self.eps) {
            return false;
        }
        target.iter().all(|p| {
            (0..self.len()).any(|i| self.kind.dist_unchecked(p, self.center(i)) <= self.radii[i])
        })
    }

    /// `sum (2 r_i)^beta` with `0^0 = 1`; `+inf` for `beta < 0`.
    pub fn content(&self, beta: f64) -> f64 {
        if beta < 0.0 {
            return f64::INFINITY;
        }
        let mut acc = Accumulator::new();
        for &r in &self.radii {
            acc.add(if beta == 0.0 { 1.0 } else { (2.0 * r).powf(beta) });
        }
        acc.value()
    }
}

/// Greedy cover of the target: repeatedly place a radius-`eps` ball on the
/// target point whose ball captures the most uncovered points (lowest index
/// on ties), then shrink it to the farthest point it was assigned.
pub fn greedy_cover(target: &PointSet, kind: MetricKind, eps: f64) -> Result<CoverSet> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("cover mesh must be positive, got {eps}")));
    }
    kind.check_dim(target.dim())?;
    let n = target.len();
    // Neighbourhood lists within eps; sorted coordinate 0 prunes the search.
    let mut by_x: Vec<usize> = (0..n).collect();
    by_x.sort_by(|&a, &b| target.point(a)[0].total_cmp(&target.point(b)[0]).then(a.cmp(&b)));
    let xs: Vec<f64> = by_x.iter().map(|&i| target.point(i)[0]).collect();
    // Both metrics bound the coordinate-0 separation by a monotone function of the distance.
    let reach0 = match kind {
        MetricKind::Euclidean => eps,
        MetricKind::Parabolic => eps * eps,
    };
    let mut neigh: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, &i) in by_x.iter().enumerate() {
        let lo = xs.partition_point(|&x| x < xs[pos] - reach0);
        let hi = xs.partition_point(|&x| x <= xs[pos] + reach0);
        let pi = target.point(i);
        for &j in &by_x[lo..hi] {
            if kind.dist_unchecked(pi, target.point(j)) <= eps {
                neigh[i].push(j);
            }
        }
        neigh[i].sort_unstable();
    }
    let mut covered = vec![false; n];
    let mut count: Vec<usize> = neigh.iter().map(|v| v.len()).collect();
    let mut remaining = n;
    let mut centers = Vec::new();
    let mut radii = Vec::new();
    while remaining > 0 {
        let mut best = 0;
        for i in 1..n {
            if count[i] > count[best] {
                best = i;
            }
        }
        let c = target.point(best);
        let mut r: f64 = 0.0;
        let newly: Vec<usize> = neigh[best].iter().copied().filter(|&j| !covered[j]).collect();
        for &j in &newly {
            covered[j] = true;
            remaining -= 1;
            r = r.max(kind.dist_unchecked(c, target.point(j)));
        }
        for &j in &newly {
            for &m in &neigh[j] {
                count[m] -= 1;
            }
        }
        centers.extend_from_slice(c);
        radii.push(r);
    }
    Ok(CoverSet {
        kind,
        eps,
        dim: target.dim(),
        centers,
        radii,
    })
}

/// Upper estimate of the `beta`-dimensional Hausdorff content at mesh `eps`.
pub fn hausdorff_upper(target: &PointSet, beta: f64, kind: MetricKind, eps: f64) -> Result<f64> {
    if beta < 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(greedy_cover(target, kind, eps)?.content(beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_beta_is_infinite() {
        let pts = PointSet::interval_grid(0.0, 1.0, 11);
        assert_eq!(hausdorff_upper(&pts, -1.0, MetricKind::Euclidean, 0.1).unwrap(), f64::INFINITY);
    }

    #[test]
    fn unit_interval_length() {
        let pts = PointSet::interval_grid(0.0, 1.0, 1025);
        let h = hausdorff_upper(&pts, 1.0, MetricKind::Euclidean, 0.125).unwrap();
        assert!((1.0..=1.5).contains(&h), "{h}");
        let cover = greedy_cover(&pts, MetricKind::Euclidean, 0.125).unwrap();
        assert!(cover.covers(&pts));
    }

    #[test]
    fn counts_isolated_points() {
        let pts = PointSet::new(1, vec![0.0, 0.3, 0.7, 0.75]).unwrap();
        assert_eq!(hausdorff_upper(&pts, 0.0, MetricKind::Euclidean, 0.01).unwrap(), 4.0);
    }

    #[test]
    fn parabolic_cover() {
        let mut coords = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                coords.extend([i as f64 / 400.0, j as f64 / 20.0]);
            }
        }
        let pts = PointSet::new(2, coords).unwrap();
        let cover = greedy_cover(&pts, MetricKind::Parabolic, 0.2).unwrap();
        assert!(cover.covers(&pts));
    }
}
