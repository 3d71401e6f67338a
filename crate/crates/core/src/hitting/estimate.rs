//! Monte Carlo hitting probabilities and exponent fits.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::patch::PatchSampler;
use crate::field::sampler::SamplePath;
use crate::field::spec::FieldSpec;
use crate::hitting::boxes::DyadicBox;
use crate::numeric::stats::{weighted_line_fit, wilson, Z95};
use crate::potential::measure::PointSet;

/// The set to be hit, fattened by `eps`.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Ball { center: Vec<f64>, eps: f64 },
    /// `{y : dist(y, A) <= eps}` for a finite set `A`.
    Cloud { points: PointSet, eps: f64 },
}

impl Target {
    pub fn ball(center: Vec<f64>, eps: f64) -> Self {
        Target::Ball { center, eps }
    }

    pub fn eps(&self) -> f64 {
        match self {
            Target::Ball { eps, .. } | Target::Cloud { eps, .. } => *eps,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Target::Ball { center, .. } => center.len(),
            Target::Cloud { points, .. } => points.dim(),
        }
    }

    /// Target with the same shape and another radius.
    pub fn with_eps(&self, eps: f64) -> Self {
        match self {
            Target::Ball { center, .. } => Target::Ball {
                center: center.clone(),
                eps,
            },
            Target::Cloud { points, .. } => Target::Cloud {
                points: points.clone(),
                eps,
            },
        }
    }

    #[inline]
    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            Target::Ball { center, eps } => dist2(u, center) <= eps * eps,
            Target::Cloud { points, eps } => points.iter().any(|a| dist2(u, a) <= eps * eps),
        }
    }
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Closed space-time rectangle of grid nodes considered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub t: (f64, f64),
    pub x: (f64, f64),
    pub label: String,
}

impl Region {
    pub fn full(t: (f64, f64), x: (f64, f64)) -> Self {
        Self {
            t,
            x,
            label: format!("full[{},{}]x[{},{}]", t.0, t.1, x.0, x.1),
        }
    }

    pub fn time_section(t: f64, x: (f64, f64)) -> Self {
        Self {
            t: (t, t),
            x,
            label: format!("t={t}"),
        }
    }

    pub fn space_section(x: f64, t: (f64, f64)) -> Self {
        Self {
            t,
            x: (x, x),
            label: format!("x={x}"),
        }
    }

    pub fn node(t: f64, x: f64) -> Self {
        Self {
            t: (t, t),
            x: (x, x),
            label: format!("node({t},{x})"),
        }
    }

    /// The closed dyadic box.
    pub fn dyadic(b: &DyadicBox) -> Self {
        Self {
            t: b.time_interval(),
            x: b.space_interval(),
            label: format!("box(n={},k={},l={})", b.n, b.k, b.l),
        }
    }

    fn index_range(nodes: &[f64], lo: f64, hi: f64) -> (usize, usize) {
        let tol = 1e-12;
        let a = nodes.partition_point(|&v| v < lo - tol);
        let b = nodes.partition_point(|&v| v <= hi + tol);
        (a, b)
    }

    /// Grid index ranges `(t_range, x_range)` inside the region.
    pub fn grid_ranges(&self, times: &[f64], sites: &[f64]) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let (a, b) = Self::index_range(times, self.t.0, self.t.1);
        let (c, e) = Self::index_range(sites, self.x.0, self.x.1);
        (a..b, c..e)
    }
}

/// Resolution floor: `eps` must be at least `factor` times the predicted
/// sup-increment over one grid cell, `a1 * |sigma| * sqrt(d * Delta_cell)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloorPolicy {
    pub factor: f64,
    /// Square root of the upper envelope of `E[(v(p) - v(q))^2] / Delta`.
    pub a1: f64,
}

impl Default for FloorPolicy {
    fn default() -> Self {
        Self { factor: 1.0, a1: 0.86 }
    }
}

impl FloorPolicy {
    pub fn unchecked() -> Self {
        Self { factor: 0.0, a1: 0.86 }
    }

    /// Predicted sup-increment of `u` across a cell of sides `dt x dx`.
    pub fn cell_increment(&self, spec: &FieldSpec, dt: f64, dx: f64) -> f64 {
        let norm = spec.sigma().clone().svd(false, false).singular_values.max();
        self.a1 * norm * (spec.d() as f64 * (dt.sqrt() + dx)).sqrt()
    }

    pub fn check(&self, spec: &FieldSpec, dt: f64, dx: f64, eps: f64) -> Result<f64> {
        let gap = self.cell_increment(spec, dt, dx);
        if eps < self.factor * gap {
            // Halving both spacings shrinks the gap by at least 2^{-1/2}.
            let shrink = (self.factor * gap / eps).powi(4).ceil().max(2.0);
            return Err(Error::refused(
                format!("eps = {eps} is below the resolution floor {}", self.factor * gap),
                format!("refine the grid: time spacing by {shrink}x and site spacing by {}x", shrink.sqrt().ceil()),
            ));
        }
        Ok(gap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Estimator {
    /// Fraction of hitting replicas, Wilson interval.
    Crude,
    /// Mean of per-replica conditional probabilities, normal interval.
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitEstimate {
    pub eps: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_trials: u64,
    pub n_hits: u64,
    /// Standard error relative to `p_hat` (infinite when `p_hat = 0`).
    pub rel_se: f64,
    pub region: String,
    /// Predicted sup-increment over a grid cell: the path may enter the
    /// target between nodes by up to this much.
    pub grid_gap: f64,
    pub estimator: Estimator,
}

impl HitEstimate {
    pub fn from_counts(hits: u64, trials: u64, eps: f64, region: &str, grid_gap: f64) -> Self {
        let p = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        let (lo, hi) = wilson(hits, trials, Z95);
        let rel_se = if hits == 0 {
            f64::INFINITY
        } else {
            ((1.0 - p) / hits as f64).sqrt()
        };
        Self {
            eps,
            p_hat: p,
            ci_low: lo,
            ci_high: hi,
            n_trials: trials,
            n_hits: hits,
            rel_se,
            region: region.to_string(),
            grid_gap,
            estimator: Estimator::Crude,
        }
    }
}

fn path_hits(path: &SamplePath, target: &Target, tr: &std::ops::Range<usize>, xr: &std::ops::Range<usize>, buf: &mut [f64]) -> bool {
    for ti in tr.clone() {
        for xi in xr.clone() {
            path.node(ti, xi, buf);
            if target.contains(buf) {
                return true;
            }
        }
    }
    false
}

fn max_spacing(v: &[f64], r: &std::ops::Range<usize>) -> f64 {
    if r.len() < 2 {
        return 0.0;
    }
    v[r.clone()].windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// Fraction of paths whose values on the region's grid nodes enter the target.
pub fn hit_probability(
    ensemble: &[SamplePath],
    target: &Target,
    region: &Region,
    spec: &FieldSpec,
    floor: &FloorPolicy,
) -> Result<HitEstimate> {
    let first = ensemble.first().ok_or_else(|| Error::domain("empty ensemble"))?;
    if target.dim() != first.d {
        return Err(Error::Mismatch(format!("target in R^{} for a field in R^{}", target.dim(), first.d)));
    }
    let (tr, xr) = region.grid_ranges(first.grid.times(), first.grid.sites());
    if tr.is_empty() || xr.is_empty() {
        return Err(Error::domain(format!("region {} contains no grid nodes", region.label)));
    }
    let gap = floor.check(
        spec,
        max_spacing(first.grid.times(), &tr),
        max_spacing(first.grid.sites(), &xr),
        target.eps(),
    )?;
    let mut buf = vec![0.0; first.d];
    let mut hits = 0u64;
    // Counted in path order so that the result never depends on scheduling.
    for p in ensemble {
        if p.grid != first.grid {
            return Err(Error::Mismatch("ensemble paths live on different grids".into()));
        }
        if path_hits(p, target, &tr, &xr, &mut buf) {
            hits += 1;
        }
    }
    Ok(HitEstimate::from_counts(hits, ensemble.len() as u64, target.eps(), &region.label, gap))
}

/// Crude estimate from exact joint draws at the sampler's nodes.
/// `cell = (dt, dx)` is the node spacing used for the resolution floor.
pub fn patch_hit_probability(
    sampler: &PatchSampler,
    spec: &FieldSpec,
    seed: u64,
    replicas: u64,
    target: &Target,
    cell: (f64, f64),
    floor: &FloorPolicy,
    label: &str,
) -> Result<HitEstimate> {
    let gap = floor.check(spec, cell.0, cell.1, target.eps())?;
    let hits = patch_hit_counts(sampler, spec, seed, replicas, std::slice::from_ref(target))[0];
    Ok(HitEstimate::from_counts(hits, replicas, target.eps(), label, gap))
}

/// Hit counts for several targets on the same draws.
pub fn patch_hit_counts(sampler: &PatchSampler, spec: &FieldSpec, seed: u64, replicas: u64, targets: &[Target]) -> Vec<u64> {
    use rayon::prelude::*;
    let d = spec.d();
    let n = sampler.len();
    let chunk = 4096u64;
    let chunks: Vec<u64> = (0..replicas.div_ceil(chunk)).collect();
    let partial: Vec<Vec<u64>> = chunks
        .par_iter()
        .map(|&c| {
            let mut counts = vec![0u64; targets.len()];
            let mut buf = vec![0.0; n * d];
            for r in c * chunk..((c + 1) * chunk).min(replicas) {
                sampler.sample(spec, seed, r, &mut buf);
                for (cnt, t) in counts.iter_mut().zip(targets) {
                    if buf.chunks_exact(d).any(|u| t.contains(u)) {
                        *cnt += 1;
                    }
                }
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; targets.len()];
    for p in partial {
        for (t, c) in total.iter_mut().zip(p) {
            *t += c;
        }
    }
    total
}

/// Weighted log-log fit of `p_hat` against `eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    pub used: Vec<f64>,
    /// Scales dropped for too few hits.
    pub dropped: Vec<f64>,
}

/// Minimum hits (or equivalent precision) for a scale to enter a fit.
pub const MIN_HITS: u64 = 10;

pub fn exponent_fit(estimates: &[(f64, HitEstimate)]) -> Result<ExponentFit> {
    let max_rel = 1.0 / (MIN_HITS as f64).sqrt() + 1e-12;
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    let (mut used, mut dropped) = (Vec::new(), Vec::new());
    for (eps, e) in estimates {
        let enough = match e.estimator {
            Estimator::Crude => e.n_hits >= MIN_HITS,
            Estimator::Conditional => e.rel_se <= max_rel,
        };
        if !enough || !(e.p_hat > 0.0) {
            dropped.push(*eps);
            continue;
        }
        // Standard deviation of log p_hat from the interval width.
        let sd = if e.ci_low > 0.0 && e.ci_high > e.ci_low {
            (e.ci_high.ln() - e.ci_low.ln()) / (2.0 * Z95)
        } else {
            e.rel_se
        };
        xs.push(eps.ln());
        ys.push(e.p_hat.ln());
        ws.push(if sd > 0.0 { 1.0 / (sd * sd) } else { 1.0 });
        used.push(*eps);
    }
    if xs.len() < 4 {
        return Err(Error::refused(
            format!("only {} scales have enough hits", xs.len()),
            "increase replicas or use larger radii",
        ));
    }
    // Exact data give zero weights spread; fall back to equal weights then.
    if ws.iter().any(|w| !w.is_finite()) {
        ws.iter_mut().for_each(|w| *w = 1.0);
    }
    let fit = weighted_line_fit(&xs, &ys, &ws)?;
    Ok(ExponentFit {
        slope: fit.slope,
        stderr: fit.slope_stderr,
        used,
        dropped,
    })
}

/// `eps,p_hat,ci_low,ci_high,n_trials,n_hits`.
pub fn write_estimates_csv<W: Write>(rows: &[HitEstimate], mut out: W) -> Result<()> {
    writeln!(out, "eps,p_hat,ci_low,ci_high,n_trials,n_hits")?;
    for r in rows {
        writeln!(
            out,
            "{:?},{:?},{:?},{:?},{},{}",
            r.eps, r.p_hat, r.ci_low, r.ci_high, r.n_trials, r.n_hits
        )?;
    }
    Ok(())
}

/// `label,slope,stderr,scales_used,scales_dropped`.
pub fn write_fit_csv<W: Write>(rows: &[(String, ExponentFit)], mut out: W) -> Result<()> {
    writeln!(out, "label,slope,stderr,scales_used,scales_dropped")?;
    for (label, f) in rows {
        writeln!(out, "{label},{:?},{:?},{},{}", f.slope, f.stderr, f.used.len(), f.dropped.len())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sampler::sample_ensemble;
    use crate::field::spec::GridSpec;

    fn synthetic(eps: f64, p: f64) -> (f64, HitEstimate) {
        let mut e = HitEstimate::from_counts(1000, 1000, eps, "synthetic", 0.0);
        e.p_hat = p;
        e.ci_low = p * 0.99;
        e.ci_high = p * 1.01;
        e.n_hits = 1000;
        (eps, e)
    }

    #[test]
    fn synthetic_power_laws() {
        let eps = [0.4, 0.3, 0.2, 0.1, 0.05];
        let quad: Vec<_> = eps.iter().map(|&e| synthetic(e, e * e)).collect();
        let f = exponent_fit(&quad).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && f.stderr < 1e-9);
        let flat: Vec<_> = eps.iter().map(|&e| synthetic(e, 0.3)).collect();
        assert!(exponent_fit(&flat).unwrap().slope.abs() < 1e-12);
        assert!(exponent_fit(&quad[..3]).is_err());
    }

    #[test]
    fn trivial_targets() {
        let spec = FieldSpec::identity(1, 1.0, 0.1).unwrap();
        let grid = GridSpec::uniform(0.1, 1.0, 5, 9).unwrap();
        let ens = sample_ensemble(&spec, &grid, 1, 20, 16).unwrap();
        let region = Region::full((0.1, 1.0), (0.0, 1.0));
        let floor = FloorPolicy::unchecked();
        let all = hit_probability(&ens, &Target::ball(vec![0.0], 1e6), &region, &spec, &floor).unwrap();
        assert_eq!(all.p_hat, 1.0);
        let none = hit_probability(&ens, &Target::ball(vec![1e6], 1.0), &region, &spec, &floor).unwrap();
        assert_eq!(none.p_hat, 0.0);
        let strict = FloorPolicy::default();
        assert!(matches!(
            hit_probability(&ens, &Target::ball(vec![0.0], 1e-3), &region, &spec, &strict),
            Err(Error::Refused { .. })
        ));
    }
}
