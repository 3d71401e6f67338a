//! Conditional estimator for small hitting probabilities.
//!
//! Write `v = Y + R` with `Y` the mode-0 value at the first time of the
//! region. `Y ~ N(0, t_a I)` is independent of `R`, so
//! `P(hit | R) = P(Y in union_j B(z - R_j, eps))`, a Gaussian measure of a
//! union of balls. That measure is estimated per path by the Karp-Luby
//! coverage estimator and averaged over paths.

use std::collections::HashMap;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::field::sampler::stream_times;
use crate::field::spec::{FieldSpec, GridSpec};
use crate::hitting::estimate::{Estimator, FloorPolicy, HitEstimate, Region};
use crate::numeric::stats::{mean_se, Z95};
use crate::rng::{purpose, replica_seed, Stream};

/// Centres of equal balls with a hash on their first two coordinates.
struct BallIndex<'a> {
    d: usize,
    eps: f64,
    centers: &'a [f64],
    cells: HashMap<(i64, i64), Vec<u32>>,
}

impl<'a> BallIndex<'a> {
    fn new(centers: &'a [f64], d: usize, eps: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (j, c) in centers.chunks_exact(d).enumerate() {
            cells.entry(Self::key(c, eps)).or_default().push(j as u32);
        }
        Self { d, eps, centers, cells }
    }

    fn key(c: &[f64], eps: f64) -> (i64, i64) {
        let a = (c[0] / eps).floor() as i64;
        let b = if c.len() > 1 { (c[1] / eps).floor() as i64 } else { 0 };
        (a, b)
    }

    /// Number of balls containing `y`.
    fn count(&self, y: &[f64]) -> usize {
        let (a, b) = Self::key(y, self.eps);
        let rb = if self.d > 1 { 1 } else { 0 };
        let e2 = self.eps * self.eps;
        let mut n = 0;
        for da in -1..=1 {
            for db in -rb..=rb {
                if let Some(list) = self.cells.get(&(a + da, b + db)) {
                    for &j in list {
                        let c = &self.centers[j as usize * self.d..(j as usize + 1) * self.d];
                        let mut s = 0.0;
                        for (p, q) in c.iter().zip(y) {
                            s += (p - q) * (p - q);
                            if s > e2 {
                                break;
                            }
                        }
                        if s <= e2 {
                            n += 1;
                        }
                    }
                }
            }
        }
        n
    }
}

/// Volume of the Euclidean ball of radius `r` in `R^d`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    let h = d as f64 / 2.0;
    (h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0) + d as f64 * r.ln()).exp()
}

/// Unbiased estimate of `N(0, s^2 I)(union_j B(c_j, eps))` from `samples`
/// Karp-Luby draws. `centers` is flat, `d` values per ball.
pub fn union_gaussian_measure(centers: &[f64], d: usize, eps: f64, s: f64, samples: usize, stream: &mut Stream) -> f64 {
    let n = centers.len() / d;
    if n == 0 || samples == 0 {
        return 0.0;
    }
    let index = BallIndex::new(centers, d, eps);
    let log_norm = -(d as f64) * (s * (2.0 * std::f64::consts::PI).sqrt()).ln();
    let inv2s2 = 0.5 / (s * s);
    let mut y = vec![0.0; d];
    let mut acc = 0.0;
    for _ in 0..samples {
        let j = stream.below(n);
        let c = &centers[j * d..(j + 1) * d];
        // Uniform point in B(c, eps).
        stream.fill_normal(&mut y);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = eps * stream.uniform().powf(1.0 / d as f64) / norm;
        for (yi, ci) in y.iter_mut().zip(c) {
            *yi = ci + r * *yi;
        }
        let q = y.iter().map(|v| v * v).sum::<f64>();
        acc += (log_norm - q * inv2s2).exp() / index.count(&y) as f64;
    }
    (acc / samples as f64 * n as f64 * ball_volume(d, eps)).min(1.0)
}

/// Settings of [`conditional_hit_probability`].
#[derive(Debug, Clone)]
pub struct ConditionalOptions {
    pub replicas: u64,
    /// Karp-Luby draws per path and radius.
    pub samples: usize,
    pub k_max: usize,
    pub floor: FloorPolicy,
    /// Use, for each radius, the coarsest sub-grid (strides `m^2` in time,
    /// `m` in space) that still passes the resolution floor. The grid bias
    /// is then the same fraction of every radius.
    pub thin: bool,
}

impl Default for ConditionalOptions {
    fn default() -> Self {
        Self {
            replicas: 64,
            samples: 1024,
            k_max: 512,
            floor: FloorPolicy::default(),
            thin: true,
        }
    }
}

fn max_spacing(v: &[f64], r: &std::ops::Range<usize>) -> f64 {
    v[r.clone()].windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// `P(u(region) meets B(z, eps))` for each radius, from paths on `grid`
/// restricted to `region`. The first grid time is the split time, so the
/// grid should start where the region does.
pub fn conditional_hit_probability(
    spec: &FieldSpec,
    grid: &GridSpec,
    region: &Region,
    z: &[f64],
    radii: &[f64],
    seed: u64,
    opts: &ConditionalOptions,
) -> Result<Vec<HitEstimate>> {
    let d = spec.d();
    if z.len() != d {
        return Err(Error::Mismatch(format!("centre in R^{} for a field in R^{d}", z.len())));
    }
    if !spec.is_identity() {
        return Err(Error::domain("the conditional estimator needs an identity coupling"));
    }
    if opts.replicas < 2 {
        return Err(Error::domain("need at least two replicas"));
    }
    let (tr, xr) = region.grid_ranges(grid.times(), grid.sites());
    if tr.is_empty() || xr.is_empty() {
        return Err(Error::domain(format!("region {} contains no grid nodes", region.label)));
    }
    let (dt, dx) = (max_spacing(grid.times(), &tr), max_spacing(grid.sites(), &xr));
    let mut strides = Vec::with_capacity(radii.len());
    let mut gaps = Vec::with_capacity(radii.len());
    for &eps in radii {
        let mut m = 1usize;
        let mut gap = opts.floor.check(spec, dt, dx, eps)?;
        while opts.thin && m * m < tr.len().max(xr.len()) {
            let next = m + 1;
            match opts.floor.check(spec, (next * next) as f64 * dt, next as f64 * dx, eps) {
                Ok(g) => {
                    m = next;
                    gap = g;
                }
                Err(_) => break,
            }
        }
        strides.push(m);
        gaps.push(gap);
    }
    let mut distinct = strides.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let nx = grid.nx();
    let s = grid.times()[0].sqrt();
    let per_path: Vec<Vec<f64>> = (0..opts.replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let mut sets: Vec<Vec<f64>> = vec![Vec::new(); distinct.len()];
            stream_times(spec, grid, replica_seed(seed, r), opts.k_max, true, |ti, v| {
                if !tr.contains(&ti) {
                    return;
                }
                let a = ti - tr.start;
                for (set, &m) in sets.iter_mut().zip(&distinct) {
                    if a % (m * m) != 0 {
                        continue;
                    }
                    for xi in xr.clone().step_by(m) {
                        set.extend((0..d).map(|i| z[i] - v[i * nx + xi]));
                    }
                }
            })?;
            Ok(radii
                .iter()
                .zip(&strides)
                .enumerate()
                .map(|(e, (&eps, m))| {
                    let centers = &sets[distinct.binary_search(m).expect("stride listed")];
                    let mut st = Stream::new(seed, &[purpose::INNER, r, e as u64], 0);
                    union_gaussian_measure(centers, d, eps, s, opts.samples, &mut st)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(radii
        .iter()
        .enumerate()
        .map(|(e, &eps)| {
            let xs: Vec<f64> = per_path.iter().map(|p| p[e]).collect();
            summarize(&xs, eps, &region.label, gaps[e])
        })
        .collect())
}

/// Mean of per-path conditional probabilities with a normal interval.
pub fn summarize(xs: &[f64], eps: f64, region: &str, grid_gap: f64) -> HitEstimate {
    let (m, se) = mean_se(xs);
    HitEstimate {
        eps,
        p_hat: m,
        ci_low: (m - Z95 * se).max(0.0),
        ci_high: (m + Z95 * se).min(1.0),
        n_trials: xs.len() as u64,
        n_hits: xs.iter().filter(|&&x| x > 0.0).count() as u64,
        rel_se: if m > 0.0 { se / m } else { f64::INFINITY },
        region: region.to_string(),
        grid_gap,
        estimator: Estimator::Conditional,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ball_matches_quadrature() {
        // One ball at the origin in R^2: exact measure 1 - exp(-eps^2 / 2s^2).
        let mut st = Stream::new(1, &[9], 0);
        let (eps, s) = (0.3, 0.7);
        let m = union_gaussian_measure(&[0.0, 0.0], 2, eps, s, 20000, &mut st);
        let exact = 1.0 - (-eps * eps / (2.0 * s * s)).exp();
        assert!((m / exact - 1.0).abs() < 0.02, "{m} vs {exact}");
    }

    #[test]
    fn duplicate_balls_do_not_double_count() {
        let mut a = Stream::new(2, &[9], 0);
        let mut b = Stream::new(2, &[9], 0);
        let one = union_gaussian_measure(&[0.1, 0.2, 0.0], 3, 0.2, 1.0, 4000, &mut a);
        let three = union_gaussian_measure(&[0.1, 0.2, 0.0, 0.1, 0.2, 0.0, 0.1, 0.2, 0.0], 3, 0.2, 1.0, 4000, &mut b);
        assert!((one / three - 1.0).abs() < 0.05, "{one} vs {three}");
    }

    #[test]
    fn disjoint_balls_add() {
        let mut st = Stream::new(3, &[9], 0);
        let eps = 0.1;
        let m = union_gaussian_measure(&[0.0, 0.0, 1.0, 0.0], 2, eps, 1.0, 40000, &mut st);
        let phi = |q: f64| (-q / 2.0).exp() / (2.0 * std::f64::consts::PI);
        let approx = ball_volume(2, eps) * (phi(0.0) + phi(1.0));
        assert!((m / approx - 1.0).abs() < 0.03, "{m} vs {approx}");
    }

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(1, 0.5) - 1.0).abs() < 1e-14);
        assert!((ball_volume(2, 1.0) - std::f64::consts::PI).abs() < 1e-13);
        assert!((ball_volume(3, 1.0) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-13);
    }
}
