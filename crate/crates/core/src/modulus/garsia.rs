//! The Garsia functional with `Psi = |.|^p`, `p(u) = u^{alpha + 6/p}` and
//! the pathwise modulus bound it implies.
//!
//! The measure is counting measure weighted by the area of each node's
//! cell, and ball masses are computed exactly on the grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::sampler::SamplePath;
use crate::field::spec::StPoint;
use crate::hitting::estimate::Region;

/// Accumulations beyond this are reported as divergent.
pub const DIVERGENCE: f64 = 1e300;

struct Nodes {
    points: Vec<StPoint>,
    weights: Vec<f64>,
    /// `values[i][node]`.
    values: Vec<Vec<f64>>,
}

fn cell_widths(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { v[i] - v[i - 1] } else { 0.0 };
            let right = if i + 1 < n { v[i + 1] - v[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

fn collect(path: &SamplePath, region: &Region) -> Result<Nodes> {
    let (tr, xr) = region.grid_ranges(path.grid.times(), path.grid.sites());
    if tr.len() < 2 || xr.len() < 2 {
        return Err(Error::domain(format!(
            "region {} needs at least two times and two sites",
            region.label
        )));
    }
    let wt = cell_widths(&path.grid.times()[tr.clone()]);
    let wx = cell_widths(&path.grid.sites()[xr.clone()]);
    let mut nodes = Nodes {
        points: Vec::new(),
        weights: Vec::new(),
        values: vec![Vec::new(); path.d],
    };
    for (a, ti) in tr.clone().enumerate() {
        for (b, xi) in xr.clone().enumerate() {
            nodes.points.push(path.grid.point(ti, xi));
            nodes.weights.push(wt[a] * wx[b]);
            for (i, v) in nodes.values.iter_mut().enumerate() {
                v.push(path.value(i, ti, xi));
            }
        }
    }
    Ok(nodes)
}

fn check_params(p: f64, alpha: f64) -> Result<()> {
    if !(p > 6.0) {
        return Err(Error::domain(format!("moment order must exceed 6, got {p}")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::domain(format!("alpha must be non-negative, got {alpha}")));
    }
    Ok(())
}

fn functional(nodes: &Nodes, values: &[f64], p: f64, alpha: f64) -> Result<f64> {
    let e = 6.0 + alpha * p;
    let n = nodes.points.len();
    let mut total = 0.0;
    for a in 0..n {
        let mut row = 0.0;
        for b in a + 1..n {
            let diff = (values[a] - values[b]).abs();
            if diff == 0.0 {
                continue;
            }
            let delta = nodes.points[a].delta(nodes.points[b]);
            row += nodes.weights[b] * (diff.powf(p) / delta.powf(e));
        }
        total += 2.0 * nodes.weights[a] * row;
        if !(total <= DIVERGENCE) {
            return Err(Error::numeric("Garsia functional diverges"));
        }
    }
    Ok(total)
}

/// `max_i sum_{a != b} |u_i(a) - u_i(b)|^p / Delta(a, b)^{6 + alpha p} w_a w_b`
/// over the grid nodes in `region`.
pub fn garsia_functional(path: &SamplePath, p: f64, alpha: f64, region: &Region) -> Result<f64> {
    check_params(p, alpha)?;
    let nodes = collect(path, region)?;
    let mut worst = 0.0f64;
    for v in &nodes.values {
        worst = worst.max(functional(&nodes, v, p, alpha)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GarsiaCheck {
    pub eps: f64,
    /// Largest component increment over node pairs with `Delta <= eps`.
    pub increment: f64,
    /// `8 sup_x int_0^{2 eps} (C / mu(B(x, u/2))^2)^{1/p} p(du)` for the
    /// same component.
    pub bound: f64,
    /// Largest increment-to-bound ratio over components.
    pub worst_ratio: f64,
}

impl GarsiaCheck {
    pub fn holds(&self) -> bool {
        self.worst_ratio <= 1.0
    }
}

/// The pathwise modulus bound at metric radius `eps`, checked per component.
pub fn garsia_bound(path: &SamplePath, p: f64, alpha: f64, region: &Region, eps: f64) -> Result<GarsiaCheck> {
    check_params(p, alpha)?;
    if !(eps > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {eps}")));
    }
    let nodes = collect(path, region)?;
    let n = nodes.points.len();
    let beta = alpha + 6.0 / p;
    // sup_x of the integral without the C^{1/p} factor, shared by components.
    let mut sup_integral = 0.0f64;
    let mut dist: Vec<(f64, f64)> = Vec::with_capacity(n);
    for a in 0..n {
        dist.clear();
        dist.extend((0..n).map(|b| (nodes.points[a].delta(nodes.points[b]), nodes.weights[b])));
        dist.sort_by(|x, y| x.0.total_cmp(&y.0));
        // On (2 r_k, 2 r_{k+1}] the open ball B(x, u/2) holds the first k+1 nodes.
        let mut mass = 0.0;
        let mut integral = 0.0;
        let mut k = 0;
        while k < n {
            let r = dist[k].0;
            while k < n && dist[k].0 == r {
                mass += dist[k].1;
                k += 1;
            }
            let lo = 2.0 * r;
            if lo >= 2.0 * eps {
                break;
            }
            let hi = if k < n { (2.0 * dist[k].0).min(2.0 * eps) } else { 2.0 * eps };
            integral += mass.powf(-2.0 / p) * (hi.powf(beta) - lo.powf(beta));
        }
        sup_integral = sup_integral.max(integral);
    }
    let mut out = GarsiaCheck {
        eps,
        increment: 0.0,
        bound: f64::INFINITY,
        worst_ratio: 0.0,
    };
    for v in &nodes.values {
        let c = functional(&nodes, v, p, alpha)?;
        let bound = 8.0 * c.powf(1.0 / p) * sup_integral;
        let mut inc = 0.0f64;
        for a in 0..n {
            for b in a + 1..n {
                if nodes.points[a].delta(nodes.points[b]) <= eps {
                    inc = inc.max((v[a] - v[b]).abs());
                }
            }
        }
        let ratio = if inc == 0.0 { 0.0 } else { inc / bound };
        if ratio >= out.worst_ratio {
            out = GarsiaCheck {
                eps,
                increment: inc,
                bound,
                worst_ratio: ratio,
            };
        }
    }
    Ok(out)
}

/// The same realization on every `st`-th time and `sx`-th site.
pub fn coarsen(path: &SamplePath, st: usize, sx: usize) -> Result<SamplePath> {
    if st == 0 || sx == 0 {
        return Err(Error::domain("strides must be positive"));
    }
    let ti: Vec<usize> = (0..path.nt()).step_by(st).collect();
    let xi: Vec<usize> = (0..path.nx()).step_by(sx).collect();
    let times = ti.iter().map(|&i| path.grid.times()[i]).collect();
    let sites = xi.iter().map(|&j| path.grid.sites()[j]).collect();
    let grid = crate::field::spec::GridSpec::custom(times, sites)?;
    let mut values = Vec::with_capacity(path.d * ti.len() * xi.len());
    for i in 0..path.d {
        for &a in &ti {
            for &b in &xi {
                values.push(path.value(i, a, b));
            }
        }
    }
    SamplePath::new(path.d, grid, path.seed, path.k_max, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::spec::GridSpec;

    #[test]
    fn constant_path_has_zero_functional() {
        let grid = GridSpec::uniform(0.5, 1.0, 5, 5).unwrap();
        let p = SamplePath::new(1, grid, 0, 0, vec![0.7; 25]).unwrap();
        let region = Region::full((0.0, 2.0), (0.0, 1.0));
        assert_eq!(garsia_functional(&p, 8.0, 0.1, &region).unwrap(), 0.0);
        assert!(garsia_functional(&p, 6.0, 0.1, &region).is_err());
    }

    #[test]
    fn bound_holds_on_a_rough_function() {
        let grid = GridSpec::uniform(0.5, 1.0, 9, 9).unwrap();
        let values: Vec<f64> = (0..81).map(|k| ((k * 37 % 11) as f64 - 5.0) * 0.1).collect();
        let p = SamplePath::new(1, grid, 0, 0, values).unwrap();
        let region = Region::full((0.0, 2.0), (0.0, 1.0));
        for eps in [0.05, 0.2, 0.6, 1.5] {
            let g = garsia_bound(&p, 8.0, 0.1, &region, eps).unwrap();
            assert!(g.holds(), "{g:?}");
        }
    }
}
