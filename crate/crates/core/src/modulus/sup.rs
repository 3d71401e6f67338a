//! Sup-increments over parabolic balls and their moment scaling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::sampler::SamplePath;
use crate::field::spec::{GridSpec, StPoint};
use crate::numeric::stats::mean_se;

const TOL: f64 = 1e-12;

/// Grid indices of `p`, which must be a grid node.
pub fn locate(path: &SamplePath, p: StPoint) -> Result<(usize, usize)> {
    let find = |v: &[f64], x: f64, what: &str| {
        let i = v.partition_point(|&a| a < x - TOL * x.abs().max(1.0));
        if i < v.len() && (v[i] - x).abs() <= TOL * x.abs().max(1.0) {
            Ok(i)
        } else {
            Err(Error::domain(format!("{what} {x} is not a grid node")))
        }
    };
    Ok((find(path.grid.times(), p.t, "time")?, find(path.grid.sites(), p.x, "site")?))
}

/// `max ||u(q) - u(center)||` over grid nodes `q` with
/// `|t - s|^{1/2} + |x - y| <= eps^2`.
pub fn sup_increment(path: &SamplePath, center: StPoint, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {eps}")));
    }
    let (ci, cj) = locate(path, center)?;
    let (times, sites) = (path.grid.times(), path.grid.sites());
    let r = eps * eps;
    let slack = 1.0 + 1e-12;
    let t_lo = times.partition_point(|&t| t < center.t - r * r * slack);
    let t_hi = times.partition_point(|&t| t <= center.t + r * r * slack);
    let x_lo = sites.partition_point(|&x| x < center.x - r * slack);
    let x_hi = sites.partition_point(|&x| x <= center.x + r * slack);
    let d = path.d;
    let mut c = vec![0.0; d];
    let mut q = vec![0.0; d];
    path.node(ci, cj, &mut c);
    let mut best = 0.0f64;
    let mut others = 0usize;
    for ti in t_lo..t_hi {
        for xi in x_lo..x_hi {
            if (ti, xi) == (ci, cj) || center.delta(path.grid.point(ti, xi)) > r * slack {
                continue;
            }
            others += 1;
            path.node(ti, xi, &mut q);
            let s: f64 = c.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.max(s.sqrt());
        }
    }
    if others == 0 {
        return Err(Error::refused(
            format!("the ball of radius {r:e} about ({}, {}) holds only its centre", center.t, center.x),
            "refine the grid or enlarge eps",
        ));
    }
    Ok(best)
}

/// Grid of `(2 n + 1)^2` nodes spanning the parabolic ball of radius
/// `eps^2` about `center`: times `t +- eps^4`, sites `x +- eps^2`.
pub fn ball_grid(center: StPoint, eps: f64, n: usize) -> Result<GridSpec> {
    let r = eps * eps;
    let lin = |c: f64, h: f64| (0..=2 * n).map(|i| c + h * (i as f64 - n as f64) / n as f64).collect::<Vec<_>>();
    GridSpec::custom(lin(center.t, r * r), lin(center.x, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRatio {
    pub eps: f64,
    /// `E[sup^p]^{1/p} / eps`.
    pub ratio: f64,
    pub se: f64,
    pub paths: usize,
}

pub fn moment_ratio(ensemble: &[SamplePath], center: StPoint, eps: f64, p: f64) -> Result<MomentRatio> {
    if ensemble.len() < 2 {
        return Err(Error::domain("need at least two paths"));
    }
    let xs = ensemble
        .iter()
        .map(|path| Ok(sup_increment(path, center, eps)?.powf(p)))
        .collect::<Result<Vec<f64>>>()?;
    let (m, se) = mean_se(&xs);
    let ratio = m.powf(1.0 / p) / eps;
    Ok(MomentRatio {
        eps,
        ratio,
        // Delta method for m^{1/p}.
        se: if m > 0.0 { ratio * se / (p * m) } else { 0.0 },
        paths: xs.len(),
    })
}

/// Largest over smallest ratio.
pub fn band(ratios: &[MomentRatio]) -> f64 {
    let hi = ratios.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_in_x(eps: f64) -> (SamplePath, StPoint) {
        let r = eps * eps;
        let sites = vec![0.5 - 2.0 * r, 0.5 - r, 0.5, 0.5 + r, 0.5 + 2.0 * r];
        let grid = GridSpec::custom(vec![0.5], sites.clone()).unwrap();
        (SamplePath::new(1, grid, 0, 0, sites).unwrap(), StPoint::new(0.5, 0.5))
    }

    #[test]
    fn linear_path_reaches_space_radius() {
        let eps = 0.125;
        let (p, c) = linear_in_x(eps);
        assert!((sup_increment(&p, c, eps).unwrap() - eps * eps).abs() < 1e-15);
    }

    #[test]
    fn lone_centre_is_refused() {
        let (p, c) = linear_in_x(0.125);
        assert!(matches!(sup_increment(&p, c, 0.01), Err(Error::Refused { .. })));
        assert!(sup_increment(&p, StPoint::new(0.5, 0.3), 0.1).is_err());
    }

    #[test]
    fn constant_neighbour_gives_zero() {
        let grid = GridSpec::custom(vec![0.5], vec![0.5, 0.51]).unwrap();
        let p = SamplePath::new(2, grid, 0, 0, vec![1.0, 1.0, -2.0, -2.0]).unwrap();
        assert_eq!(sup_increment(&p, StPoint::new(0.5, 0.5), 0.2).unwrap(), 0.0);
    }
}
