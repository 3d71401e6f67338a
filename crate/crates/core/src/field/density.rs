//! Gaussian one- and two-point densities of `u` and the envelope they are
//! compared against.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::covariance::{pair_stats, CovarianceSource};
use crate::field::spec::{FieldSpec, StPoint};

fn to_v(spec: &FieldSpec, z: &[f64]) -> Result<Vec<f64>> {
    let d = spec.d();
    if z.len() != d {
        return Err(Error::Mismatch(format!("point of length {} for d = {d}", z.len())));
    }
    let inv = spec.sigma_inv();
    Ok((0..d).map(|i| (0..d).map(|j| inv[(i, j)] * z[j]).sum()).collect())
}

/// Density of `u(p)` at `z`.
pub fn one_point_density(z: &[f64], p: StPoint, spec: &FieldSpec, source: &dyn CovarianceSource) -> Result<f64> {
    let w = to_v(spec, z)?;
    let var = source.var(p);
    if !(var > 0.0) {
        return Err(Error::domain("one-point density needs t > 0"));
    }
    let log: f64 = w.iter().map(|x| -0.5 * x * x / var - 0.5 * (2.0 * PI * var).ln()).sum();
    Ok(log.exp() / spec.sigma().determinant().abs())
}

/// Joint density of `(u(p), u(q))` at `(z1, z2)`.
pub fn two_point_density(
    z1: &[f64],
    z2: &[f64],
    p: StPoint,
    q: StPoint,
    spec: &FieldSpec,
    source: &dyn CovarianceSource,
) -> Result<f64> {
    let (w1, w2) = (to_v(spec, z1)?, to_v(spec, z2)?);
    let st = pair_stats(p, q, source)?;
    if !(st.det2 > 0.0) {
        return Err(Error::domain("two-point density undefined for a degenerate pair"));
    }
    // Components of v are independent bivariate normals.
    let mut log = 0.0;
    for (a, b) in w1.iter().zip(&w2) {
        let quad = (st.var_q * a * a - 2.0 * st.cov * a * b + st.var_p * b * b) / st.det2;
        log += -0.5 * quad - (2.0 * PI).ln() - 0.5 * st.det2.ln();
    }
    let det = spec.sigma().determinant().abs();
    Ok(log.exp() / (det * det))
}

/// `c Delta^{-d/2} exp(-|z1 - z2|^2 / (c Delta))`.
pub fn a2_envelope(z1: &[f64], z2: &[f64], p: StPoint, q: StPoint, c: f64) -> f64 {
    let delta = p.delta(q);
    let r2: f64 = z1.iter().zip(z2).map(|(a, b)| (a - b) * (a - b)).sum();
    c * delta.powf(-(z1.len() as f64) / 2.0) * (-r2 / (c * delta)).exp()
}

/// Smallest `c` (within relative `1e-6`) with density <= envelope at one configuration.
pub fn a2_constant_at(
    z1: &[f64],
    z2: &[f64],
    p: StPoint,
    q: StPoint,
    spec: &FieldSpec,
    source: &dyn CovarianceSource,
) -> Result<f64> {
    let dens = two_point_density(z1, z2, p, q, spec, source)?;
    // The envelope is increasing in c; bracket then bisect in log c.
    let ok = |c: f64| a2_envelope(z1, z2, p, q, c) >= dens;
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::numeric("no envelope constant found"));
        }
    }
    let mut lo = hi / 2.0;
    while ok(lo) && lo > 1e-300 {
        lo /= 2.0;
    }
    while hi / lo > 1.0 + 1e-6 {
        let mid = (lo * hi).sqrt();
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeSweep {
    /// Largest per-configuration constant: the empirical threshold.
    pub threshold: f64,
    pub configurations: usize,
    /// Largest density / envelope ratio at the threshold (should be <= 1).
    pub max_ratio_at_threshold: f64,
}

/// Sweep over pairs and levels `z1, z2` on a grid in `[-m, m]^d`.
pub fn a2_threshold(
    pairs: &[(StPoint, StPoint)],
    levels: &[Vec<f64>],
    spec: &FieldSpec,
    source: &dyn CovarianceSource,
) -> Result<EnvelopeSweep> {
    let mut threshold: f64 = 0.0;
    let mut configs = Vec::new();
    for &(p, q) in pairs {
        for z1 in levels {
            for z2 in levels {
                threshold = threshold.max(a2_constant_at(z1, z2, p, q, spec, source)?);
                configs.push((p, q, z1, z2));
            }
        }
    }
    let mut max_ratio: f64 = 0.0;
    for (p, q, z1, z2) in &configs {
        let dens = two_point_density(z1, z2, *p, *q, spec, source)?;
        max_ratio = max_ratio.max(dens / a2_envelope(z1, z2, *p, *q, threshold));
    }
    Ok(EnvelopeSweep {
        threshold,
        configurations: configs.len(),
        max_ratio_at_threshold: max_ratio,
    })
}

/// Infimum of the one-point density over nodes and levels.
pub fn a1_infimum(points: &[StPoint], levels: &[Vec<f64>], spec: &FieldSpec, source: &dyn CovarianceSource) -> Result<f64> {
    let mut inf = f64::INFINITY;
    for &p in points {
        for z in levels {
            inf = inf.min(one_point_density(z, p, spec, source)?);
        }
    }
    Ok(inf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::covariance::ExactKernel;
    use crate::numeric::quad::{integrate, QuadOptions};

    #[test]
    fn two_point_density_integrates_to_marginal() {
        let spec = FieldSpec::identity(1, 1.0, 0.1).unwrap();
        let (p, q) = (StPoint::new(0.5, 0.3), StPoint::new(0.6, 0.4));
        let z1 = 0.2;
        let m = integrate(
            |z2| two_point_density(&[z1], &[z2], p, q, &spec, &ExactKernel).unwrap(),
            -8.0,
            8.0,
            QuadOptions::rel(1e-10),
        )
        .unwrap()
        .value;
        let one = one_point_density(&[z1], p, &spec, &ExactKernel).unwrap();
        assert!((m - one).abs() < 1e-9 * one, "{m} vs {one}");
    }

    #[test]
    fn sigma_change_of_variables() {
        let spec = FieldSpec::new(1, &[2.0], 1.0, 0.1).unwrap();
        let unit = FieldSpec::identity(1, 1.0, 0.1).unwrap();
        let p = StPoint::new(0.5, 0.3);
        let a = one_point_density(&[1.0], p, &spec, &ExactKernel).unwrap();
        let b = one_point_density(&[0.5], p, &unit, &ExactKernel).unwrap() / 2.0;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn envelope_constant_is_tight() {
        let spec = FieldSpec::identity(1, 1.0, 0.1).unwrap();
        let (p, q) = (StPoint::new(0.5, 0.3), StPoint::new(0.5, 0.32));
        let c = a2_constant_at(&[0.1], &[0.3], p, q, &spec, &ExactKernel).unwrap();
        let dens = two_point_density(&[0.1], &[0.3], p, q, &spec, &ExactKernel).unwrap();
        let env = a2_envelope(&[0.1], &[0.3], p, q, c);
        assert!(env >= dens && env < dens * 1.001);
        assert!(two_point_density(&[0.0], &[0.0], p, p, &spec, &ExactKernel).is_err());
    }
}
