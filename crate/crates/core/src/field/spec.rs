//! Field parameters, space-time grids and points.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A space-time point `(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StPoint {
    pub t: f64,
    pub x: f64,
}

impl StPoint {
    pub const fn new(t: f64, x: f64) -> Self {
        Self { t, x }
    }

    /// Parabolic distance `|t - s|^{1/2} + |x - y|`.
    pub fn delta(self, other: StPoint) -> f64 {
        (self.t - other.t).abs().sqrt() + (self.x - other.x).abs()
    }
}

/// Drift named in a field description. Interpreted by [`crate::drift`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftDescriptor {
    #[default]
    None,
    Builtin { name: String, params: Vec<f64> },
}

/// System size, noise coupling `sigma`, horizon and warm-up time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    d: usize,
    sigma: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    horizon: f64,
    t0: f64,
    pub drift: DriftDescriptor,
}

impl FieldSpec {
    /// `sigma` is given row-major, `d * d` entries.
    pub fn new(d: usize, sigma: &[f64], horizon: f64, t0: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("system size d must be positive"));
        }
        if sigma.len() != d * d {
            return Err(Error::Mismatch(format!("sigma has {} entries, expected {}", sigma.len(), d * d)));
        }
        if sigma.iter().any(|s| !s.is_finite()) {
            return Err(Error::domain("sigma entries must be finite"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
        }
        if !(t0 > 0.0 && t0 < horizon) {
            return Err(Error::domain(format!("warm-up time must lie in (0, {horizon}), got {t0}")));
        }
        let m = DMatrix::from_row_slice(d, d, sigma);
        let det = m.determinant();
        if !(det.abs() > 1e-12) {
            return Err(Error::domain(format!("sigma must be invertible, |det| = {:e}", det.abs())));
        }
        let sigma_inv = m.clone().try_inverse().ok_or_else(|| Error::domain("sigma is singular"))?;
        Ok(Self {
            d,
            sigma: m,
            sigma_inv,
            horizon,
            t0,
            drift: DriftDescriptor::None,
        })
    }

    pub fn identity(d: usize, horizon: f64, t0: f64) -> Result<Self> {
        let mut s = vec![0.0; d * d];
        for i in 0..d {
            s[i * d + i] = 1.0;
        }
        Self::new(d, &s, horizon, t0)
    }

    pub fn with_drift(mut self, drift: DriftDescriptor) -> Self {
        self.drift = drift;
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    pub fn sigma_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.d * self.d);
        for i in 0..self.d {
            for j in 0..self.d {
                out.push(self.sigma[(i, j)]);
            }
        }
        out
    }

    /// `(sigma sigma^T)_{ij}`.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        (0..self.d).map(|k| self.sigma[(i, k)] * self.sigma[(j, k)]).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.sigma == DMatrix::identity(self.d, self.d)
    }
}

/// Time and site nodes of a sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    times: Vec<f64>,
    sites: Vec<f64>,
    uniform: bool,
}

fn check_increasing(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::domain(format!("{name} must not be empty")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain(format!("{name} must be finite")));
    }
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

impl GridSpec {
    /// `nt` equally spaced times from `t0` to `horizon` and `nx` equally
    /// spaced sites from 0 to 1.
    pub fn uniform(t0: f64, horizon: f64, nt: usize, nx: usize) -> Result<Self> {
        if nt < 2 || nx < 2 {
            return Err(Error::domain(format!("uniform grids need nt >= 2 and nx >= 2, got nt = {nt}, nx = {nx}")));
        }
        if !(t0 > 0.0 && t0 < horizon) {
            return Err(Error::domain("uniform grid needs 0 < t0 < horizon"));
        }
        let times = (0..nt)
            .map(|j| if j == nt - 1 { horizon } else { t0 + (horizon - t0) * j as f64 / (nt - 1) as f64 })
            .collect();
        Ok(Self {
            times,
            sites: uniform_sites(nx),
            uniform: true,
        })
    }

    /// Arbitrary strictly increasing nodes: times in `(0, inf)`, sites in `[0, 1]`.
    pub fn custom(times: Vec<f64>, sites: Vec<f64>) -> Result<Self> {
        check_increasing("times", &times)?;
        check_increasing("sites", &sites)?;
        if !(times[0] > 0.0) {
            return Err(Error::domain("times must be positive"));
        }
        if sites[0] < 0.0 || *sites.last().unwrap() > 1.0 {
            return Err(Error::domain("sites must lie in [0, 1]"));
        }
        Ok(Self {
            times,
            sites,
            uniform: false,
        })
    }

    /// Uniform times, with all sites `0, 1/(nx-1), ..., 1`.
    pub fn with_uniform_sites(times: Vec<f64>, nx: usize) -> Result<Self> {
        if nx < 2 {
            return Err(Error::domain("need at least two sites"));
        }
        let mut g = Self::custom(times, uniform_sites(nx))?;
        g.uniform = false;
        Ok(g)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sites(&self) -> &[f64] {
        &self.sites
    }

    pub fn nt(&self) -> usize {
        self.times.len()
    }

    pub fn nx(&self) -> usize {
        self.sites.len()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// True when the sites are exactly `j / (nx - 1)`, so cosine synthesis
    /// can go through a fast transform.
    pub fn has_full_uniform_sites(&self) -> bool {
        let nx = self.nx();
        nx >= 2 && self.sites.iter().enumerate().all(|(j, &x)| x == uniform_site(j, nx))
    }

    /// Largest time step (0 for a single time).
    pub fn max_dt(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn point(&self, ti: usize, xi: usize) -> StPoint {
        StPoint::new(self.times[ti], self.sites[xi])
    }

    /// Checks that all times lie in `[t0, horizon]` of the field.
    pub fn check_against(&self, spec: &FieldSpec) -> Result<()> {
        let tol = 1e-12 * spec.horizon();
        if self.times[0] < spec.t0() - tol || *self.times.last().unwrap() > spec.horizon() + tol {
            return Err(Error::domain(format!(
                "grid times [{}, {}] leave [t0, T] = [{}, {}]",
                self.times[0],
                self.times.last().unwrap(),
                spec.t0(),
                spec.horizon()
            )));
        }
        Ok(())
    }
}

fn uniform_site(j: usize, nx: usize) -> f64 {
    if j == nx - 1 {
        1.0
    } else {
        j as f64 / (nx - 1) as f64
    }
}

fn uniform_sites(nx: usize) -> Vec<f64> {
    (0..nx).map(|j| uniform_site(j, nx)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_singular_sigma_and_bad_times() {
        assert!(FieldSpec::new(2, &[1.0, 2.0, 2.0, 4.0], 1.0, 0.1).is_err());
        assert!(FieldSpec::identity(1, 1.0, 1.0).is_err());
        assert!(FieldSpec::identity(1, 1.0, 0.0).is_err());
        let s = FieldSpec::new(2, &[2.0, 1.0, 0.0, 1.0], 1.0, 0.1).unwrap();
        assert_eq!(s.coupling(0, 0), 5.0);
        assert_eq!(s.coupling(0, 1), 1.0);
    }

    #[test]
    fn uniform_grid_endpoints() {
        let g = GridSpec::uniform(0.1, 1.0, 10, 5).unwrap();
        assert_eq!(g.times()[0], 0.1);
        assert_eq!(*g.times().last().unwrap(), 1.0);
        assert_eq!(g.sites(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(g.has_full_uniform_sites());
        assert!(GridSpec::custom(vec![0.5, 0.4], vec![0.0]).is_err());
        assert!(GridSpec::uniform(0.1, 1.0, 0, 5).is_err());
    }
}
