//! Riesz/log kernels and the Euclidean and parabolic metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index `beta` of the kernel `K_beta` together with the normalization
/// radius `n0` of its logarithmic member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOrder {
    pub beta: f64,
    pub n0: f64,
}

impl KernelOrder {
    pub fn new(beta: f64, n0: f64) -> Result<Self> {
        if !(n0 > 0.0) || !n0.is_finite() {
            return Err(Error::domain(format!("n0 must be positive and finite, got {n0}")));
        }
        if !beta.is_finite() {
            return Err(Error::domain("beta must be finite"));
        }
        Ok(Self { beta, n0 })
    }

    /// Order whose `n0` is chosen for a domain of the given diameter:
    /// `n0 = e * (1 + diameter)`, so that `K_0 >= 1` on the domain.
    pub fn for_diameter(beta: f64, diameter: f64) -> Self {
        Self {
            beta,
            n0: default_n0(diameter),
        }
    }

    /// `K_beta(r)` for `r > 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        k_beta(*self, r)
    }

    /// Kernel value at zero separation: `+inf` for `beta >= 0`, `1` otherwise.
    pub fn at_zero(&self) -> f64 {
        if self.beta < 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn default_n0(diameter: f64) -> f64 {
    std::f64::consts::E * (1.0 + diameter.max(0.0))
}

/// `r^-beta` for `beta > 0`, `ln(n0 / r)` for `beta = 0`, `1` for `beta < 0`.
pub fn k_beta(order: KernelOrder, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("kernel argument must be positive, got {r}")));
    }
    let beta = order.beta;
    if beta > 0.0 {
        Ok(r.powf(-beta))
    } else if beta == 0.0 {
        if r >= order.n0 {
            return Err(Error::Normalization { r, n0: order.n0 });
        }
        Ok((order.n0 / r).ln())
    } else {
        Ok(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    /// `|t - s|^{1/2} + |x - y|`; the first coordinate is time.
    Parabolic,
}

impl MetricKind {
    /// Checks that points of dimension `dim` live where this metric applies.
    pub fn check_dim(self, dim: usize) -> Result<()> {
        match self {
            MetricKind::Euclidean if dim == 0 => Err(Error::Mismatch("zero-dimensional points".into())),
            MetricKind::Parabolic if dim < 2 => Err(Error::Mismatch(format!(
                "parabolic metric needs space-time points (time + at least one space coordinate), got dimension {dim}"
            ))),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn dist_unchecked(self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            MetricKind::Euclidean => p
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            MetricKind::Parabolic => {
                let dt = (p[0] - q[0]).abs().sqrt();
                let dx = p[1..]
                    .iter()
                    .zip(&q[1..])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dt + dx
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Parabolic => "parabolic",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(MetricKind::Euclidean),
            "parabolic" => Ok(MetricKind::Parabolic),
            other => Err(Error::domain(format!("unknown metric `{other}`"))),
        }
    }
}

/// Distance between `p` and `q` in the chosen metric.
pub fn metric(kind: MetricKind, p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Mismatch(format!(
            "points of dimension {} and {} are not comparable",
            p.len(),
            q.len()
        )));
    }
    kind.check_dim(p.len())?;
    Ok(kind.dist_unchecked(p, q))
}

/// The parabolic distance between space-time points `(t, x)` and `(s, y)` in `[0,T] x [0,1]`.
#[inline]
pub fn parabolic(t: f64, x: f64, s: f64, y: f64) -> f64 {
    (t - s).abs().sqrt() + (x - y).abs()
}
