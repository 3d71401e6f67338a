//! Second-order structure of the unit-coupling field `v`.
//!
//! Two independent evaluators are provided: the truncated cosine series that
//! the sampler realizes, and the exact Neumann kernel built from images of
//! the free heat kernel.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::field::spec::{FieldSpec, StPoint};
use crate::field::spectral::{mode_covariance_unchecked, mode_variance_unchecked, phi, SpectralModel};
use crate::numeric::sum::Accumulator;

/// Variances and covariance of `(v_i(p), v_i(q))` for one component, plus
/// the increment variance summed as its own series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub var_p: f64,
    pub var_q: f64,
    pub cov: f64,
    pub incr: f64,
}

pub trait CovarianceSource: Sync {
    fn moments(&self, p: StPoint, q: StPoint) -> Moments;

    fn cov(&self, p: StPoint, q: StPoint) -> f64 {
        self.moments(p, q).cov
    }

    fn var(&self, p: StPoint) -> f64 {
        self.moments(p, p).var_p
    }

    /// Bound on the error of [`CovarianceSource::cov`] (0 for exact sources).
    fn truncation_bound(&self) -> f64;
}

impl CovarianceSource for SpectralModel {
    fn moments(&self, p: StPoint, q: StPoint) -> Moments {
        let mut var_p = Accumulator::new();
        let mut var_q = Accumulator::new();
        let mut cov = Accumulator::new();
        let mut incr = Accumulator::new();
        for k in 0..=self.k_max() {
            let (fx, fy) = (phi(k, p.x), phi(k, q.x));
            let vp = fx * fx * mode_variance_unchecked(k, p.t);
            let vq = fy * fy * mode_variance_unchecked(k, q.t);
            let c = fx * fy * mode_covariance_unchecked(k, p.t, q.t);
            var_p.add(vp);
            var_q.add(vq);
            cov.add(c);
            incr.add(vp + vq - 2.0 * c);
        }
        Moments {
            var_p: var_p.value(),
            var_q: var_q.value(),
            cov: cov.value(),
            incr: incr.value(),
        }
    }

    fn truncation_bound(&self) -> f64 {
        self.tail_bound()
    }
}

/// Exact covariance `1/2 int_{|t-s|}^{t+s} G_u(x, y) du` with the Neumann
/// kernel written as a sum of free heat kernels at the images `x -+ y + 2n`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExactKernel;

/// `int_0^u g_r(z) dr` for the free kernel `g_r(z) = e^{-z^2/4r} / sqrt(4 pi r)`.
fn heat_antiderivative(u: f64, z: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let az = z.abs();
    let su = u.sqrt();
    (u / PI).sqrt() * (-z * z / (4.0 * u)).exp() - 0.5 * az * erfc(az / (2.0 * su))
}

impl ExactKernel {
    fn cov_exact(p: StPoint, q: StPoint) -> f64 {
        let hi = p.t + q.t;
        let lo = (p.t - q.t).abs();
        // Images beyond |z| ~ sqrt(160 u) are below e^{-40}.
        let reach = ((160.0 * hi).sqrt() / 2.0).ceil() as i64 + 2;
        let mut acc = Accumulator::new();
        for n in -reach..=reach {
            let shift = 2.0 * n as f64;
            for z in [p.x - q.x + shift, p.x + q.x + shift] {
                acc.add(heat_antiderivative(hi, z));
                acc.add(-heat_antiderivative(lo, z));
            }
        }
        0.5 * acc.value()
    }
}

impl CovarianceSource for ExactKernel {
    fn moments(&self, p: StPoint, q: StPoint) -> Moments {
        let var_p = Self::cov_exact(p, p);
        let var_q = Self::cov_exact(q, q);
        let cov = Self::cov_exact(p, q);
        Moments {
            var_p,
            var_q,
            cov,
            incr: var_p + var_q - 2.0 * cov,
        }
    }

    fn truncation_bound(&self) -> f64 {
        0.0
    }
}

/// `Cov(u_i(p), u_j(q))` together with the truncation bound of the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldCovariance {
    pub value: f64,
    pub tail_bound: f64,
}

/// `(sigma sigma^T)_{ij} * Cov(v(p), v(q))` (indices from 0).
pub fn field_covariance(
    i: usize,
    j: usize,
    p: StPoint,
    q: StPoint,
    spec: &FieldSpec,
    source: &dyn CovarianceSource,
) -> Result<FieldCovariance> {
    if i >= spec.d() || j >= spec.d() {
        return Err(Error::domain(format!("component index out of range for d = {}", spec.d())));
    }
    check_times(p, q, spec.t0())?;
    let c = spec.coupling(i, j);
    Ok(FieldCovariance {
        value: c * source.cov(p, q),
        tail_bound: c.abs() * source.truncation_bound(),
    })
}

fn check_times(p: StPoint, q: StPoint, t0: f64) -> Result<()> {
    for pt in [p, q] {
        if !(pt.t >= t0) || !(0.0..=1.0).contains(&pt.x) {
            return Err(Error::domain(format!(
                "point ({}, {}) must have t >= t0 = {t0} and x in [0, 1]",
                pt.t, pt.x
            )));
        }
    }
    Ok(())
}

/// All second-order quantities of a pair for the unit-coupling field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairStats {
    pub var_p: f64,
    pub var_q: f64,
    pub cov: f64,
    pub gamma2: f64,
    pub tau2: f64,
    pub m: f64,
    pub rho: f64,
    pub det2: f64,
    /// Relative residual of the determinant identity.
    pub identity_residual: f64,
}

/// Tolerance on the determinant identity residual.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Pair statistics, checking
/// `det2 = 1/4 (gamma^2 - (s_p - s_q)^2) ((s_p + s_q)^2 - gamma^2)`
/// with `gamma^2` from its own series.
pub fn pair_stats(p: StPoint, q: StPoint, source: &dyn CovarianceSource) -> Result<PairStats> {
    let mo = source.moments(p, q);
    if !(mo.var_p > 0.0 && mo.var_q > 0.0) {
        return Err(Error::domain("pair statistics need positive variances (t > 0)"));
    }
    let (sp, sq) = (mo.var_p.sqrt(), mo.var_q.sqrt());
    let gamma2 = mo.incr.max(0.0);
    let det2 = (mo.var_p * mo.var_q - mo.cov * mo.cov).max(0.0);
    let rhs = 0.25 * (gamma2 - (sp - sq).powi(2)) * ((sp + sq).powi(2) - gamma2);
    let scale = det2.abs().max(rhs.abs());
    let identity_residual = if scale < f64::MIN_POSITIVE { 0.0 } else { (det2 - rhs).abs() / scale };
    if identity_residual > IDENTITY_TOL {
        return Err(Error::Consistency {
            what: "covariance determinant identity".into(),
            residual: identity_residual,
            tolerance: IDENTITY_TOL,
        });
    }
    let rho = if p == q { 1.0 } else { (mo.cov / (sp * sq)).clamp(-1.0, 1.0) };
    Ok(PairStats {
        var_p: mo.var_p,
        var_q: mo.var_q,
        cov: mo.cov,
        gamma2,
        tau2: mo.var_p * (1.0 - rho * rho),
        m: mo.cov / mo.var_q,
        rho,
        det2,
        identity_residual,
    })
}

/// `E[(v(p) - v(q))^2]` and its ratio to the parabolic distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncrementMoment {
    pub value: f64,
    pub delta: f64,
    /// Absent when `p == q`.
    pub ratio_to_delta: Option<f64>,
}

pub fn increment_second_moment(p: StPoint, q: StPoint, source: &dyn CovarianceSource) -> IncrementMoment {
    if p == q {
        return IncrementMoment {
            value: 0.0,
            delta: 0.0,
            ratio_to_delta: None,
        };
    }
    let value = source.moments(p, q).incr;
    let delta = p.delta(q);
    IncrementMoment {
        value,
        delta,
        ratio_to_delta: Some(value / delta),
    }
}

/// `|sigma_p - sigma_q|` against `|t-s|^{1/2} + |x-y| max(1, log(1/|x-y|))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StdDevModulus {
    pub value: f64,
    pub scale: f64,
    /// `value / scale`, absent when `p == q`.
    pub ratio: Option<f64>,
}

pub fn std_dev_modulus(p: StPoint, q: StPoint, source: &dyn CovarianceSource) -> StdDevModulus {
    if p == q {
        return StdDevModulus {
            value: 0.0,
            scale: 0.0,
            ratio: None,
        };
    }
    let mo = source.moments(p, q);
    let value = (mo.var_p.sqrt() - mo.var_q.sqrt()).abs();
    let dx = (p.x - q.x).abs();
    let log_factor = if dx > 0.0 { (1.0 / dx).ln().max(1.0) } else { 0.0 };
    let scale = (p.t - q.t).abs().sqrt() + dx * log_factor;
    StdDevModulus {
        value,
        scale,
        ratio: Some(value / scale),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_kernel_matches_long_series() {
        let model = SpectralModel::new(4096).unwrap();
        let pts = [
            (StPoint::new(0.3, 0.2), StPoint::new(0.7, 0.9)),
            (StPoint::new(0.5, 0.25), StPoint::new(0.5, 0.75)),
            (StPoint::new(1.0, 0.0), StPoint::new(0.9, 1.0)),
        ];
        for (p, q) in pts {
            let a = ExactKernel.cov(p, q);
            let b = model.cov(p, q);
            assert!((a - b).abs() <= model.tail_bound(), "{a} vs {b}");
        }
        // Variance at an interior point: the k = 0 part is t.
        let v = ExactKernel.var(StPoint::new(0.4, 0.5));
        let s = model.var(StPoint::new(0.4, 0.5));
        assert!((v - s).abs() < 1e-4);
    }

    #[test]
    fn coincident_pair() {
        let p = StPoint::new(0.5, 0.3);
        let model = SpectralModel::new(256).unwrap();
        let s = pair_stats(p, p, &model).unwrap();
        assert_eq!(s.gamma2, 0.0);
        assert_eq!(s.det2, 0.0);
        assert_eq!(s.rho, 1.0);
    }

    #[test]
    fn components_decouple_under_identity() {
        let spec = FieldSpec::identity(2, 1.0, 0.1).unwrap();
        let model = SpectralModel::new(64).unwrap();
        let p = StPoint::new(0.5, 0.3);
        assert_eq!(field_covariance(0, 1, p, p, &spec, &model).unwrap().value, 0.0);
        assert!(field_covariance(0, 0, p, p, &spec, &model).unwrap().value > 0.0);
        assert!(field_covariance(0, 2, p, p, &spec, &model).is_err());
        assert!(field_covariance(0, 0, StPoint::new(0.05, 0.3), p, &spec, &model).is_err());
    }

    #[test]
    fn increments_and_std_modulus() {
        let p = StPoint::new(0.5, 0.3);
        assert_eq!(increment_second_moment(p, p, &ExactKernel).ratio_to_delta, None);
        let m = increment_second_moment(p, StPoint::new(0.5, 0.31), &ExactKernel);
        assert!(m.ratio_to_delta.unwrap() > 0.1 && m.ratio_to_delta.unwrap() < 10.0);
        assert_eq!(std_dev_modulus(p, p, &ExactKernel).value, 0.0);
    }
}
