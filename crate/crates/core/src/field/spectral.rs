//! Cosine eigenbasis of the Neumann Laplacian on `[0, 1]` and the closed-form
//! second moments of the mode processes.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::numeric::quad::{integrate_breaks, QuadOptions};

/// Decay rate `pi^2 k^2` of mode `k`.
#[inline]
pub fn lambda(k: usize) -> f64 {
    let kf = k as f64;
    PI * PI * kf * kf
}

/// `phi_0 = 1`, `phi_k(x) = sqrt(2) cos(k pi x)`.
#[inline]
pub fn phi(k: usize, x: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        SQRT_2 * (k as f64 * PI * x).cos()
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("time must be positive, got {t}")))
    }
}

/// `Var(A^k_t)`: `t` for `k = 0`, `(1 - e^{-2 lambda t}) / (2 lambda)` otherwise.
pub fn mode_variance(k: usize, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(mode_variance_unchecked(k, t))
}

#[inline]
pub(crate) fn mode_variance_unchecked(k: usize, t: f64) -> f64 {
    if k == 0 {
        t
    } else {
        let l2 = 2.0 * lambda(k);
        -(-l2 * t).exp_m1() / l2
    }
}

/// `Cov(A^k_s, A^k_t)`, written as `e^{-lambda |t-s|} Var(A^k_{min(s,t)})`
/// so that no exponential overflows.
pub fn mode_covariance(k: usize, s: f64, t: f64) -> Result<f64> {
    check_time(s)?;
    check_time(t)?;
    Ok(mode_covariance_unchecked(k, s, t))
}

#[inline]
pub(crate) fn mode_covariance_unchecked(k: usize, s: f64, t: f64) -> f64 {
    let m = s.min(t);
    if k == 0 {
        m
    } else {
        (-lambda(k) * (t - s).abs()).exp() * mode_variance_unchecked(k, m)
    }
}

/// Exact one-step coefficients of the mode recursion
/// `A_{t+dt} = decay * A_t + sd * xi`.
#[inline]
pub fn ou_step(k: usize, dt: f64) -> (f64, f64) {
    if k == 0 {
        (1.0, dt.sqrt())
    } else {
        ((-lambda(k) * dt).exp(), mode_variance_unchecked(k, dt).sqrt())
    }
}

/// Largest `|int_0^1 phi_j phi_k - delta_jk|` over `j, k <= max_k`.
pub fn orthonormality_error(max_k: usize) -> Result<f64> {
    // Cells short against the fastest oscillation keep each panel smooth.
    let panels = 4 * (max_k + 1);
    let breaks: Vec<f64> = (0..=panels).map(|i| i as f64 / panels as f64).collect();
    let opts = QuadOptions::rel(1e-13);
    let mut worst: f64 = 0.0;
    for j in 0..=max_k {
        for k in j..=max_k {
            let v = integrate_breaks(|x| phi(j, x) * phi(k, x), &breaks, QuadOptions { abs_tol: 1e-14, ..opts })?.value;
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    Ok(worst)
}

/// Modes checked for orthonormality when a model is built.
pub const ORTHONORMALITY_MODES: usize = 64;

fn build_check() -> &'static std::result::Result<f64, String> {
    static CHECK: OnceLock<std::result::Result<f64, String>> = OnceLock::new();
    CHECK.get_or_init(|| orthonormality_error(ORTHONORMALITY_MODES).map_err(|e| e.to_string()))
}

/// Truncated cosine expansion with modes `0..=k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralModel {
    k_max: usize,
}

impl SpectralModel {
    pub const DEFAULT_K_MAX: usize = 512;

    /// Builds the model after checking eigenfunction orthonormality by
    /// quadrature (tolerance `1e-8`; the check runs once per process).
    pub fn new(k_max: usize) -> Result<Self> {
        if k_max < 1 {
            return Err(Error::domain("k_max must be at least 1"));
        }
        match build_check() {
            Ok(err) if *err < 1e-8 => Ok(Self { k_max }),
            Ok(err) => Err(Error::Consistency {
                what: "eigenfunction orthonormality".into(),
                residual: *err,
                tolerance: 1e-8,
            }),
            Err(msg) => Err(Error::numeric(msg.clone())),
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn modes(&self) -> usize {
        self.k_max + 1
    }

    /// Bound on the omitted covariance tail `sum_{k > k_max} 1/(pi^2 k^2)`.
    pub fn tail_bound(&self) -> f64 {
        1.0 / (PI * PI * self.k_max as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::quad::integrate;

    #[test]
    fn variance_examples() {
        assert_eq!(mode_variance(0, 0.5).unwrap(), 0.5);
        assert!((mode_variance(1, 1e3).unwrap() - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        let oracle = integrate(|s| (-2.0 * PI * PI * s).exp(), 0.0, 0.1, QuadOptions::rel(1e-14)).unwrap().value;
        let v = mode_variance(1, 0.1).unwrap();
        assert!(((v - oracle) / oracle).abs() < 1e-13);
        assert!((v - 0.04362).abs() < 5e-6);
        assert!(mode_variance(1, 0.0).is_err());
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(mode_covariance(0, 0.3, 0.7).unwrap(), 0.3);
        assert_eq!(mode_covariance(1, 0.1, 0.1).unwrap(), mode_variance(1, 0.1).unwrap());
        let l = lambda(2);
        let oracle = integrate(|r| (-l * (0.5 - r)).exp() * (-l * (0.2 - r)).exp(), 0.0, 0.2, QuadOptions::rel(1e-14))
            .unwrap()
            .value;
        let c = mode_covariance(2, 0.2, 0.5).unwrap();
        assert!(((c - oracle) / oracle).abs() < 1e-12, "{c} vs {oracle}");
        // No overflow far out in the spectrum.
        let big = mode_covariance(5000, 10.0, 10.5).unwrap();
        assert!(big.is_finite() && big >= 0.0);
    }

    #[test]
    fn model_builds_and_checks_basis() {
        assert!(orthonormality_error(ORTHONORMALITY_MODES).unwrap() < 1e-8);
        assert!(SpectralModel::new(0).is_err());
        let m = SpectralModel::new(512).unwrap();
        assert_eq!(m.modes(), 513);
    }
}
