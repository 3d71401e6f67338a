//! Quadrature checks of the integral bounds used in the capacity lower bounds.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::quad::{geometric_breaks, integrate_breaks, QuadOptions};
use crate::potential::kernel::{k_beta, KernelOrder};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `Psi_{a,nu}(rho) = int_0^a dx / (rho + x^nu)`.
pub fn psi(a: f64, nu: f64, rho: f64) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("nu", nu)?;
    check_positive("rho", rho)?;
    if nu == 1.0 {
        return Ok((a / rho).ln_1p());
    }
    if nu == 2.0 {
        let s = rho.sqrt();
        return Ok((a / s).atan() / s);
    }
    psi_quadrature(a, nu, rho)
}

/// [`psi`] by adaptive quadrature for every `nu`.
pub fn psi_quadrature(a: f64, nu: f64, rho: f64) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("nu", nu)?;
    check_positive("rho", rho)?;
    // The integrand changes shape where x^nu ~ rho.
    let knee = rho.powf(1.0 / nu).min(a);
    let breaks = geometric_breaks(0.0, a, (knee * 1e-3).max(a * 1e-15));
    Ok(integrate_breaks(|x| 1.0 / (rho + x.powf(nu)), &breaks, QuadOptions::rel(1e-12))?.value)
}

/// A deterministic sweep of `value / kernel` ratios.
#[derive(Debug, Clone, Serialize)]
pub struct RatioSweep {
    pub args: Vec<f64>,
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl RatioSweep {
    pub fn max(&self) -> f64 {
        self.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.ratios.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max / min` over the sweep.
    pub fn spread(&self) -> f64 {
        self.max() / self.min()
    }
}

/// `Psi_{a,nu}(rho) / K_{(nu-1)/nu}(rho)` on `points` log-spaced values of
/// `rho` in `[rho_min, t]`. The log kernel uses `n0 = e (1 + t)`.
pub fn psi_ratio_sweep(a: f64, nu: f64, rho_min: f64, t: f64, points: usize) -> Result<RatioSweep> {
    check_positive("rho_min", rho_min)?;
    if !(t > rho_min) || points < 2 {
        return Err(Error::domain("psi sweep needs rho_min < t and at least two points"));
    }
    let order = KernelOrder::for_diameter((nu - 1.0) / nu, t);
    let mut sweep = RatioSweep {
        args: Vec::with_capacity(points),
        values: Vec::with_capacity(points),
        ratios: Vec::with_capacity(points),
    };
    let (l0, l1) = (rho_min.ln(), t.ln());
    for i in 0..points {
        let rho = (l0 + (l1 - l0) * i as f64 / (points - 1) as f64).exp();
        let v = psi(a, nu, rho)?;
        sweep.args.push(rho);
        sweep.values.push(v);
        sweep.ratios.push(v / k_beta(order, rho)?);
    }
    Ok(sweep)
}

/// Which of the two integrals is being bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoxIntegralVariant {
    /// `int_I int_I int_J int_J exp(-a^2 / Delta) Delta^{-beta/2}`, against `K_{beta-6}(a)`.
    SpaceTime,
    /// `int_I int_I exp(-a^2 / |t-s|^alpha) |t-s|^{-alpha beta / 2}`, against `K_{beta-2/alpha}(a)`.
    TimeOnly { alpha: f64 },
}

/// Intervals `I` (time) and `J` (space) by their lengths, and the range
/// `[-n, n]` of `a`, which fixes the log-kernel normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxIntegralDomain {
    pub time_len: f64,
    pub space_len: f64,
    pub a_max: f64,
}

impl Default for BoxIntegralDomain {
    fn default() -> Self {
        Self {
            time_len: 1.0,
            space_len: 1.0,
            a_max: 1.0,
        }
    }
}

impl BoxIntegralVariant {
    fn kernel_index(self, beta: f64) -> f64 {
        match self {
            BoxIntegralVariant::SpaceTime => beta - 6.0,
            BoxIntegralVariant::TimeOnly { alpha } => beta - 2.0 / alpha,
        }
    }
}

/// The left-hand integral, by nested adaptive quadrature.
pub fn box_integral(beta: f64, a: f64, variant: BoxIntegralVariant, dom: BoxIntegralDomain) -> Result<f64> {
    check_positive("beta", beta)?;
    if a == 0.0 || !a.is_finite() {
        return Err(Error::domain("a must be non-zero and finite"));
    }
    check_positive("time_len", dom.time_len)?;
    let a2 = a * a;
    let opts = QuadOptions::rel(1e-10);
    match variant {
        BoxIntegralVariant::SpaceTime => {
            check_positive("space_len", dom.space_len)?;
            // With w = |t-s|^{1/2} and v = |x-y| the integral is
            // 8 int_0^{sqrt L} (L - w^2) w int_0^M (M - v) h(w + v) dv dw.
            let (l, m) = (dom.time_len, dom.space_len);
            let h = |d: f64| {
                if d <= 0.0 {
                    0.0
                } else {
                    (-a2 / d - 0.5 * beta * d.ln()).exp()
                }
            };
            let finest = a2 * 1e-3;
            let outer_breaks = geometric_breaks(0.0, l.sqrt(), finest);
            let mut failure = None;
            let outer = integrate_breaks(
                |w| {
                    let gap = (a2 - w).max(0.0);
                    let inner_breaks = if gap > 0.0 && gap < m {
                        let mut b = geometric_breaks(0.0, gap, finest);
                        b.extend(geometric_breaks(gap, m, finest).into_iter().skip(1));
                        b
                    } else {
                        geometric_breaks(0.0, m, finest)
                    };
                    match integrate_breaks(|v| (m - v) * h(w + v), &inner_breaks, QuadOptions::rel(1e-11)) {
                        Ok(r) => 8.0 * (l - w * w) * w * r.value,
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                &outer_breaks,
                opts,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(outer.value)
        }
        BoxIntegralVariant::TimeOnly { alpha } => {
            check_positive("alpha", alpha)?;
            let l = dom.time_len;
            let f = |u: f64| {
                if u <= 0.0 {
                    0.0
                } else {
                    2.0 * (l - u) * (-a2 / u.powf(alpha) - 0.5 * alpha * beta * u.ln()).exp()
                }
            };
            // The integrand peaks near u = a^{2/alpha}.
            let peak = a2.powf(1.0 / alpha).min(l);
            let breaks = geometric_breaks(0.0, l, peak * 1e-3);
            Ok(integrate_breaks(f, &breaks, opts)?.value)
        }
    }
}

/// `box_integral / K_index(a)` with `n0 = e (1 + a_max)`.
pub fn box_integral_ratio(beta: f64, a: f64, variant: BoxIntegralVariant, dom: BoxIntegralDomain) -> Result<f64> {
    if a.abs() > dom.a_max {
        return Err(Error::domain(format!("|a| = {} exceeds the range bound {}", a.abs(), dom.a_max)));
    }
    let order = KernelOrder::for_diameter(variant.kernel_index(beta), dom.a_max);
    Ok(box_integral(beta, a, variant, dom)? / k_beta(order, a.abs())?)
}

/// Ratios at `a = 2^{-k}` for each `k` in `ks`.
pub fn box_integral_sweep(beta: f64, variant: BoxIntegralVariant, dom: BoxIntegralDomain, ks: &[i32]) -> Result<RatioSweep> {
    let mut sweep = RatioSweep {
        args: Vec::new(),
        values: Vec::new(),
        ratios: Vec::new(),
    };
    let order = KernelOrder::for_diameter(variant.kernel_index(beta), dom.a_max);
    for &k in ks {
        let a = 2f64.powi(-k);
        let v = box_integral(beta, a, variant, dom)?;
        sweep.args.push(a);
        sweep.values.push(v);
        sweep.ratios.push(v / k_beta(order, a)?);
    }
    Ok(sweep)
}

/// Closed form of `int_0^inf dy / (1 + y^nu)` for `nu > 1`, the limit of
/// `psi / K` as `rho -> 0`.
pub fn psi_limit_constant(nu: f64) -> f64 {
    (PI / nu) / (PI / nu).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::quad::integrate;

    #[test]
    fn closed_forms() {
        assert!((psi(1.0, 1.0, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((psi(1.0, 2.0, 1.0).unwrap() - PI / 4.0).abs() < 1e-15);
        for &(nu, rho) in &[(1.0, 1e-3), (2.0, 0.37), (2.0, 1e-4)] {
            let c = psi(1.3, nu, rho).unwrap();
            let q = psi_quadrature(1.3, nu, rho).unwrap();
            assert!(((c - q) / c).abs() < 1e-10, "nu={nu} rho={rho}: {c} vs {q}");
        }
    }

    #[test]
    fn psi_ratio_tends_to_limit() {
        let s = psi_ratio_sweep(1.0, 4.0, 1e-8, 1.0, 5).unwrap();
        let lim = psi_limit_constant(4.0);
        assert!((s.ratios[0] / lim - 1.0).abs() < 0.01, "{} vs {lim}", s.ratios[0]);
    }

    #[test]
    fn time_only_closed_form() {
        // alpha = 1, beta = 2: 2 int_0^1 (1 - u) e^{-a^2/u} / u du.
        let a: f64 = 0.5;
        let got = box_integral(2.0, a, BoxIntegralVariant::TimeOnly { alpha: 1.0 }, BoxIntegralDomain::default()).unwrap();
        let want = integrate(|u| 2.0 * (1.0 - u) * (-a * a / u).exp() / u, 1e-12, 1.0, QuadOptions::rel(1e-12))
            .unwrap()
            .value;
        assert!(((got - want) / want).abs() < 1e-8);
    }

    #[test]
    fn space_time_against_direct_double_integral() {
        // Independent route: integrate over (u, v) = (|t-s|, |x-y|) directly.
        let (beta, a): (f64, f64) = (4.0, 0.5);
        let got = box_integral(beta, a, BoxIntegralVariant::SpaceTime, BoxIntegralDomain::default()).unwrap();
        let h = |d: f64| (-a * a / d).exp() * d.powf(-beta / 2.0);
        let want = integrate(
            |u| {
                let inner = integrate(|v| (1.0 - v) * h(u.sqrt() + v), 0.0, 1.0, QuadOptions::rel(1e-12)).unwrap();
                4.0 * (1.0 - u) * inner.value
            },
            0.0,
            1.0,
            QuadOptions::rel(1e-11),
        )
        .unwrap()
        .value;
        assert!(((got - want) / want).abs() < 1e-7, "{got} vs {want}");
    }

    #[test]
    fn rejects_zero_a() {
        assert!(box_integral(4.0, 0.0, BoxIntegralVariant::SpaceTime, BoxIntegralDomain::default()).is_err());
    }
}
