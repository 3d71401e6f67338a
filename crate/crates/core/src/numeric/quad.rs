//! Globally adaptive Gauss–Kronrod (7/15) quadrature with user breakpoints.
//!
//! Intervals are kept in a max-heap keyed on their error estimate; the worst
//! one is bisected until the summed estimate meets the requested tolerance.
//! Integrands with integrable blow-ups at an endpoint are handled by
//! seeding geometric breakpoints towards that endpoint (see
//! [`geometric_breaks`]), which keeps the number of bisections small.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_intervals: 20_000,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let x = half * XGK[j];
        let s = f(center - x) + f(center + x);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    let value = resk * half;
    let error = ((resk - resg) * half).abs();
    (value, error)
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_breaks(f, &[a, b], opts)
}

/// Integrate `f` over `[breaks[0], breaks[last]]`, seeding the adaptive
/// partition with the supplied (sorted) breakpoints.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if breaks.len() < 2 {
        return Err(Error::domain("quadrature needs at least two breakpoints"));
    }
    if breaks.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::domain("quadrature breakpoints must be sorted"));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    let mut total_value = 0.0;
    let mut total_error = 0.0;
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, error) = kronrod(&mut f, w[0], w[1]);
        evaluations += 15;
        total_value += value;
        total_error += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    // Segments too narrow to bisect are frozen here.
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    loop {
        if !total_value.is_finite() || !total_error.is_finite() {
            return Err(Error::numeric(format!(
                "quadrature produced a non-finite partial sum ({total_value}, err {total_error})"
            )));
        }
        let target = opts.abs_tol.max(opts.rel_tol * total_value.abs());
        if total_error <= target {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) <= 4.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
            frozen_value += worst.value;
            frozen_error += worst.error;
            // Nothing left that can be refined.
            if heap.is_empty() {
                break;
            }
            continue;
        }
        if heap.len() + 2 > opts.max_intervals {
            return Err(Error::numeric(format!(
                "quadrature did not converge within {} intervals: value {:e}, error estimate {:e}, target {:e}",
                opts.max_intervals, total_value, total_error, target
            )));
        }
        let (v1, e1) = kronrod(&mut f, worst.a, mid);
        let (v2, e2) = kronrod(&mut f, mid, worst.b);
        evaluations += 30;
        total_value += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum from the partition to shed drift accumulated by incremental updates.
    let mut segments: Vec<Segment> = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = crate::numeric::sum::sum(segments.iter().map(|s| s.value)) + frozen_value;
    let error = crate::numeric::sum::sum(segments.iter().map(|s| s.error)) + frozen_error;
    let target = opts.abs_tol.max(opts.rel_tol * value.abs());
    if error > target * 10.0 {
        return Err(Error::numeric(format!(
            "quadrature stalled at roundoff: value {value:e}, error estimate {error:e}, target {target:e}"
        )));
    }
    Ok(QuadResult {
        value,
        error,
        intervals: segments.len(),
        evaluations,
    })
}

/// Breakpoints on `[a, b]` that shrink geometrically towards `a` down to
/// width `finest`, for integrands singular or sharply peaked at `a`.
pub fn geometric_breaks(a: f64, b: f64, finest: f64) -> Vec<f64> {
    let len = b - a;
    let mut rel = Vec::new();
    let mut w = 0.5;
    while w * len > finest && rel.len() < 200 {
        rel.push(w);
        w *= 0.5;
    }
    let mut out = Vec::with_capacity(rel.len() + 2);
    out.push(a);
    for r in rel.iter().rev() {
        out.push(a + r * len);
    }
    out.push(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn inverse_sqrt_singularity() {
        let br = geometric_breaks(0.0, 1.0, 1e-14);
        let r = integrate_breaks(|x| 1.0 / x.sqrt(), &br, QuadOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn oscillatory() {
        let r = integrate(|x| (20.0 * x).cos(), 0.0, 3.0, QuadOptions::rel(1e-12)).unwrap();
        assert!((r.value - (60.0f64).sin() / 20.0).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadOptions {
            max_intervals: 4,
            ..QuadOptions::default()
        };
        assert!(integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, opts).is_err());
    }
}
