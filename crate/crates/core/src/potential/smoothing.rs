//! Energy reduction under convolution with a box mollifier.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::kernel::{KernelOrder, MetricKind};
use crate::potential::measure::{energy, Diagonal, DiscreteMeasure, PointSet};

/// How the atoms of the input measure are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SmoothingBase {
    /// Point masses: the energy before smoothing is `+inf` for `alpha >= 0`.
    Point,
    /// Each atom is spread uniformly over a cell of the sub-grid side
    /// `width / per_axis`, so both energies are finite.
    Cells,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingOptions {
    /// Sub-atoms per axis when splitting an atom over the mollifier box.
    pub per_axis: usize,
    pub base: SmoothingBase,
}

impl Default for SmoothingOptions {
    fn default() -> Self {
        Self {
            per_axis: 9,
            base: SmoothingBase::Point,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothingCheck {
    pub alpha: f64,
    pub width: f64,
    pub before: f64,
    pub after: f64,
    /// `after / before` (0 when `before` is infinite and `after` finite).
    pub ratio: f64,
    pub smoothed_atoms: usize,
}

impl SmoothingCheck {
    /// `after <= before`, up to a relative rounding slack.
    pub fn holds(&self) -> bool {
        self.after <= self.before * (1.0 + 1e-12)
    }
}

/// `g * mu` for the uniform box kernel `g` of side `width`, discretized by
/// splitting each atom over a cell-centred `per_axis^d` sub-grid.
pub fn mollify(mu: &DiscreteMeasure, width: f64, per_axis: usize) -> Result<DiscreteMeasure> {
    if !(width > 0.0) || per_axis == 0 {
        return Err(Error::domain("mollifier width and resolution must be positive"));
    }
    let d = mu.dim();
    let cells = per_axis.checked_pow(d as u32).ok_or_else(|| Error::domain("sub-grid too large"))?;
    let h = width / per_axis as f64;
    let offsets: Vec<f64> = (0..per_axis).map(|i| -0.5 * width + h * (i as f64 + 0.5)).collect();
    let mut coords = Vec::with_capacity(mu.len() * cells * d);
    let mut masses = Vec::with_capacity(mu.len() * cells);
    for (p, &w) in mu.atoms().iter().zip(mu.weights()) {
        for c in 0..cells {
            let mut rest = c;
            for &x in p {
                coords.push(x + offsets[rest % per_axis]);
                rest /= per_axis;
            }
            masses.push(w / cells as f64);
        }
    }
    DiscreteMeasure::from_masses(PointSet::new(d, coords)?, masses)
}

/// Riesz energies `I_alpha(mu)` and `I_alpha(g * mu)` (log kernel for
/// `alpha = 0`). Cell self-energies are available for `d <= 2`.
pub fn smoothing_check(mu: &DiscreteMeasure, width: f64, alpha: f64, opts: &SmoothingOptions) -> Result<SmoothingCheck> {
    let d = mu.dim();
    if alpha >= d as f64 {
        return Err(Error::domain(format!("alpha = {alpha} must be below the dimension {d}")));
    }
    let kind = MetricKind::Euclidean;
    let smoothed = mollify(mu, width, opts.per_axis)?;
    let diam = mu.atoms().diameter(kind) + width * (d as f64).sqrt();
    let order = KernelOrder::for_diameter(alpha, diam);
    let sub = Diagonal::Cell(vec![width / opts.per_axis as f64; d]);
    let before = match opts.base {
        SmoothingBase::Point => energy(mu, order, kind, &Diagonal::Point)?,
        SmoothingBase::Cells => energy(mu, order, kind, &sub)?,
    };
    let after = energy(&smoothed, order, kind, &sub)?;
    let ratio = if before.is_infinite() {
        if after.is_finite() {
            0.0
        } else {
            f64::NAN
        }
    } else {
        after / before
    };
    Ok(SmoothingCheck {
        alpha,
        width,
        before,
        after,
        ratio,
        smoothed_atoms: smoothed.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_atoms() -> DiscreteMeasure {
        DiscreteMeasure::uniform(PointSet::new(2, vec![0.0, 0.0, 0.5, 0.25]).unwrap()).unwrap()
    }

    #[test]
    fn constant_kernel_is_unchanged() {
        let r = smoothing_check(&two_atoms(), 0.1, -1.0, &SmoothingOptions::default()).unwrap();
        assert!((r.before - 1.0).abs() < 1e-15 && (r.after - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smoothing_removes_point_self_energy() {
        let r = smoothing_check(&two_atoms(), 0.1, 0.5, &SmoothingOptions::default()).unwrap();
        assert!(r.before.is_infinite() && r.after.is_finite());
        assert_eq!(r.smoothed_atoms, 2 * 81);
    }

    #[test]
    fn cell_base_decreases() {
        let opts = SmoothingOptions {
            base: SmoothingBase::Cells,
            ..SmoothingOptions::default()
        };
        for alpha in [0.5, 1.0, 1.5] {
            let r = smoothing_check(&two_atoms(), 0.2, alpha, &opts).unwrap();
            assert!(r.holds() && r.ratio < 1.0, "{r:?}");
        }
    }

    #[test]
    fn mollified_mass_and_merge() {
        let mu = DiscreteMeasure::uniform(PointSet::new(1, vec![0.0, 0.25]).unwrap()).unwrap();
        // Width 0.75 at 3 per axis puts sub-atoms on a 0.25 lattice, so they overlap.
        let g = mollify(&mu, 0.75, 3).unwrap();
        assert_eq!(g.len(), 4);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alpha_at_dimension_is_rejected() {
        assert!(smoothing_check(&two_atoms(), 0.1, 2.0, &SmoothingOptions::default()).is_err());
    }
}
