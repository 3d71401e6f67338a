//! Level sets of sampled paths, their sections and projections.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::sampler::SamplePath;
use crate::field::spec::{FieldSpec, StPoint};
use crate::hitting::estimate::FloorPolicy;
use crate::potential::measure::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Selector {
    Full,
    /// Nodes at the grid time nearest `t`.
    TimeSection(f64),
    /// Nodes at the grid site nearest `x`.
    SpaceSection(f64),
    /// Times at which some site is in the level set.
    TimeProjection,
    /// Sites which are in the level set at some time.
    SpaceProjection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetCloud {
    /// Grid nodes with `|u - z| <= tol`, ordered (time, site).
    pub points: Vec<StPoint>,
    pub selector: Selector,
    pub z: Vec<f64>,
    pub tol: f64,
}

impl LevelSetCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Coordinates seen by the selector: `(t, x)` pairs for the full set,
    /// the free coordinate for sections, deduplicated values for projections.
    pub fn coordinates(&self) -> PointSet {
        let mut c: Vec<f64> = match self.selector {
            Selector::Full => {
                let v: Vec<f64> = self.points.iter().flat_map(|p| [p.t, p.x]).collect();
                return PointSet::new(2, v).expect("dimension 2");
            }
            Selector::TimeSection(_) => self.points.iter().map(|p| p.x).collect(),
            Selector::SpaceSection(_) => self.points.iter().map(|p| p.t).collect(),
            Selector::TimeProjection => self.points.iter().map(|p| p.t).collect(),
            Selector::SpaceProjection => self.points.iter().map(|p| p.x).collect(),
        };
        c.sort_by(f64::total_cmp);
        c.dedup();
        PointSet::new(1, c).expect("dimension 1")
    }
}

fn nearest(v: &[f64], x: f64) -> usize {
    let i = v.partition_point(|&a| a < x);
    if i == 0 {
        0
    } else if i == v.len() || x - v[i - 1] <= v[i] - x {
        i - 1
    } else {
        i
    }
}

/// Grid nodes of `path` within `tol` (Euclidean) of `z`, per selector.
pub fn level_set(path: &SamplePath, z: &[f64], tol: f64, selector: Selector) -> LevelSetCloud {
    let (times, sites) = (path.grid.times(), path.grid.sites());
    let tr = match selector {
        Selector::TimeSection(t) => {
            let i = nearest(times, t);
            i..i + 1
        }
        _ => 0..times.len(),
    };
    let xr = match selector {
        Selector::SpaceSection(x) => {
            let i = nearest(sites, x);
            i..i + 1
        }
        _ => 0..sites.len(),
    };
    let mut node = vec![0.0; path.d];
    let mut points = Vec::new();
    let t2 = tol * tol;
    for ti in tr {
        for xi in xr.clone() {
            path.node(ti, xi, &mut node);
            let q: f64 = node.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            if q <= t2 {
                points.push(StPoint::new(times[ti], sites[xi]));
            }
        }
    }
    LevelSetCloud {
        points,
        selector,
        z: z.to_vec(),
        tol,
    }
}

/// Smallest tolerance allowed for `selector` on `path`: the predicted
/// sup-increment over one grid step along the axes the selector spans.
pub fn resolution_floor(path: &SamplePath, spec: &FieldSpec, selector: Selector, floor: &FloorPolicy) -> Result<f64> {
    if path.d != spec.d() {
        return Err(Error::Mismatch(format!("path in R^{} for a field in R^{}", path.d, spec.d())));
    }
    let dt = path.grid.max_dt();
    let dx = path.grid.sites().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let (dt, dx) = match selector {
        Selector::TimeSection(_) => (0.0, dx),
        Selector::SpaceSection(_) => (dt, 0.0),
        _ => (dt, dx),
    };
    Ok(floor.cell_increment(spec, dt, dx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::spec::GridSpec;

    fn constant(c: f64) -> SamplePath {
        let grid = GridSpec::uniform(0.1, 1.0, 4, 5).unwrap();
        SamplePath::new(1, grid, 0, 8, vec![c; 20]).unwrap()
    }

    #[test]
    fn trivial_level_sets() {
        let p = constant(0.3);
        assert_eq!(level_set(&p, &[0.3], 1e-9, Selector::Full).len(), 20);
        assert!(level_set(&p, &[100.0], 1.0, Selector::Full).is_empty());
        let sec = level_set(&p, &[0.3], 1e-9, Selector::TimeSection(0.4));
        assert_eq!(sec.len(), 5);
        assert!(sec.points.iter().all(|q| q.t == 0.4));
        let proj = level_set(&p, &[0.3], 1e-9, Selector::TimeProjection);
        assert_eq!(proj.coordinates().len(), 4);
    }
}
