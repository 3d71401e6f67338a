//! Discrete measures, finite target sets, and their kernel energies.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::numeric::quad::{geometric_breaks, integrate_breaks, QuadOptions};
use crate::numeric::sum::Accumulator;
use crate::potential::kernel::{KernelOrder, MetricKind};

/// Finite point cloud in `R^dim` (flat row-major coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Mismatch("point set needs a positive dimension".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::Mismatch(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("point coordinates must be finite"));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Mismatch("points of differing dimension".into()));
        }
        Self::new(dim, points.concat())
    }

    /// Uniform grid of `n` points on `[a, b]` including both ends.
    pub fn interval_grid(a: f64, b: f64, n: usize) -> Self {
        let coords = if n == 1 {
            vec![0.5 * (a + b)]
        } else {
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        };
        Self { dim: 1, coords }
    }

    /// Cell-centred grid of `n` points on `[a, b]`: the midpoints of `n`
    /// equal cells. Pairs with [`Diagonal::Cell`] of side `(b - a) / n`.
    pub fn interval_cells(a: f64, b: f64, n: usize) -> Self {
        let h = (b - a) / n as f64;
        let coords = (0..n).map(|i| a + h * (i as f64 + 0.5)).collect();
        Self { dim: 1, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Sub-cloud with the given indices, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let coords = idx.iter().flat_map(|&i| self.point(i).iter().copied()).collect();
        Self { dim: self.dim, coords }
    }

    /// Diameter in the given metric (quadratic scan).
    pub fn diameter(&self, kind: MetricKind) -> f64 {
        let n = self.len();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                d = d.max(kind.dist_unchecked(self.point(i), self.point(j)));
            }
        }
        d
    }
}

/// A probability measure with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: PointSet,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: PointSet, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::Mismatch(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.is_empty() {
            return Err(Error::domain("a probability measure needs at least one atom"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::domain("weights must be finite and non-negative"));
        }
        let total: f64 = crate::numeric::sum::sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("weights sum to {total}, not 1")));
        }
        let order = canonical_order(&atoms, &weights);
        for w in order.windows(2) {
            if atoms.point(w[0]) == atoms.point(w[1]) {
                return Err(Error::domain(format!("atoms {} and {} coincide", w[0], w[1])));
            }
        }
        Ok(Self { atoms, weights })
    }

    /// Uniform weights over a point set.
    pub fn uniform(atoms: PointSet) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    /// Normalizes arbitrary non-negative masses, merging coincident atoms.
    pub fn from_masses(atoms: PointSet, masses: Vec<f64>) -> Result<Self> {
        let dim = atoms.dim();
        let order = canonical_order(&atoms, &masses);
        let mut coords = Vec::new();
        let mut merged: Vec<f64> = Vec::new();
        let mut last: Option<&[f64]> = None;
        for &i in &order {
            let p = atoms.point(i);
            if last == Some(p) {
                *merged.last_mut().unwrap() += masses[i];
            } else {
                coords.extend_from_slice(p);
                merged.push(masses[i]);
                last = Some(p);
            }
        }
        let total: f64 = crate::numeric::sum::sum(merged.iter().copied());
        if !(total > 0.0) {
            return Err(Error::domain("total mass must be positive"));
        }
        let mut weights: Vec<f64> = merged.iter().map(|m| m / total).collect();
        // Push the rounding residue onto the heaviest atom.
        let resid = 1.0 - crate::numeric::sum::sum(weights.iter().copied());
        if let Some((imax, _)) = weights.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
            weights[imax] += resid;
        }
        Self::new(PointSet::new(dim, coords)?, weights)
    }

    pub fn atoms(&self) -> &PointSet {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn canonical_order(atoms: &PointSet, weights: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..atoms.len()).collect();
    idx.sort_by(|&a, &b| {
        let pa = atoms.point(a);
        let pb = atoms.point(b);
        for (x, y) in pa.iter().zip(pb) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        weights[a].total_cmp(&weights[b])
    });
    idx
}

/// How the `i == j` terms of an energy double sum are treated.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagonal {
    /// Atoms are point masses: `K(0)` is `+inf` for `beta >= 0`.
    Point,
    /// Diagonal terms dropped.
    Exclude,
    /// Each atom is the centre of a box cell with these side lengths; the
    /// diagonal term is the kernel averaged over pairs of points in a cell.
    Cell(Vec<f64>),
}

/// Mean of `K(dist(X, Y))` for `X, Y` independent and uniform on a box with
/// the given sides. Supports boxes of dimension 1 and 2.
pub fn cell_self_energy(order: KernelOrder, kind: MetricKind, sides: &[f64]) -> Result<f64> {
    kind.check_dim(sides.len())?;
    if sides.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::domain("cell sides must be positive"));
    }
    if order.beta < 0.0 {
        return Ok(1.0);
    }
    // Hausdorff dimension of the cell in the metric.
    let cell_dim = match kind {
        MetricKind::Euclidean => sides.len() as f64,
        MetricKind::Parabolic => 2.0 + (sides.len() - 1) as f64,
    };
    if order.beta >= cell_dim {
        return Ok(f64::INFINITY);
    }
    let opts = QuadOptions::rel(1e-11);
    let kern = |r: f64| -> f64 {
        if r <= 0.0 {
            0.0
        } else if order.beta > 0.0 {
            r.powf(-order.beta)
        } else {
            (order.n0 / r).ln()
        }
    };
    match sides.len() {
        1 => {
            let h = sides[0];
            let br = geometric_breaks(0.0, h, h * 1e-14);
            let v = integrate_breaks(|u| 2.0 * (h - u) / (h * h) * kern(u), &br, opts)?;
            Ok(v.value)
        }
        2 => {
            let (h1, h2) = (sides[0], sides[1]);
            let br1 = geometric_breaks(0.0, h1, h1 * 1e-12);
            let br2 = geometric_breaks(0.0, h2, h2 * 1e-12);
            let inner_opts = QuadOptions::rel(1e-12);
            let mut failure = None;
            let outer = integrate_breaks(
                |u| {
                    let inner = integrate_breaks(
                        |v| {
                            let r = kind.dist_unchecked(&[u, v], &[0.0, 0.0]);
                            (h2 - v) * kern(r)
                        },
                        &br2,
                        inner_opts,
                    );
                    match inner {
                        Ok(r) => 4.0 * (h1 - u) * r.value / (h1 * h1 * h2 * h2),
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                &br1,
                opts,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(outer.value)
        }
        n => Err(Error::domain(format!(
            "cell self-energy is implemented for cells of dimension 1 or 2, got {n}"
        ))),
    }
}

/// `sum_i sum_j w_i w_j K(dist(a_i, a_j))`, accumulated over atoms in
/// canonical (lexicographic) order with compensated summation, so the value
/// is bitwise invariant under relabelling of the atoms.
pub fn energy(mu: &DiscreteMeasure, order: KernelOrder, kind: MetricKind, diag: &Diagonal) -> Result<f64> {
    kind.check_dim(mu.dim())?;
    let diag_value = diagonal_value(order, kind, diag, mu.dim())?;
    let idx = canonical_order(&mu.atoms, &mu.weights);
    let w = &mu.weights;
    if let Some(dv) = diag_value {
        if dv.is_infinite() && idx.iter().any(|&i| w[i] > 0.0) {
            return Ok(f64::INFINITY);
        }
    }
    let mut acc = Accumulator::new();
    for (a, &i) in idx.iter().enumerate() {
        if w[i] == 0.0 {
            continue;
        }
        if let Some(dv) = diag_value {
            acc.add(w[i] * w[i] * dv);
        }
        let pi = mu.atoms.point(i);
        for &j in &idx[a + 1..] {
            if w[j] == 0.0 {
                continue;
            }
            let r = kind.dist_unchecked(pi, mu.atoms.point(j));
            acc.add(2.0 * w[i] * w[j] * order.eval(r)?);
        }
    }
    Ok(acc.value())
}

/// Value used for the `i == j` terms, `None` when they are excluded.
pub(crate) fn diagonal_value(order: KernelOrder, kind: MetricKind, diag: &Diagonal, dim: usize) -> Result<Option<f64>> {
    Ok(match diag {
        Diagonal::Point => Some(order.at_zero()),
        Diagonal::Exclude => None,
        Diagonal::Cell(sides) => {
            if sides.len() != dim {
                return Err(Error::Mismatch(format!(
                    "cell of dimension {} for atoms of dimension {dim}",
                    sides.len()
                )));
            }
            Some(cell_self_energy(order, kind, sides)?)
        }
    })
}

/// Writes one row per atom: coordinates then weight, with a header row.
pub fn write_measure_csv<W: Write>(mu: &DiscreteMeasure, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<String> = (0..mu.dim()).map(|i| format!("x{i}")).collect();
    header.push("weight".into());
    w.write_record(&header).map_err(csv_err)?;
    for (p, wt) in mu.atoms.iter().zip(&mu.weights) {
        let mut row: Vec<String> = p.iter().map(|c| format!("{c:?}")).collect();
        row.push(format!("{wt:?}"));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a measure (or, with weights ignored, a target set) from CSV.
pub fn read_measure_csv<R: Read>(input: R) -> Result<DiscreteMeasure> {
    let (atoms, weights) = read_weighted_rows(input)?;
    DiscreteMeasure::new(atoms, weights)
}

/// Reads the atoms of a CSV measure file, ignoring the weight column.
pub fn read_target_csv<R: Read>(input: R) -> Result<PointSet> {
    Ok(read_weighted_rows(input)?.0)
}

fn read_weighted_rows<R: Read>(input: R) -> Result<(PointSet, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let ncols = rdr.headers().map_err(csv_err)?.len();
    if ncols < 2 {
        return Err(Error::Format("measure CSV needs coordinate columns and a weight column".into()));
    }
    let dim = ncols - 1;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("row {}: `{field}` is not a number", line + 2)))?;
            if c < dim {
                coords.push(v);
            } else {
                weights.push(v);
            }
        }
    }
    Ok((PointSet::new(dim, coords)?, weights))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(beta: f64) -> KernelOrder {
        KernelOrder::new(beta, 10.0).unwrap()
    }

    #[test]
    fn energy_examples() {
        let single = DiscreteMeasure::uniform(PointSet::new(1, vec![0.3]).unwrap()).unwrap();
        assert_eq!(energy(&single, order(-1.0), MetricKind::Euclidean, &Diagonal::Point).unwrap(), 1.0);
        assert_eq!(
            energy(&single, order(0.5), MetricKind::Euclidean, &Diagonal::Point).unwrap(),
            f64::INFINITY
        );
        let two = DiscreteMeasure::uniform(PointSet::new(1, vec![0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(energy(&two, order(1.0), MetricKind::Euclidean, &Diagonal::Exclude).unwrap(), 0.5);
    }

    #[test]
    fn validation() {
        let pts = PointSet::new(1, vec![0.0, 0.0]).unwrap();
        assert!(DiscreteMeasure::new(pts.clone(), vec![0.5, 0.5]).is_err());
        let merged = DiscreteMeasure::from_masses(pts, vec![1.0, 3.0]).unwrap();
        assert_eq!(merged.len(), 1);
        assert!(DiscreteMeasure::new(PointSet::new(1, vec![0.0, 1.0]).unwrap(), vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(PointSet::new(1, vec![0.0, 1.0]).unwrap(), vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn one_dimensional_cell_energy_matches_closed_form() {
        let h = 0.25;
        for beta in [0.25, 0.5, 0.75] {
            let got = cell_self_energy(order(beta), MetricKind::Euclidean, &[h]).unwrap();
            let want = 2.0 * h.powf(-beta) / ((1.0 - beta) * (2.0 - beta));
            assert!((got - want).abs() < 1e-9 * want, "beta={beta}: {got} vs {want}");
        }
        assert_eq!(
            cell_self_energy(order(1.0), MetricKind::Euclidean, &[h]).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn square_cell_energy_by_monte_carlo() {
        // E|X - Y|^{-1/2} for X, Y uniform on the unit square.
        let got = cell_self_energy(order(0.5), MetricKind::Euclidean, &[1.0, 1.0]).unwrap();
        let mut s = crate::rng::Stream::new(5, &[1], 0);
        let n = 400_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let d = ((s.uniform() - s.uniform()).powi(2) + (s.uniform() - s.uniform()).powi(2)).sqrt();
            acc += d.powf(-0.5);
        }
        let mc = acc / n as f64;
        assert!((got - mc).abs() < 0.01 * got, "{got} vs {mc}");
    }

    #[test]
    fn csv_round_trip() {
        let mu = DiscreteMeasure::new(
            PointSet::new(2, vec![0.1, 0.2, -0.3, 1.0 / 3.0]).unwrap(),
            vec![0.25, 0.75],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_measure_csv(&mu, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1,weight\n"));
        assert_eq!(read_measure_csv(&buf[..]).unwrap(), mu);
    }
}
