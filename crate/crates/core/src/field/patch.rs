//! Exact joint sampling of the field at an arbitrary finite set of nodes.
//!
//! The covariance matrix of `v` at the nodes is factored once by a symmetric
//! eigendecomposition; each draw is then a matrix-vector product. This is the
//! tool for many replicas of small local patches, where evolving every mode
//! of a full path would be wasted work.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::field::covariance::CovarianceSource;
use crate::field::sampler::SamplePath;
use crate::field::spec::{FieldSpec, GridSpec, StPoint};
use crate::rng::{purpose, Stream};

#[derive(Debug, Clone)]
pub struct PatchSampler {
    nodes: Vec<StPoint>,
    /// Row-major `n x n` factor `L` with `L L^T = C`.
    factor: Vec<f64>,
    /// Most negative eigenvalue clipped to zero.
    pub clipped: f64,
}

impl PatchSampler {
    pub fn new(nodes: Vec<StPoint>, source: &dyn CovarianceSource) -> Result<Self> {
        let n = nodes.len();
        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = source.cov(nodes[i], nodes[j]);
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        Self::from_matrix(nodes, c)
    }

    /// Sampler for a given covariance matrix of `v` at the nodes.
    pub fn from_matrix(nodes: Vec<StPoint>, c: DMatrix<f64>) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::domain("patch needs at least one node"));
        }
        if c.nrows() != n || c.ncols() != n {
            return Err(Error::Mismatch(format!("{}x{} covariance for {n} nodes", c.nrows(), c.ncols())));
        }
        let eig = SymmetricEigen::new(c);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let clipped = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.min(v));
        if clipped < -1e-9 * scale.max(1.0) {
            return Err(Error::numeric(format!(
                "patch covariance is not positive semi-definite (eigenvalue {clipped:e})"
            )));
        }
        let mut factor = vec![0.0; n * n];
        for j in 0..n {
            let s = eig.eigenvalues[j].max(0.0).sqrt();
            for i in 0..n {
                factor[i * n + j] = eig.eigenvectors[(i, j)] * s;
            }
        }
        Ok(Self { nodes, factor, clipped })
    }

    /// Sampler for every node of a grid, ordered (time, site).
    pub fn for_grid(grid: &GridSpec, source: &dyn CovarianceSource) -> Result<Self> {
        let nodes = (0..grid.nt())
            .flat_map(|ti| (0..grid.nx()).map(move |xi| (ti, xi)))
            .map(|(ti, xi)| grid.point(ti, xi))
            .collect();
        Self::new(nodes, source)
    }

    /// Draw of a sampler built by [`PatchSampler::for_grid`] as a path.
    /// `k_max = 0` marks the exact kernel.
    pub fn grid_path(&self, spec: &FieldSpec, grid: &GridSpec, seed: u64, replica: u64) -> Result<SamplePath> {
        let (n, d) = (self.nodes.len(), spec.d());
        if n != grid.nt() * grid.nx() {
            return Err(Error::Mismatch(format!("{n} patch nodes for a {}-node grid", grid.nt() * grid.nx())));
        }
        let mut buf = vec![0.0; n * d];
        self.sample(spec, seed, replica, &mut buf);
        let mut values = vec![0.0; n * d];
        for node in 0..n {
            for i in 0..d {
                values[i * n + node] = buf[node * d + i];
            }
        }
        SamplePath::new(d, grid.clone(), seed, 0, values)
    }

    pub fn nodes(&self) -> &[StPoint] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// One draw of `v` (unit coupling) at the nodes for a given component.
    pub fn sample_component(&self, seed: u64, replica: u64, component: usize, out: &mut [f64]) {
        let n = self.nodes.len();
        let mut s = Stream::new(seed, &[purpose::PATCH, replica, component as u64], 0);
        let xi: Vec<f64> = (0..n).map(|_| s.normal()).collect();
        let xi = DVector::from_vec(xi);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.factor[i * n..(i + 1) * n].iter().zip(xi.iter()).map(|(a, b)| a * b).sum();
        }
    }

    /// One draw of `u = sigma v`, laid out `[node][component]`.
    pub fn sample(&self, spec: &FieldSpec, seed: u64, replica: u64, out: &mut [f64]) {
        let (n, d) = (self.nodes.len(), spec.d());
        let mut v = vec![0.0; n * d];
        for i in 0..d {
            self.sample_component(seed, replica, i, &mut v[i * n..(i + 1) * n]);
        }
        let identity = spec.is_identity();
        for node in 0..n {
            for i in 0..d {
                out[node * d + i] = if identity {
                    v[i * n + node]
                } else {
                    (0..d).map(|l| spec.sigma()[(i, l)] * v[l * n + node]).sum()
                };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::covariance::ExactKernel;

    #[test]
    fn empirical_covariance_matches() {
        let nodes = vec![StPoint::new(0.5, 0.2), StPoint::new(0.52, 0.25), StPoint::new(0.6, 0.9)];
        let ps = PatchSampler::new(nodes.clone(), &ExactKernel).unwrap();
        let n = 20000;
        let mut acc = [0.0; 3];
        let mut buf = [0.0; 3];
        for r in 0..n {
            ps.sample_component(3, r, 0, &mut buf);
            acc[0] += buf[0] * buf[0];
            acc[1] += buf[0] * buf[1];
            acc[2] += buf[1] * buf[2];
        }
        let want = [
            ExactKernel.cov(nodes[0], nodes[0]),
            ExactKernel.cov(nodes[0], nodes[1]),
            ExactKernel.cov(nodes[1], nodes[2]),
        ];
        for (a, w) in acc.iter().zip(want) {
            // Loose: about 5 standard errors at this sample size.
            assert!((a / n as f64 - w).abs() < 5.0 * 0.6 * (2.0 / n as f64).sqrt(), "{} vs {w}", a / n as f64);
        }
    }
}
