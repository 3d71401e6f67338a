//! Independent capacity solver: accelerated projected gradient (FISTA)
//! on the weight simplex, intended for finer grids than the main solver.

use crate::error::{Error, Result};
use crate::potential::capacity::kernel_matrix;
use crate::potential::kernel::{KernelOrder, MetricKind};
use crate::potential::measure::{Diagonal, PointSet};

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    pub max_iter: usize,
    /// Stop when the relative energy change over 100 iterations drops below this.
    pub rel_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_iter: 200_000,
            rel_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub capacity: f64,
    pub energy: f64,
    pub iterations: usize,
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

fn matvec(k: &[f64], n: usize, w: &[f64], out: &mut [f64]) {
    for i in 0..n {
        out[i] = k[i * n..(i + 1) * n].iter().zip(w).map(|(a, b)| a * b).sum();
    }
}

fn quad(k: &[f64], n: usize, w: &[f64], scratch: &mut [f64]) -> f64 {
    matvec(k, n, w, scratch);
    scratch.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// Largest eigenvalue of a symmetric non-negative matrix by power iteration.
fn spectral_radius(k: &[f64], n: usize) -> f64 {
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut kv = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        matvec(k, n, &v, &mut kv);
        let norm = kv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm;
        for (a, b) in v.iter_mut().zip(&kv) {
            *a = b / norm;
        }
        if (next - lambda).abs() <= 1e-12 * next {
            return next;
        }
        lambda = next;
    }
    lambda
}

pub fn capacity_oracle(
    target: &PointSet,
    order: KernelOrder,
    kind: MetricKind,
    diag: &Diagonal,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    if target.is_empty() {
        return Ok(OracleResult {
            capacity: 0.0,
            energy: f64::INFINITY,
            iterations: 0,
        });
    }
    if order.beta < 0.0 {
        return Ok(OracleResult {
            capacity: 1.0,
            energy: 1.0,
            iterations: 0,
        });
    }
    let n = target.len();
    let k = kernel_matrix(target, order, kind, diag)?;
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("oracle needs a finite kernel matrix; use a cell diagonal"));
    }
    let step = 1.0 / (2.0 * spectral_radius(&k, n));
    let mut w = vec![1.0 / n as f64; n];
    let mut y = w.clone();
    let mut grad = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut t = 1.0f64;
    let mut energy = quad(&k, n, &w, &mut scratch);
    let mut checkpoint = energy;
    let mut it = 0;
    while it < opts.max_iter {
        it += 1;
        matvec(&k, n, &y, &mut grad);
        let mut next: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - step * 2.0 * g).collect();
        project_simplex(&mut next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let e_next = quad(&k, n, &next, &mut scratch);
        // Restart the momentum whenever the energy goes up.
        if e_next > energy {
            y.copy_from_slice(&w);
            t = 1.0;
            continue;
        }
        for i in 0..n {
            y[i] = next[i] + (t - 1.0) / t_next * (next[i] - w[i]);
        }
        w = next;
        t = t_next;
        energy = e_next;
        if it % 100 == 0 {
            if (checkpoint - energy).abs() <= opts.rel_tol * energy {
                break;
            }
            checkpoint = energy;
        }
    }
    Ok(OracleResult {
        capacity: 1.0 / energy,
        energy,
        iterations: it,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_lands_on_simplex() {
        let mut v = vec![0.5, 2.0, -1.0, 0.3];
        project_simplex(&mut v);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(v.iter().all(|x| *x >= 0.0));
        assert_eq!(v, vec![0.0, 1.0, 0.0, 0.0]);
    }
}
