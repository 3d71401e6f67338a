//! Type-I discrete cosine transform on a uniform grid of `n + 1` nodes,
//! computed through a complex FFT of the even extension (length `2n`).

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct CosineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for CosineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CosineTransform").field("n", &self.n).finish()
    }
}

impl CosineTransform {
    /// Transform for nodes `j = 0..=n`; `n >= 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "cosine transform needs at least two nodes");
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        Self {
            n,
            fft,
            buf: vec![Complex64::default(); 2 * n],
            scratch,
        }
    }

    pub fn nodes(&self) -> usize {
        self.n + 1
    }

    /// Index in `0..=n` that mode `k` aliases to on this grid.
    #[inline]
    pub fn fold(&self, k: usize) -> usize {
        let m = k % (2 * self.n);
        if m > self.n {
            2 * self.n - m
        } else {
            m
        }
    }

    /// `out[j] = sum_k coeffs[k] * cos(pi k j / n)` for `j = 0..=n`.
    /// Coefficients beyond `n` are folded onto their aliases.
    pub fn synthesize(&mut self, coeffs: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(out.len(), n + 1);
        let mut folded = vec![0.0; n + 1];
        if coeffs.len() <= n + 1 {
            folded[..coeffs.len()].copy_from_slice(coeffs);
        } else {
            for (k, &c) in coeffs.iter().enumerate() {
                folded[self.fold(k)] += c;
            }
        }
        self.transform(&folded, out);
    }

    /// Symmetric kernel: `out[j] = sum_{k=0}^{n} a[k] cos(pi k j / n)`.
    fn transform(&mut self, a: &[f64], out: &mut [f64]) {
        let n = self.n;
        if n == 1 {
            out[0] = a[0] + a[1];
            out[1] = a[0] - a[1];
            return;
        }
        for k in 0..=n {
            self.buf[k] = Complex64::new(a[k], 0.0);
        }
        for k in 1..n {
            self.buf[2 * n - k] = Complex64::new(a[k], 0.0);
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (j, o) in out.iter_mut().enumerate() {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *o = 0.5 * (self.buf[j].re + a[0] + sign * a[n]);
        }
    }

    /// Trapezoid-rule cosine moments `h * sum_j w_j f_j cos(pi k j / n)` for
    /// `k = 0..modes`, with half weights at both ends and `h = 1/n`.
    pub fn trapezoid_moments(&mut self, values: &[f64], modes: usize, out: &mut [f64]) {
        let n = self.n;
        assert_eq!(values.len(), n + 1);
        assert_eq!(out.len(), modes);
        let h = 1.0 / n as f64;
        let mut weighted = values.iter().map(|v| v * h).collect::<Vec<_>>();
        weighted[0] *= 0.5;
        weighted[n] *= 0.5;
        let mut full = vec![0.0; n + 1];
        self.transform(&weighted, &mut full);
        for (k, o) in out.iter_mut().enumerate() {
            *o = full[self.fold(k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn direct(coeffs: &[f64], n: usize) -> Vec<f64> {
        (0..=n)
            .map(|j| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * (PI * (k * j) as f64 / n as f64).cos())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum_with_folding() {
        for &(n, modes) in &[(1usize, 3usize), (8, 5), (8, 9), (16, 40), (7, 30)] {
            let coeffs: Vec<f64> = (0..modes).map(|k| ((k * 7 + 3) % 11) as f64 - 5.0).collect();
            let mut t = CosineTransform::new(n);
            let mut out = vec![0.0; n + 1];
            t.synthesize(&coeffs, &mut out);
            let want = direct(&coeffs, n);
            for (a, b) in out.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10, "n={n} modes={modes}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn trapezoid_moments_of_cosine() {
        let n = 32;
        let mut t = CosineTransform::new(n);
        let f: Vec<f64> = (0..=n).map(|j| (3.0 * PI * j as f64 / n as f64).cos()).collect();
        let mut m = vec![0.0; 6];
        t.trapezoid_moments(&f, 6, &mut m);
        for (k, v) in m.iter().enumerate() {
            let want = if k == 3 { 0.5 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "k={k}: {v}");
        }
    }
}
