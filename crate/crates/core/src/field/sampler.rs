//! Exact spectral sampler: each cosine mode of each component evolves by its
//! exact Ornstein–Uhlenbeck recursion on the time grid, started from its true
//! marginal at the first grid time.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::spec::{FieldSpec, GridSpec};
use crate::field::spectral::{mode_variance_unchecked, ou_step, phi, SpectralModel};
use crate::numeric::dct::CosineTransform;
use crate::rng::{replica_seed, Stream};

/// One realization of `u` on a grid, values ordered (component, time, site).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub d: usize,
    pub grid: GridSpec,
    pub seed: u64,
    pub k_max: usize,
    pub values: Vec<f64>,
}

impl SamplePath {
    pub fn new(d: usize, grid: GridSpec, seed: u64, k_max: usize, values: Vec<f64>) -> Result<Self> {
        let want = d * grid.nt() * grid.nx();
        if values.len() != want {
            return Err(Error::Mismatch(format!("{} values for a {want}-entry path", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("sample path has non-finite entries"));
        }
        Ok(Self {
            d,
            grid,
            seed,
            k_max,
            values,
        })
    }

    pub fn nt(&self) -> usize {
        self.grid.nt()
    }

    pub fn nx(&self) -> usize {
        self.grid.nx()
    }

    #[inline]
    pub fn value(&self, i: usize, ti: usize, xi: usize) -> f64 {
        self.values[(i * self.grid.nt() + ti) * self.grid.nx() + xi]
    }

    /// The `d`-vector at a grid node.
    pub fn node(&self, ti: usize, xi: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.d) {
            *o = self.value(i, ti, xi);
        }
    }

    /// Values of component `i`, ordered (time, site).
    pub fn component(&self, i: usize) -> &[f64] {
        let n = self.grid.nt() * self.grid.nx();
        &self.values[i * n..(i + 1) * n]
    }
}

/// Maps mode coefficients to values at the grid sites and back.
#[derive(Debug)]
pub(crate) enum Synthesizer {
    Fast(CosineTransform),
    Direct { sites: Vec<f64>, modes: usize, table: Vec<f64> },
}

impl Synthesizer {
    pub(crate) fn new(grid: &GridSpec, modes: usize) -> Self {
        let nx = grid.nx();
        if grid.has_full_uniform_sites() && nx >= 3 {
            Synthesizer::Fast(CosineTransform::new(nx - 1))
        } else {
            let mut table = Vec::with_capacity(nx * modes);
            for &x in grid.sites() {
                table.extend((0..modes).map(|k| phi(k, x)));
            }
            Synthesizer::Direct {
                sites: grid.sites().to_vec(),
                modes,
                table,
            }
        }
    }

    /// `out[s] = sum_k coeffs[k] phi_k(x_s)`.
    pub(crate) fn synthesize(&mut self, coeffs: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) {
        match self {
            Synthesizer::Fast(t) => {
                scratch.clear();
                scratch.push(coeffs[0]);
                scratch.extend(coeffs[1..].iter().map(|c| std::f64::consts::SQRT_2 * c));
                t.synthesize(scratch, out);
            }
            Synthesizer::Direct { modes, table, .. } => {
                for (s, o) in out.iter_mut().enumerate() {
                    let row = &table[s * *modes..(s + 1) * *modes];
                    *o = row.iter().zip(coeffs).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// Trapezoid-rule projections `int_0^1 f phi_k` from values at the sites,
    /// which must span `[0, 1]`.
    pub(crate) fn project(&mut self, values: &[f64], out: &mut [f64]) {
        match self {
            Synthesizer::Fast(t) => {
                t.trapezoid_moments(values, out.len(), out);
                for o in out.iter_mut().skip(1) {
                    *o *= std::f64::consts::SQRT_2;
                }
            }
            Synthesizer::Direct { sites, modes, table } => {
                let n = sites.len();
                let w: Vec<f64> = (0..n)
                    .map(|s| {
                        let left = if s > 0 { sites[s] - sites[s - 1] } else { 0.0 };
                        let right = if s + 1 < n { sites[s + 1] - sites[s] } else { 0.0 };
                        0.5 * (left + right)
                    })
                    .collect();
                for (k, o) in out.iter_mut().enumerate() {
                    *o = (0..n).map(|s| w[s] * values[s] * table[s * *modes + k]).sum();
                }
            }
        }
    }
}

/// Per-step recursion coefficients, recomputed only when the step changes.
#[derive(Debug)]
pub(crate) struct StepCoefs {
    dt: f64,
    pub(crate) decay: Vec<f64>,
    pub(crate) sd: Vec<f64>,
}

impl StepCoefs {
    pub(crate) fn new(modes: usize) -> Self {
        Self {
            dt: f64::NAN,
            decay: vec![0.0; modes],
            sd: vec![0.0; modes],
        }
    }

    pub(crate) fn update(&mut self, dt: f64) {
        if dt == self.dt {
            return;
        }
        self.dt = dt;
        for k in 0..self.decay.len() {
            let (a, s) = ou_step(k, dt);
            self.decay[k] = a;
            self.sd[k] = s;
        }
    }
}

/// Time steps of a grid. Uniform grids use the nominal step throughout.
pub(crate) fn grid_steps(grid: &GridSpec) -> Vec<f64> {
    let t = grid.times();
    if grid.is_uniform() && t.len() >= 2 {
        let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        vec![dt; t.len() - 1]
    } else {
        t.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Mode states and noise streams of all components of one path.
#[derive(Debug)]
pub(crate) struct ModeBank {
    pub(crate) d: usize,
    pub(crate) modes: usize,
    streams: Vec<Stream>,
    /// Mode amplitudes of `v`, indexed `i * modes + k`.
    pub(crate) state: Vec<f64>,
}

impl ModeBank {
    pub(crate) fn new(seed: u64, d: usize, modes: usize, t_first: f64) -> Self {
        let mut streams = Vec::with_capacity(d * modes);
        let mut state = Vec::with_capacity(d * modes);
        for i in 0..d {
            for k in 0..modes {
                let mut s = Stream::field_mode(seed, 0, i, k);
                state.push(mode_variance_unchecked(k, t_first).sqrt() * s.normal());
                streams.push(s);
            }
        }
        Self { d, modes, streams, state }
    }

    /// One exact step; the standard normals used are written to `noise` when given.
    pub(crate) fn advance(&mut self, coefs: &StepCoefs, mut noise: Option<&mut [f64]>) {
        for i in 0..self.d {
            for k in 0..self.modes {
                let idx = i * self.modes + k;
                let xi = self.streams[idx].normal();
                self.state[idx] = coefs.decay[k] * self.state[idx] + coefs.sd[k] * xi;
                if let Some(n) = noise.as_deref_mut() {
                    n[idx] = xi;
                }
            }
        }
    }
}

/// Writes `u = sigma v` at one time into the path buffer.
pub(crate) fn store_coupled(spec: &FieldSpec, v: &[f64], nx: usize, nt: usize, ti: usize, values: &mut [f64]) {
    let d = spec.d();
    let identity = spec.is_identity();
    for i in 0..d {
        let dst = &mut values[(i * nt + ti) * nx..(i * nt + ti + 1) * nx];
        if identity {
            dst.copy_from_slice(&v[i * nx..(i + 1) * nx]);
        } else {
            for (s, o) in dst.iter_mut().enumerate() {
                *o = (0..d).map(|l| spec.sigma()[(i, l)] * v[l * nx + s]).sum();
            }
        }
    }
}

/// Drift-free path of `u = sigma v` on `grid`, determined by `(spec, grid, seed, k_max)`.
pub fn sample_path(spec: &FieldSpec, grid: &GridSpec, seed: u64, k_max: usize) -> Result<SamplePath> {
    sample_modes(spec, grid, seed, k_max, false)
}

/// The same path as [`sample_path`] minus the mode-0 value at the first
/// grid time. That value is `N(0, t_first)` in every component and
/// independent of what is returned, which lets callers integrate it out.
pub fn sample_path_split(spec: &FieldSpec, grid: &GridSpec, seed: u64, k_max: usize) -> Result<SamplePath> {
    if !spec.is_identity() {
        return Err(Error::domain("the split sampler needs an identity coupling"));
    }
    sample_modes(spec, grid, seed, k_max, true)
}

fn sample_modes(spec: &FieldSpec, grid: &GridSpec, seed: u64, k_max: usize, split: bool) -> Result<SamplePath> {
    let (d, nt, nx) = (spec.d(), grid.nt(), grid.nx());
    let mut values = vec![0.0; d * nt * nx];
    stream_times(spec, grid, seed, k_max, split, |ti, v| store_coupled(spec, v, nx, nt, ti, &mut values))?;
    SamplePath::new(d, grid.clone(), seed, k_max, values)
}

/// Runs the sampler without storing the path: `sink(ti, v)` receives `v`
/// (not `u`) at every site, laid out `[component * nx + site]`.
pub(crate) fn stream_times<F: FnMut(usize, &[f64])>(
    spec: &FieldSpec,
    grid: &GridSpec,
    seed: u64,
    k_max: usize,
    split: bool,
    mut sink: F,
) -> Result<()> {
    let model = SpectralModel::new(k_max)?;
    grid.check_against(spec)?;
    let (d, nt, nx, modes) = (spec.d(), grid.nt(), grid.nx(), model.modes());
    let mut synth = Synthesizer::new(grid, modes);
    let mut bank = ModeBank::new(seed, d, modes, grid.times()[0]);
    if split {
        for i in 0..d {
            bank.state[i * modes] = 0.0;
        }
    }
    let mut coefs = StepCoefs::new(modes);
    let steps = grid_steps(grid);
    let mut v = vec![0.0; d * nx];
    let mut scratch = Vec::new();
    for ti in 0..nt {
        if ti > 0 {
            coefs.update(steps[ti - 1]);
            bank.advance(&coefs, None);
        }
        for i in 0..d {
            synth.synthesize(&bank.state[i * modes..(i + 1) * modes], &mut scratch, &mut v[i * nx..(i + 1) * nx]);
        }
        sink(ti, &v);
    }
    Ok(())
}

/// Paths for replicas `0..replicas`, replica `r` using [`replica_seed`].
pub fn sample_ensemble(spec: &FieldSpec, grid: &GridSpec, seed: u64, replicas: usize, k_max: usize) -> Result<Vec<SamplePath>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| sample_path(spec, grid, replica_seed(seed, r), k_max))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_sensitive() {
        let spec = FieldSpec::identity(2, 1.0, 0.1).unwrap();
        let grid = GridSpec::uniform(0.1, 1.0, 6, 9).unwrap();
        let a = sample_path(&spec, &grid, 11, 32).unwrap();
        let b = sample_path(&spec, &grid, 11, 32).unwrap();
        let c = sample_path(&spec, &grid, 12, 32).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert_eq!(a.values.len(), 2 * 6 * 9);
    }

    #[test]
    fn fast_and_direct_synthesis_agree() {
        let spec = FieldSpec::identity(1, 1.0, 0.1).unwrap();
        let full = GridSpec::uniform(0.1, 1.0, 4, 17).unwrap();
        let sites: Vec<f64> = full.sites().to_vec();
        let custom = GridSpec::custom(full.times().to_vec(), sites).unwrap();
        // The custom grid takes the direct route but uses per-step differences.
        let a = sample_path(&spec, &full, 5, 40).unwrap();
        let b = sample_path(&spec, &custom, 5, 40).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_inverts_synthesis_on_low_modes() {
        let grid = GridSpec::uniform(0.1, 1.0, 2, 65).unwrap();
        let mut fast = Synthesizer::new(&grid, 8);
        let coeffs = [0.3, -1.0, 0.5, 0.0, 0.25, 0.0, 0.0, 0.1];
        let mut vals = vec![0.0; 65];
        let mut scratch = Vec::new();
        fast.synthesize(&coeffs, &mut scratch, &mut vals);
        let mut back = vec![0.0; 8];
        fast.project(&vals, &mut back);
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
