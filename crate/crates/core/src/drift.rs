//! The equation with a bounded Lipschitz drift, simulated by exponential
//! Euler on the cosine modes, and the discrete Girsanov weights that relate
//! it to the drift-free law.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::sampler::{grid_steps, store_coupled, ModeBank, SamplePath, StepCoefs, Synthesizer};
use crate::field::spec::{DriftDescriptor, FieldSpec, GridSpec, StPoint};
use crate::field::spectral::{lambda, ou_step, SpectralModel};
use crate::numeric::stats::{covariance_se, ks_p_value, ks_statistic, mean_se, variance_se};
use crate::rng::{purpose, Stream};

/// Shape of the drift `b: R^d -> R^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DriftKind {
    Zero,
    /// `b(u) = c`.
    Constant(Vec<f64>),
    /// `b_i(u) = tanh(a u_i)`.
    TanhScale(f64),
    /// `b_i(u) = f(u_i)` with `f` piecewise linear through `(knots, values)`
    /// and constant beyond the end knots.
    Table { knots: Vec<f64>, values: Vec<f64> },
}

/// A drift with its declared sup-norm bound and Lipschitz constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftSpec {
    pub kind: DriftKind,
    pub bound: f64,
    pub lipschitz: f64,
    pub d: usize,
}

/// Number of random points in the declaration audit.
pub const AUDIT_POINTS: usize = 100_000;

impl DriftSpec {
    /// Validates the declaration on a deterministic random audit of
    /// [`AUDIT_POINTS`] points (and as many nearby pairs).
    pub fn new(d: usize, kind: DriftKind, bound: f64, lipschitz: f64) -> Result<Self> {
        if !(bound > 0.0 && lipschitz > 0.0) {
            return Err(Error::domain("drift bound and Lipschitz constant must be positive"));
        }
        match &kind {
            DriftKind::Constant(c) if c.len() != d => {
                return Err(Error::Mismatch(format!("constant drift of length {} for d = {d}", c.len())))
            }
            DriftKind::Constant(c) if c.iter().any(|v| !v.is_finite()) => {
                return Err(Error::domain("constant drift must be finite"))
            }
            DriftKind::TanhScale(a) if !a.is_finite() => return Err(Error::domain("tanh scale must be finite")),
            DriftKind::Table { knots, values } => {
                if knots.len() < 2 || knots.len() != values.len() || knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::domain("drift table needs >= 2 increasing knots with one value each"));
                }
            }
            _ => {}
        }
        let spec = Self { kind, bound, lipschitz, d };
        spec.audit()?;
        Ok(spec)
    }

    pub fn zero(d: usize) -> Self {
        Self {
            kind: DriftKind::Zero,
            bound: 1.0,
            lipschitz: 1.0,
            d,
        }
    }

    /// Builds the drift named in a field description.
    pub fn from_descriptor(desc: &DriftDescriptor, d: usize) -> Result<Self> {
        match desc {
            DriftDescriptor::None => Ok(Self::zero(d)),
            DriftDescriptor::Builtin { name, params } => match name.as_str() {
                "zero" => Ok(Self::zero(d)),
                "constant" => {
                    let bound = params.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
                    Self::new(d, DriftKind::Constant(params.clone()), bound, 1e-12)
                }
                "tanh_scale" => {
                    let a = *params.first().ok_or_else(|| Error::domain("tanh_scale needs its scale"))?;
                    Self::new(d, DriftKind::TanhScale(a), 1.0, a.abs().max(1e-12))
                }
                other => Err(Error::domain(format!("unknown drift `{other}`"))),
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            DriftKind::Zero => true,
            DriftKind::Constant(c) => c.iter().all(|v| *v == 0.0),
            DriftKind::TanhScale(a) => *a == 0.0,
            DriftKind::Table { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    pub fn eval(&self, u: &[f64], out: &mut [f64]) {
        match &self.kind {
            DriftKind::Zero => out.fill(0.0),
            DriftKind::Constant(c) => out.copy_from_slice(c),
            DriftKind::TanhScale(a) => {
                for (o, x) in out.iter_mut().zip(u) {
                    *o = (a * x).tanh();
                }
            }
            DriftKind::Table { knots, values } => {
                for (o, &x) in out.iter_mut().zip(u) {
                    *o = interpolate(knots, values, x);
                }
            }
        }
    }

    fn audit(&self) -> Result<()> {
        let d = self.d;
        let mut s = Stream::new(0, &[purpose::AUDIT, d as u64], 0);
        let (mut u, mut v) = (vec![0.0; d], vec![0.0; d]);
        let (mut bu, mut bv) = (vec![0.0; d], vec![0.0; d]);
        let slack = 1.0 + 1e-9;
        for n in 0..AUDIT_POINTS {
            // Alternate wide and local probes for the Lipschitz quotient.
            let spread = if n % 2 == 0 { 4.0 } else { 0.5 };
            for i in 0..d {
                u[i] = spread * s.normal();
                v[i] = u[i] + 10f64.powi(-((n % 7) as i32)) * s.normal();
            }
            self.eval(&u, &mut bu);
            self.eval(&v, &mut bv);
            let sup = bu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if sup > self.bound * slack {
                return Err(Error::domain(format!(
                    "drift exceeds its declared bound {} (found {sup})",
                    self.bound
                )));
            }
            let num: f64 = bu.iter().zip(&bv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let den: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if den > 0.0 && num > self.lipschitz * den * slack + 1e-15 {
                return Err(Error::domain(format!(
                    "drift exceeds its declared Lipschitz constant {} (quotient {})",
                    self.lipschitz,
                    num / den
                )));
            }
        }
        Ok(())
    }
}

fn interpolate(knots: &[f64], values: &[f64], x: f64) -> f64 {
    if x <= knots[0] {
        return values[0];
    }
    let last = knots.len() - 1;
    if x >= knots[last] {
        return values[last];
    }
    let j = knots.partition_point(|&k| k <= x) - 1;
    let w = (x - knots[j]) / (knots[j + 1] - knots[j]);
    values[j] + w * (values[j + 1] - values[j])
}

/// Standard normals used by the mode recursion, ordered (component, step, mode).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRecord {
    pub d: usize,
    pub steps: usize,
    pub modes: usize,
    pub values: Vec<f64>,
}

impl NoiseRecord {
    pub fn new(d: usize, steps: usize, modes: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != d * steps * modes {
            return Err(Error::Mismatch(format!(
                "{} noise values for shape {d} x {steps} x {modes}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("noise record has non-finite entries"));
        }
        Ok(Self { d, steps, modes, values })
    }

    #[inline]
    pub fn get(&self, i: usize, step: usize, k: usize) -> f64 {
        self.values[(i * self.steps + step) * self.modes + k]
    }
}

fn check_drift_grid(spec: &FieldSpec, grid: &GridSpec) -> Result<Vec<f64>> {
    grid.check_against(spec)?;
    let steps = grid_steps(grid);
    if let (Some(lo), Some(hi)) = (
        steps.iter().copied().reduce(f64::min),
        steps.iter().copied().reduce(f64::max),
    ) {
        if hi - lo > 1e-9 * hi {
            return Err(Error::domain("drift simulation needs a uniform time grid"));
        }
    }
    let sites = grid.sites();
    if sites.len() < 2 || sites[0] != 0.0 || *sites.last().unwrap() != 1.0 {
        return Err(Error::domain("drift simulation needs sites spanning [0, 1]"));
    }
    Ok(steps)
}

fn stability_guard(drift: &DriftSpec, grid: &GridSpec) -> Result<()> {
    let dt = grid.max_dt();
    if dt * drift.lipschitz > 1.0 {
        let span = grid.times().last().unwrap() - grid.times()[0];
        let nt = (span * drift.lipschitz).ceil() as usize + 1;
        return Err(Error::refused(
            format!("time step {dt} times Lipschitz constant {} exceeds 1", drift.lipschitz),
            format!("use nt >= {nt}"),
        ));
    }
    Ok(())
}

/// Modes the drift projection resolves on a grid with `nx` sites.
fn drift_modes(modes: usize, nx: usize) -> usize {
    modes.min(nx)
}

/// Evaluates `b(u(t_j, .))` and projects each component onto the first `out.len() / d` modes.
fn project_drift(
    path_values: &[f64],
    nt: usize,
    nx: usize,
    ti: usize,
    drift: &DriftSpec,
    synth: &mut Synthesizer,
    bvals: &mut [f64],
    out: &mut [f64],
) {
    let d = drift.d;
    let dm = out.len() / d;
    let (mut u, mut b) = (vec![0.0; d], vec![0.0; d]);
    for s in 0..nx {
        for i in 0..d {
            u[i] = path_values[(i * nt + ti) * nx + s];
        }
        drift.eval(&u, &mut b);
        for i in 0..d {
            bvals[i * nx + s] = b[i];
        }
    }
    for i in 0..d {
        synth.project(&bvals[i * nx..(i + 1) * nx], &mut out[i * dm..(i + 1) * dm]);
    }
}

/// `psi_k = int_0^dt e^{-lambda_k r} dr`.
fn exp_euler_weight(k: usize, dt: f64) -> f64 {
    if k == 0 {
        dt
    } else {
        let l = lambda(k);
        -(-l * dt).exp_m1() / l
    }
}

/// Path of `u = sigma v + w`, where the drift part `w` has modes
/// `D_{t+dt} = e^{-lambda dt} D_t + psi(dt) b_k(u(t))` started from 0 at the
/// first grid time, with the noise used.
pub fn simulate_drift(
    spec: &FieldSpec,
    drift: &DriftSpec,
    grid: &GridSpec,
    seed: u64,
    k_max: usize,
) -> Result<(SamplePath, NoiseRecord)> {
    if drift.d != spec.d() {
        return Err(Error::Mismatch(format!("drift for d = {} on a field with d = {}", drift.d, spec.d())));
    }
    let model = SpectralModel::new(k_max)?;
    let steps = check_drift_grid(spec, grid)?;
    let active = !drift.is_zero();
    if active {
        stability_guard(drift, grid)?;
    }
    let (d, nt, nx, modes) = (spec.d(), grid.nt(), grid.nx(), model.modes());
    let dm = drift_modes(modes, nx);
    let mut synth = Synthesizer::new(grid, modes);
    let mut bank = ModeBank::new(seed, d, modes, grid.times()[0]);
    let mut coefs = StepCoefs::new(modes);
    let mut noise = vec![0.0; d * (nt - 1) * modes];
    let mut values = vec![0.0; d * nt * nx];
    let mut v = vec![0.0; d * nx];
    let mut w = vec![0.0; nx];
    let mut dmodes = vec![0.0; d * dm];
    let mut proj = vec![0.0; d * dm];
    let mut bvals = vec![0.0; d * nx];
    let mut scratch = Vec::new();
    let mut step_noise = vec![0.0; d * modes];
    for ti in 0..nt {
        if ti > 0 {
            let dt = steps[ti - 1];
            coefs.update(dt);
            bank.advance(&coefs, Some(&mut step_noise));
            for i in 0..d {
                let dst = &mut noise[(i * (nt - 1) + ti - 1) * modes..(i * (nt - 1) + ti) * modes];
                dst.copy_from_slice(&step_noise[i * modes..(i + 1) * modes]);
            }
            if active {
                project_drift(&values, nt, nx, ti - 1, drift, &mut synth, &mut bvals, &mut proj);
                for i in 0..d {
                    for k in 0..dm {
                        let idx = i * dm + k;
                        dmodes[idx] = coefs.decay[k] * dmodes[idx] + exp_euler_weight(k, dt) * proj[idx];
                    }
                }
            }
        }
        for i in 0..d {
            synth.synthesize(&bank.state[i * modes..(i + 1) * modes], &mut scratch, &mut v[i * nx..(i + 1) * nx]);
        }
        store_coupled(spec, &v, nx, nt, ti, &mut values);
        if active && ti > 0 {
            for i in 0..d {
                synth.synthesize(&dmodes[i * dm..(i + 1) * dm], &mut scratch, &mut w);
                let dst = &mut values[(i * nt + ti) * nx..(i * nt + ti + 1) * nx];
                for (o, x) in dst.iter_mut().zip(&w) {
                    *o += x;
                }
            }
        }
    }
    let path = SamplePath::new(d, grid.clone(), seed, k_max, values)?;
    Ok((path, NoiseRecord::new(d, nt - 1, modes, noise)?))
}

/// Which change of measure a weight performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GirsanovDirection {
    /// The path was simulated with the drift; the weight is the density of
    /// the drift-free law with respect to the drift law.
    ToDriftFree,
    /// The path was simulated without drift; the weight is the density of
    /// the drift law with respect to the drift-free law.
    ToDrift,
}

/// `log` of the discrete Girsanov weight. For each step and mode the drift
/// shifts the standardized innovation by `m = sigma^{-1} b_k psi_k / s_k`.
pub fn girsanov_log_weight(
    path: &SamplePath,
    noise: &NoiseRecord,
    drift: &DriftSpec,
    spec: &FieldSpec,
    direction: GirsanovDirection,
) -> Result<f64> {
    let (d, nt, nx) = (spec.d(), path.nt(), path.nx());
    if path.d != d || drift.d != d || noise.d != d {
        return Err(Error::Mismatch("path, noise, drift and field disagree on d".into()));
    }
    if noise.steps + 1 != nt || noise.modes != path.k_max + 1 {
        return Err(Error::Mismatch("noise record does not match the path grid or truncation".into()));
    }
    if drift.is_zero() {
        return Ok(0.0);
    }
    let steps = check_drift_grid(spec, &path.grid)?;
    let modes = noise.modes;
    let dm = drift_modes(modes, nx);
    let mut synth = Synthesizer::new(&path.grid, modes);
    let mut proj = vec![0.0; d * dm];
    let mut bvals = vec![0.0; d * nx];
    let inv = spec.sigma_inv();
    let mut lin = 0.0;
    let mut quad = 0.0;
    let mut shift = vec![0.0; d];
    for j in 0..nt - 1 {
        let dt = steps[j];
        project_drift(&path.values, nt, nx, j, drift, &mut synth, &mut bvals, &mut proj);
        for k in 0..dm {
            let (_, sd) = ou_step(k, dt);
            let psi = exp_euler_weight(k, dt);
            for i in 0..d {
                shift[i] = (0..d).map(|l| inv[(i, l)] * proj[l * dm + k]).sum::<f64>() * psi / sd;
            }
            for i in 0..d {
                lin += shift[i] * noise.get(i, j, k);
                quad += shift[i] * shift[i];
            }
        }
    }
    let log_w = match direction {
        GirsanovDirection::ToDriftFree => -lin - 0.5 * quad,
        GirsanovDirection::ToDrift => lin - 0.5 * quad,
    };
    if !log_w.is_finite() {
        return Err(Error::numeric("Girsanov weight is not finite"));
    }
    Ok(log_w)
}

/// Weight of a drift-simulated path with respect to the drift-free law;
/// exactly 1 for the zero drift.
pub fn girsanov_weight(path: &SamplePath, noise: &NoiseRecord, drift: &DriftSpec, spec: &FieldSpec) -> Result<f64> {
    girsanov_weight_directed(path, noise, drift, spec, GirsanovDirection::ToDriftFree)
}

pub fn girsanov_weight_directed(
    path: &SamplePath,
    noise: &NoiseRecord,
    drift: &DriftSpec,
    spec: &FieldSpec,
    direction: GirsanovDirection,
) -> Result<f64> {
    let w = girsanov_log_weight(path, noise, drift, spec, direction)?.exp();
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::numeric(format!("Girsanov weight {w} is not a positive finite number")));
    }
    Ok(w)
}

/// Per-probe marginal comparison of two ensembles.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeComparison {
    pub t: f64,
    pub x: f64,
    pub component: usize,
    pub ks: f64,
    pub p_value: f64,
    pub mean_a: f64,
    pub mean_a_se: f64,
    pub mean_b: f64,
    pub mean_b_se: f64,
    pub var_a: f64,
    pub var_a_se: f64,
    pub var_b: f64,
    pub var_b_se: f64,
}

/// Covariance of one component between two probes in both ensembles.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceComparison {
    pub first: usize,
    pub second: usize,
    pub component: usize,
    pub cov_a: f64,
    pub cov_a_se: f64,
    pub cov_b: f64,
    pub cov_b_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LawMatchReport {
    pub probes: Vec<ProbeComparison>,
    pub covariances: Vec<CovarianceComparison>,
}

impl LawMatchReport {
    pub fn min_p_value(&self) -> f64 {
        self.probes.iter().map(|p| p.p_value).fold(1.0, f64::min)
    }
}

fn node_index(grid: &GridSpec, p: StPoint) -> Result<(usize, usize)> {
    let find = |v: &[f64], x: f64| v.iter().position(|&y| (y - x).abs() <= 1e-12 * x.abs().max(1.0));
    match (find(grid.times(), p.t), find(grid.sites(), p.x)) {
        (Some(ti), Some(xi)) => Ok((ti, xi)),
        _ => Err(Error::domain(format!("probe ({}, {}) is not a grid node", p.t, p.x))),
    }
}

/// KS statistics and moment comparisons at each probe and component.
pub fn law_match_report(a: &[SamplePath], b: &[SamplePath], probes: &[StPoint]) -> Result<LawMatchReport> {
    let first = a.first().or(b.first()).ok_or_else(|| Error::domain("empty ensembles"))?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("both ensembles must be non-empty"));
    }
    if a.iter().chain(b).any(|p| p.grid != first.grid || p.d != first.d) {
        return Err(Error::Mismatch("ensembles are not on identical grids".into()));
    }
    let nodes: Vec<(usize, usize)> = probes.iter().map(|&p| node_index(&first.grid, p)).collect::<Result<_>>()?;
    let column = |ens: &[SamplePath], i: usize, (ti, xi): (usize, usize)| -> Vec<f64> {
        ens.iter().map(|p| p.value(i, ti, xi)).collect()
    };
    let mut report = LawMatchReport {
        probes: Vec::new(),
        covariances: Vec::new(),
    };
    for i in 0..first.d {
        let cols_a: Vec<Vec<f64>> = nodes.iter().map(|&n| column(a, i, n)).collect();
        let cols_b: Vec<Vec<f64>> = nodes.iter().map(|&n| column(b, i, n)).collect();
        for (pi, p) in probes.iter().enumerate() {
            let (xa, xb) = (&cols_a[pi], &cols_b[pi]);
            let ks = ks_statistic(xa, xb);
            let (ma, mas) = mean_se(xa);
            let (mb, mbs) = mean_se(xb);
            let (va, vas) = variance_se(xa);
            let (vb, vbs) = variance_se(xb);
            report.probes.push(ProbeComparison {
                t: p.t,
                x: p.x,
                component: i,
                ks,
                p_value: ks_p_value(ks, xa.len(), xb.len()),
                mean_a: ma,
                mean_a_se: mas,
                mean_b: mb,
                mean_b_se: mbs,
                var_a: va,
                var_a_se: vas,
                var_b: vb,
                var_b_se: vbs,
            });
        }
        for p in 0..probes.len() {
            for q in p + 1..probes.len() {
                let (ca, cas) = covariance_se(&cols_a[p], &cols_a[q]);
                let (cb, cbs) = covariance_se(&cols_b[p], &cols_b[q]);
                report.covariances.push(CovarianceComparison {
                    first: p,
                    second: q,
                    component: i,
                    cov_a: ca,
                    cov_a_se: cas,
                    cov_b: cb,
                    cov_b_se: cbs,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sampler::sample_path;

    fn setup() -> (FieldSpec, GridSpec) {
        (FieldSpec::identity(1, 1.0, 0.1).unwrap(), GridSpec::uniform(0.1, 1.0, 11, 9).unwrap())
    }

    #[test]
    fn zero_drift_reduces_to_sampler() {
        let (spec, grid) = setup();
        let (path, noise) = simulate_drift(&spec, &DriftSpec::zero(1), &grid, 4, 16).unwrap();
        assert_eq!(path, sample_path(&spec, &grid, 4, 16).unwrap());
        assert_eq!(noise.values.len(), 10 * 17);
        assert_eq!(girsanov_weight(&path, &noise, &DriftSpec::zero(1), &spec).unwrap(), 1.0);
    }

    #[test]
    fn constant_drift_shifts_the_mean_exactly() {
        let (spec, grid) = setup();
        let drift = DriftSpec::new(1, DriftKind::Constant(vec![0.7]), 0.7, 1e-9).unwrap();
        let (p, _) = simulate_drift(&spec, &drift, &grid, 4, 16).unwrap();
        let q = sample_path(&spec, &grid, 4, 16).unwrap();
        for ti in 0..grid.nt() {
            for xi in 0..grid.nx() {
                let shift = p.value(0, ti, xi) - q.value(0, ti, xi);
                assert!((shift - 0.7 * (grid.times()[ti] - 0.1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn audit_rejects_false_declarations() {
        assert!(DriftSpec::new(1, DriftKind::TanhScale(2.0), 1.0, 1.0).is_err());
        assert!(DriftSpec::new(1, DriftKind::TanhScale(2.0), 0.5, 2.0).is_err());
        assert!(DriftSpec::new(2, DriftKind::TanhScale(2.0), 1.0, 2.0).is_ok());
        let table = DriftKind::Table {
            knots: vec![-1.0, 0.0, 1.0],
            values: vec![0.0, 1.0, 0.0],
        };
        assert!(DriftSpec::new(1, table, 1.0, 1.0).is_ok());
    }

    #[test]
    fn stability_guard_refuses() {
        let spec = FieldSpec::identity(1, 1.0, 0.1).unwrap();
        let grid = GridSpec::uniform(0.1, 1.0, 3, 9).unwrap();
        let drift = DriftSpec::new(1, DriftKind::TanhScale(10.0), 1.0, 10.0).unwrap();
        match simulate_drift(&spec, &drift, &grid, 1, 8) {
            Err(Error::Refused { suggestion, .. }) => assert!(suggestion.contains("nt >= 10")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identical_ensembles_have_zero_ks() {
        let (spec, grid) = setup();
        let ens: Vec<SamplePath> = (0..20).map(|s| sample_path(&spec, &grid, s, 8).unwrap()).collect();
        let r = law_match_report(&ens, &ens, &[StPoint::new(1.0, 0.5)]).unwrap();
        assert_eq!(r.probes[0].ks, 0.0);
        assert!(law_match_report(&ens, &ens, &[StPoint::new(0.33, 0.5)]).is_err());
    }
}
