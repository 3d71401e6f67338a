//! The acceptance checks, shared by the `verify-all` task and the test
//! suites. Each check is deterministic for a fixed seed.

use std::io::Write;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::drift::{girsanov_weight_directed, simulate_drift, DriftKind, DriftSpec, GirsanovDirection};
use crate::error::{Error, Result};
use crate::field::covariance::{increment_second_moment, pair_stats, CovarianceSource, ExactKernel};
use crate::field::patch::PatchSampler;
use crate::field::sampler::{sample_ensemble, sample_path};
use crate::field::spec::{FieldSpec, GridSpec, StPoint};
use crate::field::spectral::SpectralModel;
use crate::hitting::{
    box_dimension, conditional_hit_probability, exponent_fit, level_set, patch_hit_probability, resolution_floor,
    ConditionalOptions, DyadicBox, FloorPolicy, HitEstimate, Region, Selector, Target,
};
use crate::io::Scale;
use crate::modulus::{band, ball_grid, holder_fit, moment_ratio, Axis};
use crate::numeric::stats::{covariance_se, line_fit, mean_se, variance_se};
use crate::potential::bounds::{box_integral_sweep, psi_ratio_sweep, BoxIntegralDomain, BoxIntegralVariant};
use crate::potential::capacity::{capacity, CapacityOptions};
use crate::potential::kernel::{KernelOrder, MetricKind};
use crate::potential::measure::{csv_err, Diagonal, DiscreteMeasure, PointSet};
use crate::potential::oracle::{capacity_oracle, OracleOptions};
use crate::potential::smoothing::{smoothing_check, SmoothingBase, SmoothingOptions};
use crate::rng::{purpose, replica_seed, Stream};

/// Number of self-contained checks; determinism is checked by the caller.
pub const CHECKS: u8 = 11;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// The measured quantities, in a fixed format.
    pub detail: String,
}

/// Wall-clock budget of each check at full scale.
pub fn budget(id: u8) -> Duration {
    let secs = match id {
        1 => 10,
        2 => 30,
        3 => 120,
        4 => 600,
        5 => 1800,
        6 => 900,
        7 | 8 => 60,
        9 => 120,
        10 => 600,
        11 => 300,
        _ => 0,
    };
    Duration::from_secs(secs)
}

pub fn name(id: u8) -> &'static str {
    match id {
        1 => "covariance identity",
        2 => "increment two-sidedness",
        3 => "sampler fidelity",
        4 => "small-ball exponent",
        5 => "polarity threshold ordering",
        6 => "level-set dimensions",
        7 => "capacity oracle",
        8 => "smoothing inequality",
        9 => "integral-bound ratios",
        10 => "modulus",
        11 => "girsanov consistency",
        12 => "determinism",
        _ => "unknown",
    }
}

/// Runs check `id` (1 to [`CHECKS`]).
pub fn run(id: u8, scale: Scale, seed: u64) -> Result<Outcome> {
    let (passed, detail) = match id {
        1 => covariance_identity(scale, seed)?,
        2 => increment_envelope(scale, seed)?,
        3 => sampler_fidelity(scale, seed)?,
        4 => small_ball(scale, seed)?,
        5 => polarity_ordering(scale, seed)?,
        6 => level_set_dimensions(scale, seed)?,
        7 => capacity_oracle_check(scale)?,
        8 => smoothing(scale, seed)?,
        9 => integral_bounds(scale)?,
        10 => modulus(scale, seed)?,
        11 => girsanov(scale, seed)?,
        _ => return Err(Error::domain(format!("no check numbered {id}"))),
    };
    Ok(Outcome {
        id,
        name: name(id),
        passed,
        detail,
    })
}

/// `id,name,passed,detail`.
pub fn write_table_csv<W: Write>(rows: &[Outcome], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["id", "name", "passed", "detail"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.id.to_string(), r.name.to_string(), r.passed.to_string(), r.detail.clone()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn pick(scale: Scale, quick: usize, full: usize) -> usize {
    match scale {
        Scale::Quick => quick,
        Scale::Full => full,
    }
}

fn random_points(stream: &mut Stream, n: usize, t: (f64, f64), x: (f64, f64)) -> Vec<StPoint> {
    (0..n)
        .map(|_| {
            let a = t.0 + (t.1 - t.0) * stream.uniform();
            let b = x.0 + (x.1 - x.0) * stream.uniform();
            StPoint::new(a, b)
        })
        .collect()
}

fn covariance_identity(scale: Scale, seed: u64) -> Result<(bool, String)> {
    let n = pick(scale, 200, 1000);
    let model = SpectralModel::new(512)?;
    let mut st = Stream::new(seed, &[purpose::AUDIT, 1], 0);
    let pts = random_points(&mut st, 2 * n, (0.1, 1.0), (0.0, 1.0));
    let mut worst = 0.0f64;
    let mut failures = 0;
    for pair in pts.chunks(2) {
        match pair_stats(pair[0], pair[1], &model) {
            Ok(s) => worst = worst.max(s.identity_residual),
            Err(Error::Consistency { residual, .. }) => {
                failures += 1;
                worst = worst.max(residual);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((failures == 0 && worst < 1e-10, format!("pairs={n} max_residual={worst:e}")))
}

fn increment_envelope(scale: Scale, seed: u64) -> Result<(bool, String)> {
    let (bases, offsets) = (pick(scale, 20, 100), pick(scale, 20, 100));
    let mut st = Stream::new(seed, &[purpose::AUDIT, 2], 0);
    let base = random_points(&mut st, bases, (0.2, 0.8), (0.2, 0.8));
    let mut pairs = Vec::with_capacity(bases * offsets);
    for &p in &base {
        for j in 0..offsets {
            // Log-spaced Delta in [1e-4, 1e-1], shared between time and space.
            let delta = 10f64.powf(-4.0 + 3.0 * j as f64 / (offsets - 1) as f64);
            let f = st.uniform();
            let dt = (f * delta).powi(2);
            let dx = (1.0 - f) * delta;
            let sx = if st.uniform() < 0.5 { -1.0 } else { 1.0 };
            pairs.push((p, StPoint::new(p.t + dt, p.x + sx * dx)));
        }
    }
    let moments: Vec<_> = pairs.par_iter().map(|&(p, q)| increment_second_moment(p, q, &ExactKernel)).collect();
    let ratios: Vec<f64> = moments.iter().filter_map(|m| m.ratio_to_delta).collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let xs: Vec<f64> = moments.iter().map(|m| m.delta.ln()).collect();
    let ys: Vec<f64> = moments.iter().map(|m| m.value.ln()).collect();
    let fit = line_fit(&xs, &ys)?;
    let passed = lo >= 0.1 && hi <= 10.0 && (fit.slope - 1.0).abs() <= 0.05;
    Ok((passed, format!("pairs={} ratio_min={lo:.6} ratio_max={hi:.6} slope={:.6}", pairs.len(), fit.slope)))
}

fn sampler_fidelity(scale: Scale, seed: u64) -> Result<(bool, String)> {
    let n = pick(scale, 2000, 10_000);
    let spec = FieldSpec::identity(1, 1.0, 0.25)?;
    let grid = GridSpec::uniform(0.25, 1.0, 4, 9)?;
    let model = SpectralModel::new(SpectralModel::DEFAULT_K_MAX)?;
    let ens = sample_ensemble(&spec, &grid, seed, n, SpectralModel::DEFAULT_K_MAX)?;
    let values = |ti: usize, xi: usize| ens.iter().map(|p| p.value(0, ti, xi)).collect::<Vec<f64>>();
    let mut st = Stream::new(seed, &[purpose::AUDIT, 3], 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (a, b) = ((st.below(4), st.below(9)), (st.below(4), st.below(9)));
        let (c, se) = covariance_se(&values(a.0, a.1), &values(b.0, b.1));
        let exact = model.cov(grid.point(a.0, a.1), grid.point(b.0, b.1));
        worst = worst.max((c - exact).abs() / se);
    }
    let (v, se) = variance_se(&values(3, 4));
    let var_z = (v - model.var(grid.point(3, 4))).abs() / se;
    let passed = worst <= 3.0 && var_z <= 3.0;
    Ok((passed, format!("samples={n} max_cov_z={worst:.4} var_z={var_z:.4}")))
}

fn fit_line(label: &str, ests: &[HitEstimate]) -> Result<(f64, f64)> {
    let pairs: Vec<(f64, HitEstimate)> = ests.iter().map(|e| (e.eps, e.clone())).collect();
    let f = exponent_fit(&pairs).map_err(|e| Error::numeric(format!("{label}: {e}")))?;
    Ok((f.slope, f.stderr))
}

fn small_ball(scale: Scale, seed: u64) -> Result<(bool, String)> {
    let (top, replicas) = (pick(scale, 5, 6) as u32, pick(scale, 20_000, 100_000) as u64);
    let spec = FieldSpec::identity(2, 1.0, 1.0 / 64.0)?;
    let floor = FloorPolicy::default();
    let mut ests = Vec::new();
    for n in 2..=top {
        let b = DyadicBox {
            n,
            k: 1u64 << (4 * n - 1),
            l: 1u64 << (2 * n - 1),
        };
        let ((ta, tb), (xa, xb)) = (b.time_interval(), b.space_interval());
        let nodes: Vec<StPoint> = (0..17)
            .flat_map(|i| (0..5).map(move |j| StPoint::new(ta + (tb - ta) * i as f64 / 16.0, xa + (xb - xa) * j as f64 / 4.0)))
            .collect();
        let sampler = PatchSampler::new(nodes, &ExactKernel)?;
        let eps = 2f64.powi(-(n as i32));
        let cell = ((tb - ta) / 16.0, (xb - xa) / 4.0);
        let label = Region::dyadic(&b).label;
        ests.push(patch_hit_probability(&sampler, &spec, seed, replicas, &Target::ball(vec![0.0; 2], eps), cell, &floor, &label)?);
    }
    let (slope, se) = fit_line("box", &ests)?;
    Ok(((slope - 2.0).abs() <= 0.3, format!("replicas={replicas} slope={slope:.4} stderr={se:.4}")))
}

fn uniform_nodes(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step).ceil() as usize;
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// The three rare-event slopes at `d = 8`: `(full, fixed-x, fixed-t)`.
pub fn polarity_slopes(scale: Scale, seed: u64) -> Result<[(f64, f64); 3]> {
    let d = 8;
    let split = 0.5;
    let floor = FloorPolicy::default();
    // Largest usable radius range per region; the finest radius sets the grid.
    let plan = |region: usize| -> (f64, f64, u64) {
        match (scale, region) {
            (Scale::Full, 0) => (0.25, 0.2, 32),
            (Scale::Full, 1) => (1.0, 0.141, 20),
            (Scale::Full, _) => (1.0, 0.1, 64),
            (Scale::Quick, 0) => (0.125, 0.25, 8),
            (Scale::Quick, 1) => (0.5, 0.2, 8),
            (Scale::Quick, _) => (1.0, 0.141, 16),
        }
    };
    let mut out = [(0.0, 0.0); 3];
    for (region, slot) in out.iter_mut().enumerate() {
        let (r, emin, replicas) = plan(region);
        let radii: Vec<f64> = (0..5).map(|k| 0.4 * (emin / 0.4f64).powf(k as f64 / 4.0)).collect();
        let h = 0.999 * (emin / floor.a1).powi(2) / d as f64;
        let spec = FieldSpec::identity(d, split + r * r, 1.0 / 64.0)?;
        let (grid, reg) = match region {
            0 => {
                let nx = (2.0 / h).ceil() as usize + 1;
                let sites = (0..nx).map(|j| j as f64 / (nx - 1) as f64).collect();
                (
                    GridSpec::custom(uniform_nodes(split, split + r * r, h * h / 4.0), sites)?,
                    Region::full((0.0, 2.0), (0.5 - r / 2.0, 0.5 + r / 2.0)),
                )
            }
            1 => (
                GridSpec::custom(uniform_nodes(split, split + r * r, h * h), vec![0.5])?,
                Region::space_section(0.5, (0.0, 2.0)),
            ),
            _ => (
                GridSpec::custom(vec![split], uniform_nodes(0.5 - r / 2.0, 0.5 + r / 2.0, h))?,
                Region::time_section(split, (0.0, 1.0)),
            ),
        };
        let opts = ConditionalOptions {
            replicas,
            ..Default::default()
        };
        let ests = conditional_hit_probability(&spec, &grid, &reg, &[0.0; 8], &radii, seed + region as u64, &opts)?;
        *slot = fit_line(&reg.label, &ests)?;
    }
    Ok(out)
}

fn polarity_ordering(scale: Scale, seed: u64) -> Result<(bool, String)> {
    let [full, x, t] = polarity_slopes(scale, seed)?;
    let ordered = full.0 < x.0 && x.0 < t.0;
    let near = (full.0 - 2.0).abs() <= 1.0 && (x.0 - 4.0).abs() <= 1.0 && (t.0 - 6.0).abs() <= 1.0;
    Ok((
        ordered && near,
        format!(
            "full={:.4}+-{:.4} fixed_x={:.4}+-{:.4} fixed_t={:.4}+-{:.4}",
            full.0, full.1, x.0, x.1, t.0, t.1
        ),
    ))
}

fn mean_dimension(
    spec: &FieldSpec,
    grid: &GridSpec,
    k_max: usize,
    selector: Selector,
    levels: std::ops::RangeInclusive<u32>,
    seed: u64,
    wanted: usize,
) -> Result<(f64, usize, usize)> {
    let floor = FloorPolicy::default();
    let mut dims = Vec::with_capacity(wanted);
    let mut tried = 0;
    // Paths whose level set is (nearly) empty carry no dimension; keep
    // drawing until `wanted` paths have one.
    while dims.len() < wanted {
        if tried >= 20 * wanted {
            return Err(Error::numeric(format!("only {} of {tried} paths had a usable level set", dims.len())));
        }
        let batch: Vec<u64> = (tried as u64..(tried + wanted) as u64).collect();
        tried += wanted;
        let found = batch
            .par_iter()
            .map(|&r| -> Result<Option<f64>> {
                let path = sample_path(spec, grid, replica_seed(seed, r), k_max)?;
                let tol = resolution_floor(&path, spec, selector, &floor)?;
                let pts = level_set(&path, &[0.0], tol, selector).coordinates();
                Ok(box_dimension(&pts, MetricKind::Euclidean, levels.clone()).ok().map(|b| b.dim))
            })
            .collect::<Result<Vec<_>>>()?;
        dims.extend(found.into_iter().flatten().take(wanted - dims.len()));
    }
    Ok((dims.iter().sum::<f64>() / dims.len() as f64, dims.len(), tried))
}

fn level_set_dimensions(scale: Scale, seed: u64) -> Result<(bool, String)> {
    let spec = FieldSpec::identity(1, 1.0, 1.0 / 64.0)?;
    let paths = pick(scale, 10, 50);
    let nx = pick(scale, 1 << 12, 1 << 14) + 1;
    let grid = GridSpec::custom(vec![1.0], (0..nx).map(|j| j as f64 / (nx - 1) as f64).collect())?;
    let top_t = pick(scale, 10, 12) as u32;
    let (dim_t, _, tried_t) = mean_dimension(&spec, &grid, nx - 1, Selector::TimeSection(1.0), 4..=top_t, seed, paths)?;
    let nt = pick(scale, 1 << 14, 1 << 16) + 1;
    let t0 = spec.t0();
    let times = (0..nt).map(|i| t0 + (1.0 - t0) * i as f64 / (nt - 1) as f64).collect();
    let grid = GridSpec::custom(times, vec![0.5])?;
    let top_x = pick(scale, 12, 14) as u32;
    let (dim_x, _, tried_x) = mean_dimension(&spec, &grid, 512, Selector::SpaceSection(0.5), 4..=top_x, seed + 1, paths)?;
    let passed = (dim_t - 0.5).abs() <= 0.1 && (dim_x - 0.75).abs() <= 0.1;
    Ok((
        passed,
        format!("paths={paths} fixed_t={dim_t:.4} (drawn {tried_t}) fixed_x={dim_x:.4} (drawn {tried_x})"),
    ))
}

fn capacity_oracle_check(scale: Scale) -> Result<(bool, String)> {
    let (coarse, fine) = (pick(scale, 32, 64), pick(scale, 128, 256));
    let kind = MetricKind::Euclidean;
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for beta in [0.25, 0.5, 0.75] {
        let order = KernelOrder::for_diameter(beta, 1.0);
        let fw = capacity(
            &PointSet::interval_cells(0.0, 1.0, coarse),
            order,
            kind,
            &CapacityOptions::cells(vec![1.0 / coarse as f64]),
        )?;
        let oracle = capacity_oracle(
            &PointSet::interval_cells(0.0, 1.0, fine),
            order,
            kind,
            &Diagonal::Cell(vec![1.0 / fine as f64]),
            &OracleOptions::default(),
        )?;
        let rel = (fw.capacity / oracle.capacity - 1.0).abs();
        worst = worst.max(rel);
        detail.push_str(&format!("beta={beta}: fw={:.6} oracle={:.6}; ", fw.capacity, oracle.capacity));
    }
    let line = PointSet::interval_cells(0.0, 1.0, coarse);
    let below = capacity(&line, KernelOrder::for_diameter(-0.5, 1.0), kind, &CapacityOptions::default())?.capacity;
    let single = PointSet::new(1, vec![0.5])?;
    let mut singles = Vec::new();
    for beta in [0.0, 0.5, 1.0] {
        singles.push(capacity(&single, KernelOrder::for_diameter(beta, 1.0), kind, &CapacityOptions::default())?.capacity);
    }
    let trivial = below == 1.0 && singles.iter().all(|&c| c == 0.0);
    detail.push_str(&format!("max_rel={worst:.6} cap_neg={below} cap_singleton={singles:?}"));
    Ok((worst <= 0.05 && trivial, detail))
}

fn smoothing(scale: Scale, seed: u64) -> Result<(bool, String)> {
    let measures = pick(scale, 20, 100);
    let opts = SmoothingOptions {
        per_axis: 5,
        base: SmoothingBase::Cells,
    };
    let results = (0..measures as u64)
        .into_par_iter()
        .map(|m| -> Result<Vec<bool>> {
            let mut st = Stream::new(seed, &[purpose::MEASURE, m], 0);
            let atoms = 3 + st.below(10);
            let coords: Vec<f64> = (0..2 * atoms).map(|_| st.uniform()).collect();
            let weights: Vec<f64> = (0..atoms).map(|_| 0.1 + st.uniform()).collect();
            let mu = DiscreteMeasure::from_masses(PointSet::new(2, coords)?, weights)?;
            let width = 0.02 + 0.3 * st.uniform();
            [0.5, 1.0, 1.5]
                .iter()
                .map(|&alpha| Ok(smoothing_check(&mu, width, alpha, &opts)?.holds()))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = results.iter().flatten().filter(|ok| !**ok).count();
    Ok((violations == 0, format!("measures={measures} checks={} violations={violations}", 3 * measures)))
}

fn integral_bounds(scale: Scale) -> Result<(bool, String)> {
    let ks: Vec<i32> = (0..=pick(scale, 6, 10) as i32).collect();
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for beta in [4.0, 6.0, 8.0] {
        let s = box_integral_sweep(beta, BoxIntegralVariant::SpaceTime, BoxIntegralDomain::default(), &ks)?;
        worst = worst.max(s.spread());
        detail.push_str(&format!("beta={beta}:{:.4} ", s.spread()));
    }
    let points = pick(scale, 20, 60);
    for nu in [0.5, 1.0, 2.0, 4.0] {
        let s = psi_ratio_sweep(1.0, nu, 1e-10, 1.0, points)?;
        worst = worst.max(s.spread());
        detail.push_str(&format!("nu={nu}:{:.4} ", s.spread()));
    }
    detail.push_str(&format!("max_spread={worst:.4}"));
    Ok((worst < 1e3, detail))
}

fn modulus(scale: Scale, seed: u64) -> Result<(bool, String)> {
    let paths = pick(scale, 1000, 1000);
    let spec = FieldSpec::identity(1, 1.0, 1.0 / 64.0)?;
    let center = StPoint::new(0.5, 0.5);
    let mut ratios = Vec::new();
    for n in 2..=6 {
        let eps = 2f64.powi(-n);
        let grid = ball_grid(center, eps, pick(scale, 4, 8))?;
        let sampler = PatchSampler::for_grid(&grid, &ExactKernel)?;
        let ens = (0..paths as u64)
            .into_par_iter()
            .map(|r| sampler.grid_path(&spec, &grid, seed + n as u64, r))
            .collect::<Result<Vec<_>>>()?;
        ratios.push(moment_ratio(&ens, center, eps, 2.0)?);
    }
    let width = band(&ratios);
    let k_max = pick(scale, 512, 1024);
    let nx = k_max + 1;
    let grid = GridSpec::custom(vec![0.5], (0..nx).map(|j| j as f64 / k_max as f64).collect())?;
    let ens = sample_ensemble(&spec, &grid, seed + 10, paths, k_max)?;
    let ax = holder_fit(&ens, Axis::Space)?;
    let dt = 2f64.powi(-16);
    let grid = GridSpec::custom((0..=k_max).map(|i| 0.5 + dt * i as f64).collect(), vec![0.5])?;
    let ens = sample_ensemble(&spec, &grid, seed + 11, paths, k_max)?;
    let at = holder_fit(&ens, Axis::Time)?;
    let passed = width <= 4.0 && (ax.alpha - 0.5).abs() <= 0.05 && (at.alpha - 0.25).abs() <= 0.05;
    Ok((
        passed,
        format!(
            "band={width:.4} alpha_x={:.4}+-{:.4} alpha_t={:.4}+-{:.4}",
            ax.alpha, ax.stderr, at.alpha, at.stderr
        ),
    ))
}

fn girsanov(scale: Scale, seed: u64) -> Result<(bool, String)> {
    let n = pick(scale, 500, 4000);
    let spec = FieldSpec::identity(1, 1.0, 0.1)?;
    let grid = GridSpec::uniform(0.1, 1.0, 31, 17)?;
    let k_max = 32;
    let probe = (grid.nt() - 1, grid.nx() / 2);
    let zero = DriftSpec::zero(1);
    let drift = DriftSpec::new(1, DriftKind::Constant(vec![0.5]), 0.5, 1e-9)?;
    let rows = (0..n as u64)
        .into_par_iter()
        .map(|r| -> Result<[f64; 5]> {
            let (free, noise) = simulate_drift(&spec, &zero, &grid, replica_seed(seed, r), k_max)?;
            let unit = girsanov_weight_directed(&free, &noise, &zero, &spec, GirsanovDirection::ToDriftFree)?;
            let to_drift = girsanov_weight_directed(&free, &noise, &drift, &spec, GirsanovDirection::ToDrift)?;
            let (pushed, noise) = simulate_drift(&spec, &drift, &grid, replica_seed(seed + 1, r), k_max)?;
            let back = girsanov_weight_directed(&pushed, &noise, &drift, &spec, GirsanovDirection::ToDriftFree)?;
            Ok([
                unit,
                back,
                to_drift,
                to_drift * free.value(0, probe.0, probe.1),
                pushed.value(0, probe.0, probe.1),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    let exact_unit = col(0).iter().all(|&w| w == 1.0);
    let (wm, wse) = mean_se(&col(1));
    let weight_z = (wm - 1.0).abs() / wse;
    let (rw, rw_se) = mean_se(&col(3));
    let (dm, dm_se) = mean_se(&col(4));
    let probe_z = (rw - dm).abs() / (rw_se * rw_se + dm_se * dm_se).sqrt();
    let passed = exact_unit && weight_z <= 3.0 && probe_z <= 3.0;
    Ok((
        passed,
        format!(
            "paths={n} zero_drift_exact={exact_unit} weight_mean={wm:.6}+-{wse:.6} reweighted={rw:.6}+-{rw_se:.6} drift={dm:.6}+-{dm_se:.6}"
        ),
    ))
}
