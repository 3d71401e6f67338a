//! Executes a manifest: runs its task and writes the artifacts, a
//! `metadata.toml` echoing the manifest, and a separate `timing.toml`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::drift::{girsanov_weight_directed, simulate_drift, DriftSpec, GirsanovDirection};
use crate::error::{Error, Result};
use crate::field::covariance::{pair_stats, CovarianceSource, ExactKernel};
use crate::field::patch::PatchSampler;
use crate::field::sampler::{sample_ensemble, sample_path};
use crate::field::spec::{FieldSpec, GridSpec, StPoint};
use crate::field::spectral::SpectralModel;
use crate::hitting::{
    box_dimension, exponent_fit, hit_probability, level_set, resolution_floor, write_estimates_csv, write_fit_csv,
    FloorPolicy, Region, Target,
};
use crate::io::binary::{save_path, save_path_with_noise};
use crate::io::manifest::{
    CapacityParams, CovarianceParams, DimensionParams, ExperimentManifest, GirsanovParams, HitprobParams,
    ModulusParams, RegionKind, Scale, TaskParams,
};
use crate::modulus::{ball_grid, holder_fit, moment_ratio, Axis};
use crate::numeric::stats::mean_se;
use crate::potential::capacity::{capacity, CapacityOptions};
use crate::potential::kernel::{default_n0, KernelOrder};
use crate::potential::measure::{read_target_csv, write_measure_csv, DiscreteMeasure, PointSet};
use crate::rng::{purpose, replica_seed, Stream};
use crate::verify::{self, Outcome};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "HITFIELD_THREADS";

/// Thread count from [`THREADS_ENV`], defaulting to the machine's parallelism.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::domain(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// Artifacts written, relative to the output directory.
    pub files: Vec<String>,
    /// Rows of the verification table for `verify_all`.
    pub table: Vec<Outcome>,
    pub passed: bool,
}

struct Out<'a> {
    dir: &'a Path,
    header: String,
    files: Vec<String>,
}

impl Out<'_> {
    /// A CSV artifact whose first line records the provenance.
    fn csv(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        writeln!(w, "{}", self.header)?;
        body(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn grid_label(grid: &GridSpec) -> String {
    format!(
        "{}x{}[{:?},{:?}]",
        grid.nt(),
        grid.nx(),
        grid.times()[0],
        grid.times()[grid.nt() - 1]
    )
}

/// `n0` of the log kernel, when the task uses one.
fn n0_of(m: &ExperimentManifest) -> Result<Option<f64>> {
    match &m.params {
        TaskParams::Capacity(c) => Ok(Some(default_n0(capacity_target(c)?.diameter(c.kind)))),
        _ => Ok(None),
    }
}

fn capacity_target(c: &CapacityParams) -> Result<PointSet> {
    match &c.target_file {
        Some(f) => read_target_csv(File::open(f)?),
        None => Ok(PointSet::interval_cells(0.0, 1.0, c.points)),
    }
}

/// Runs the manifest's task into `dir`. The caller chooses the thread pool.
pub fn run(m: &ExperimentManifest, dir: &Path) -> Result<RunReport> {
    fs::create_dir_all(dir)?;
    let started = Instant::now();
    let n0 = n0_of(m)?;
    let n0_text = n0.map_or("none".to_string(), |v| format!("{v:?}"));
    let mut out = Out {
        dir,
        header: format!(
            "# hitfield seed={} k_max={} n0={} grid={} manifest_sha256={}",
            m.seed,
            m.k_max,
            n0_text,
            grid_label(&m.grid),
            m.content_hash()
        ),
        files: Vec::new(),
    };
    let context = |e: Error| Error::numeric(format!("task {}: {e}", m.task.name()));
    let (table, passed) = match &m.params {
        TaskParams::Sample => sample(m, &mut out).map(|_| (Vec::new(), true)),
        TaskParams::CovarianceAudit(p) => covariance_audit(m, p, &mut out).map(|_| (Vec::new(), true)),
        TaskParams::Hitprob(p) => hitprob(m, p, &mut out).map(|_| (Vec::new(), true)),
        TaskParams::Capacity(p) => run_capacity(m, p, &mut out).map(|_| (Vec::new(), true)),
        TaskParams::Dimension(p) => dimension(m, p, &mut out).map(|_| (Vec::new(), true)),
        TaskParams::Modulus(p) => run_modulus(m, p, &mut out).map(|_| (Vec::new(), true)),
        TaskParams::Girsanov(p) => girsanov(m, p, &mut out).map(|_| (Vec::new(), true)),
        TaskParams::VerifyAll { scale } => verify_all(m, *scale, &mut out),
    }
    .map_err(|e| match e {
        Error::Io(_) | Error::Refused { .. } | Error::Validation { .. } => e,
        other => context(other),
    })?;
    write_metadata(m, &n0_text, &out.files, dir)?;
    let mut t = String::new();
    t.push_str(&format!("wall_clock_seconds = {:?}\n", started.elapsed().as_secs_f64()));
    t.push_str(&format!("threads = {}\n", rayon::current_num_threads()));
    fs::write(dir.join("timing.toml"), t)?;
    Ok(RunReport {
        files: out.files,
        table,
        passed,
    })
}

fn write_metadata(m: &ExperimentManifest, n0: &str, files: &[String], dir: &Path) -> Result<()> {
    let mut meta = toml::Table::new();
    let mut put = |k: &str, v: toml::Value| {
        meta.insert(k.to_string(), v);
    };
    put("name", m.name.clone().into());
    put("task", m.task.name().into());
    put("version", env!("CARGO_PKG_VERSION").into());
    put("seed", (m.seed as i64).into());
    put("replicas", (m.replicas as i64).into());
    put("k_max", (m.k_max as i64).into());
    put("n0", n0.into());
    put("grid", grid_label(&m.grid).into());
    put("manifest_sha256", m.content_hash().into());
    put("manifest_file", m.file.display().to_string().into());
    put("files", toml::Value::Array(files.iter().map(|f| f.clone().into()).collect()));
    put("manifest", m.source.clone().into());
    let text = toml::to_string(&meta).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join("metadata.toml"), text)?;
    Ok(())
}

fn drift_of(m: &ExperimentManifest) -> Result<Option<DriftSpec>> {
    let drift = DriftSpec::from_descriptor(&m.spec.drift, m.spec.d())?;
    Ok(if drift.is_zero() { None } else { Some(drift) })
}

fn sample(m: &ExperimentManifest, out: &mut Out) -> Result<()> {
    let drift = drift_of(m)?;
    let mut rows = Vec::with_capacity(m.replicas);
    for r in 0..m.replicas as u64 {
        let seed = replica_seed(m.seed, r);
        let name = format!("path_{r:04}.bin");
        let file = out.dir.join(&name);
        let path = match &drift {
            None => {
                let p = sample_path(&m.spec, &m.grid, seed, m.k_max)?;
                save_path(&file, &p)?;
                p
            }
            Some(b) => {
                let (p, noise) = simulate_drift(&m.spec, b, &m.grid, seed, m.k_max)?;
                save_path_with_noise(&file, &p, &noise)?;
                out.files.push(format!("{name}.noise"));
                p
            }
        };
        out.files.push(name.clone());
        let (mean, _) = mean_se(&path.values);
        rows.push((r, seed, name, mean));
    }
    out.csv("paths.csv", |w| {
        writeln!(w, "replica,seed,file,mean")?;
        for (r, seed, name, mean) in &rows {
            writeln!(w, "{r},{seed},{name},{mean:?}")?;
        }
        Ok(())
    })
}

fn covariance_audit(m: &ExperimentManifest, p: &CovarianceParams, out: &mut Out) -> Result<()> {
    let spectral = SpectralModel::new(m.k_max)?;
    let source: &dyn CovarianceSource = if p.exact { &ExactKernel } else { &spectral };
    let lo = m.spec.t0().max(0.1).min(m.spec.horizon());
    let mut st = Stream::new(m.seed, &[purpose::AUDIT, 0], 0);
    let mut draw = || StPoint::new(lo + (m.spec.horizon() - lo) * st.uniform(), st.uniform());
    let pairs: Vec<(StPoint, StPoint)> = (0..p.pairs).map(|_| (draw(), draw())).collect();
    let stats = pairs
        .par_iter()
        .map(|&(a, b)| pair_stats(a, b, source))
        .collect::<Result<Vec<_>>>()?;
    out.csv("covariance.csv", |w| {
        writeln!(w, "t,x,s,y,var_p,var_q,cov,gamma2,rho,identity_residual")?;
        for ((a, b), s) in pairs.iter().zip(&stats) {
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                a.t, a.x, b.t, b.x, s.var_p, s.var_q, s.cov, s.gamma2, s.rho, s.identity_residual
            )?;
        }
        Ok(())
    })
}

fn region_of(kind: RegionKind, at: f64, spec: &FieldSpec) -> Region {
    let t = (0.0, spec.horizon());
    match kind {
        RegionKind::Full => Region::full(t, (0.0, 1.0)),
        RegionKind::TimeSection => Region::time_section(at, (0.0, 1.0)),
        RegionKind::SpaceSection => Region::space_section(at, t),
    }
}

fn ensemble(m: &ExperimentManifest) -> Result<Vec<crate::field::sampler::SamplePath>> {
    match drift_of(m)? {
        None => sample_ensemble(&m.spec, &m.grid, m.seed, m.replicas, m.k_max),
        Some(b) => (0..m.replicas as u64)
            .into_par_iter()
            .map(|r| Ok(simulate_drift(&m.spec, &b, &m.grid, replica_seed(m.seed, r), m.k_max)?.0))
            .collect(),
    }
}

fn hitprob(m: &ExperimentManifest, p: &HitprobParams, out: &mut Out) -> Result<()> {
    let region = region_of(p.region, p.at, &m.spec);
    let floor = FloorPolicy {
        factor: p.floor_factor,
        ..FloorPolicy::default()
    };
    let ens = ensemble(m)?;
    let mut rows = Vec::with_capacity(p.radii.len());
    for &eps in &p.radii {
        rows.push(hit_probability(&ens, &Target::ball(p.center.clone(), eps), &region, &m.spec, &floor)?);
    }
    out.csv("hitprob.csv", |w| write_estimates_csv(&rows, w))?;
    let pairs: Vec<_> = rows.iter().map(|e| (e.eps, e.clone())).collect();
    let fits = match exponent_fit(&pairs) {
        Ok(f) => vec![(region.label.clone(), f)],
        Err(_) => Vec::new(),
    };
    out.csv("fit.csv", |w| write_fit_csv(&fits, w))
}

fn run_capacity(_m: &ExperimentManifest, p: &CapacityParams, out: &mut Out) -> Result<()> {
    let target = capacity_target(p)?;
    let opts = match &p.target_file {
        None => CapacityOptions::cells(vec![1.0 / p.points as f64]),
        Some(_) => CapacityOptions::default(),
    };
    let diameter = target.diameter(p.kind);
    let mut rows = Vec::new();
    for &beta in &p.betas {
        let r = capacity(&target, KernelOrder::for_diameter(beta, diameter), p.kind, &opts)?;
        if !r.weights.is_empty() {
            let mu = DiscreteMeasure::new(target.clone(), r.weights.clone())?;
            let name = format!("measure_beta{beta}.csv");
            out.csv(&name, |w| write_measure_csv(&mu, w))?;
        }
        rows.push((beta, r));
    }
    out.csv("capacity.csv", |w| {
        writeln!(w, "beta,capacity,energy,gap,iterations,converged")?;
        for (beta, r) in &rows {
            writeln!(
                w,
                "{beta:?},{:?},{:?},{:?},{},{}",
                r.capacity, r.energy, r.gap, r.iterations, r.converged
            )?;
        }
        Ok(())
    })
}

fn dimension(m: &ExperimentManifest, p: &DimensionParams, out: &mut Out) -> Result<()> {
    let floor = FloorPolicy::default();
    let rows = (0..m.replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<(u64, f64, usize, String, String, String)> {
            let path = sample_path(&m.spec, &m.grid, replica_seed(m.seed, r), m.k_max)?;
            let tol = match p.tol {
                Some(t) => t,
                None => resolution_floor(&path, &m.spec, p.selector, &floor)?,
            };
            let cloud = level_set(&path, &p.z, tol, p.selector).coordinates();
            let (dim, se, note) = match box_dimension(&cloud, p.kind, p.levels.0..=p.levels.1) {
                Ok(b) => (format!("{:?}", b.dim), format!("{:?}", b.stderr), String::new()),
                Err(e) => (String::new(), String::new(), e.to_string().replace(',', ";")),
            };
            Ok((r, tol, cloud.len(), dim, se, note))
        })
        .collect::<Result<Vec<_>>>()?;
    out.csv("dimension.csv", |w| {
        writeln!(w, "replica,tol,points,dim,stderr,note")?;
        for (r, tol, n, dim, se, note) in &rows {
            writeln!(w, "{r},{tol:?},{n},{dim},{se},{note}")?;
        }
        Ok(())
    })
}

fn run_modulus(m: &ExperimentManifest, p: &ModulusParams, out: &mut Out) -> Result<()> {
    let center = StPoint::new(p.center.0, p.center.1);
    let mut ratios = Vec::with_capacity(p.radii.len());
    for (i, &eps) in p.radii.iter().enumerate() {
        let grid = ball_grid(center, eps, p.ball_nodes)?;
        let sampler = PatchSampler::for_grid(&grid, &ExactKernel)?;
        let seed = replica_seed(m.seed, 1 + i as u64);
        let ens = (0..m.replicas as u64)
            .into_par_iter()
            .map(|r| sampler.grid_path(&m.spec, &grid, seed, r))
            .collect::<Result<Vec<_>>>()?;
        ratios.push(moment_ratio(&ens, center, eps, p.p)?);
    }
    out.csv("modulus.csv", |w| {
        writeln!(w, "eps,ratio,se,paths")?;
        for r in &ratios {
            writeln!(w, "{:?},{:?},{:?},{}", r.eps, r.ratio, r.se, r.paths)?;
        }
        Ok(())
    })?;
    let ens = sample_ensemble(&m.spec, &m.grid, m.seed, m.replicas, m.k_max)?;
    let fits: Vec<(Axis, String)> = [Axis::Time, Axis::Space]
        .into_iter()
        .map(|axis| {
            let row = match holder_fit(&ens, axis) {
                Ok(f) => format!("{:?},{:?},", f.alpha, f.stderr),
                Err(e) => format!(",,{}", e.to_string().replace(',', ";")),
            };
            (axis, row)
        })
        .collect();
    out.csv("holder.csv", |w| {
        writeln!(w, "axis,alpha,stderr,note")?;
        for (axis, row) in &fits {
            let name = match axis {
                Axis::Time => "time",
                Axis::Space => "space",
            };
            writeln!(w, "{name},{row}")?;
        }
        Ok(())
    })
}

fn nearest(nodes: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (i, &n) in nodes.iter().enumerate() {
        if (n - v).abs() < (nodes[best] - v).abs() {
            best = i;
        }
    }
    best
}

fn girsanov(m: &ExperimentManifest, p: &GirsanovParams, out: &mut Out) -> Result<()> {
    let drift = DriftSpec::from_descriptor(&m.spec.drift, m.spec.d())?;
    let zero = DriftSpec::zero(m.spec.d());
    let rows = (0..m.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let (pushed, noise) = simulate_drift(&m.spec, &drift, &m.grid, replica_seed(m.seed, r), m.k_max)?;
            let back = girsanov_weight_directed(&pushed, &noise, &drift, &m.spec, GirsanovDirection::ToDriftFree)?;
            let seed = replica_seed(m.seed ^ 0x4652_4545, r);
            let (free, noise) = simulate_drift(&m.spec, &zero, &m.grid, seed, m.k_max)?;
            let fwd = girsanov_weight_directed(&free, &noise, &drift, &m.spec, GirsanovDirection::ToDrift)?;
            Ok((pushed, back, free, fwd))
        })
        .collect::<Result<Vec<_>>>()?;
    out.csv("weights.csv", |w| {
        writeln!(w, "replica,weight_to_drift_free,weight_to_drift")?;
        for (r, row) in rows.iter().enumerate() {
            writeln!(w, "{r},{:?},{:?}", row.1, row.3)?;
        }
        Ok(())
    })?;
    let (times, sites) = (m.grid.times(), m.grid.sites());
    out.csv("probes.csv", |w| {
        writeln!(w, "t,x,component,drift_mean,drift_se,reweighted_mean,reweighted_se,z")?;
        for &(t, x) in &p.probes {
            let (ti, xi) = (nearest(times, t), nearest(sites, x));
            for i in 0..m.spec.d() {
                let direct: Vec<f64> = rows.iter().map(|row| row.0.value(i, ti, xi)).collect();
                let weighted: Vec<f64> = rows.iter().map(|row| row.3 * row.2.value(i, ti, xi)).collect();
                let (a, a_se) = mean_se(&direct);
                let (b, b_se) = mean_se(&weighted);
                let z = (a - b) / (a_se * a_se + b_se * b_se).sqrt();
                writeln!(w, "{:?},{:?},{i},{a:?},{a_se:?},{b:?},{b_se:?},{z:?}", times[ti], sites[xi])?;
            }
        }
        Ok(())
    })
}

/// Checks rerun under one and two worker threads for the determinism row.
const DETERMINISM_CHECKS: [u8; 5] = [3, 4, 6, 8, 11];

/// Runs the quick checks in `ids` on a pool of `threads` workers and
/// returns their table bytes.
pub fn table_bytes(ids: &[u8], seed: u64, threads: usize) -> Result<Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::numeric(e.to_string()))?;
    let rows = pool.install(|| ids.iter().map(|&id| verify::run(id, Scale::Quick, seed)).collect::<Result<Vec<_>>>())?;
    let mut bytes = Vec::new();
    verify::write_table_csv(&rows, &mut bytes)?;
    Ok(bytes)
}

fn verify_all(m: &ExperimentManifest, scale: Scale, out: &mut Out) -> Result<(Vec<Outcome>, bool)> {
    let mut rows = Vec::with_capacity(12);
    for id in 1..=verify::CHECKS {
        rows.push(verify::run(id, scale, m.seed)?);
    }
    let same = table_bytes(&DETERMINISM_CHECKS, m.seed, 1)? == table_bytes(&DETERMINISM_CHECKS, m.seed, 2)?;
    rows.push(Outcome {
        id: 12,
        name: verify::name(12),
        passed: same,
        detail: format!("checks={DETERMINISM_CHECKS:?} threads=1,2 identical={same}"),
    });
    let passed = rows.iter().all(|r| r.passed);
    let table = rows.clone();
    out.csv("verify.csv", |w| verify::write_table_csv(&table, w))?;
    Ok((rows, passed))
}

/// Output directory: the flag, then the manifest's `out`, then `./out/<name>`.
pub fn output_dir(m: &ExperimentManifest, flag: Option<&Path>) -> PathBuf {
    match (flag, &m.out) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(d)) => d.clone(),
        (None, None) => PathBuf::from("out").join(&m.name),
    }
}
