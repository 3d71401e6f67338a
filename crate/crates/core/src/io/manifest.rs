//! Experiment manifests: one TOML file per experiment, validated with
//! messages that name the file, line and field at fault.

use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::field::spec::{DriftDescriptor, FieldSpec, GridSpec};
use crate::hitting::levelset::Selector;
use crate::potential::kernel::MetricKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Task {
    Sample,
    CovarianceAudit,
    Hitprob,
    Capacity,
    Dimension,
    Modulus,
    Girsanov,
    VerifyAll,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Sample => "sample",
            Task::CovarianceAudit => "covariance_audit",
            Task::Hitprob => "hitprob",
            Task::Capacity => "capacity",
            Task::Dimension => "dimension",
            Task::Modulus => "modulus",
            Task::Girsanov => "girsanov",
            Task::VerifyAll => "verify_all",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sample" => Task::Sample,
            "covariance_audit" | "cov-audit" | "cov_audit" => Task::CovarianceAudit,
            "hitprob" => Task::Hitprob,
            "capacity" => Task::Capacity,
            "dimension" => Task::Dimension,
            "modulus" => Task::Modulus,
            "girsanov" => Task::Girsanov,
            "verify_all" | "verify-all" => Task::VerifyAll,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionKind {
    Full,
    TimeSection,
    SpaceSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitprobParams {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub region: RegionKind,
    /// Section coordinate for the section regions.
    pub at: f64,
    pub floor_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceParams {
    pub pairs: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityParams {
    pub betas: Vec<f64>,
    /// Uniform points on `[0, 1]` when no target file is given.
    pub points: usize,
    pub target_file: Option<PathBuf>,
    pub kind: MetricKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionParams {
    pub z: Vec<f64>,
    pub selector: Selector,
    /// `None` uses the resolution floor.
    pub tol: Option<f64>,
    pub levels: (u32, u32),
    pub kind: MetricKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusParams {
    pub p: f64,
    pub radii: Vec<f64>,
    pub center: (f64, f64),
    /// Nodes per half-axis of each ball grid.
    pub ball_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GirsanovParams {
    pub probes: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scale {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskParams {
    Sample,
    CovarianceAudit(CovarianceParams),
    Hitprob(HitprobParams),
    Capacity(CapacityParams),
    Dimension(DimensionParams),
    Modulus(ModulusParams),
    Girsanov(GirsanovParams),
    VerifyAll { scale: Scale },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentManifest {
    pub name: String,
    pub task: Task,
    pub seed: u64,
    pub replicas: usize,
    pub k_max: usize,
    pub spec: FieldSpec,
    pub grid: GridSpec,
    pub params: TaskParams,
    pub out: Option<PathBuf>,
    /// The manifest text as read.
    pub source: String,
    pub file: PathBuf,
}

/// Typed access to a parsed table with line-aware errors.
struct Reader<'a> {
    file: &'a Path,
    src: &'a str,
    root: &'a Table,
}

impl<'a> Reader<'a> {
    /// Line of `key` inside `[section]` (top level when empty).
    fn line_of(&self, section: &str, key: &str) -> usize {
        let mut current = String::new();
        let mut section_line = 1;
        for (n, raw) in self.src.lines().enumerate() {
            let line = raw.trim();
            if let Some(h) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
                current = h.trim().to_string();
                if current == section {
                    section_line = n + 1;
                }
                continue;
            }
            if current == section {
                if let Some((k, _)) = line.split_once('=') {
                    if k.trim().trim_matches('"') == key {
                        return n + 1;
                    }
                }
            }
        }
        section_line
    }

    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> Error {
        let field = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        Error::Validation {
            file: self.file.to_path_buf(),
            line: self.line_of(section, key),
            field,
            message: message.into(),
        }
    }

    fn table(&self, section: &str) -> Option<&'a Table> {
        if section.is_empty() {
            return Some(self.root);
        }
        let mut t = self.root;
        for part in section.split('.') {
            t = t.get(part)?.as_table()?;
        }
        Some(t)
    }

    fn get(&self, section: &str, key: &str) -> Option<&'a Value> {
        self.table(section)?.get(key)
    }

    fn f64_of(&self, section: &str, key: &str, v: &Value) -> Result<f64> {
        match v {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(self.err(section, key, format!("expected a number, found {}", v.type_str()))),
        }
    }

    fn f64(&self, section: &str, key: &str, default: Option<f64>) -> Result<f64> {
        match (self.get(section, key), default) {
            (Some(v), _) => self.f64_of(section, key, v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(self.err(section, key, "missing required field")),
        }
    }

    fn int(&self, section: &str, key: &str, default: Option<i64>) -> Result<i64> {
        match (self.get(section, key), default) {
            (Some(Value::Integer(i)), _) => Ok(*i),
            (Some(v), _) => Err(self.err(section, key, format!("expected an integer, found {}", v.type_str()))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(self.err(section, key, "missing required field")),
        }
    }

    fn positive(&self, section: &str, key: &str, default: Option<i64>, min: i64) -> Result<usize> {
        let v = self.int(section, key, default)?;
        if v < min {
            return Err(self.err(section, key, format!("must be at least {min}, got {v}")));
        }
        Ok(v as usize)
    }

    fn string(&self, section: &str, key: &str, default: Option<&str>) -> Result<String> {
        match (self.get(section, key), default) {
            (Some(Value::String(s)), _) => Ok(s.clone()),
            (Some(v), _) => Err(self.err(section, key, format!("expected a string, found {}", v.type_str()))),
            (None, Some(d)) => Ok(d.to_string()),
            (None, None) => Err(self.err(section, key, "missing required field")),
        }
    }

    fn floats(&self, section: &str, key: &str, default: Option<Vec<f64>>) -> Result<Vec<f64>> {
        match (self.get(section, key), default) {
            (Some(Value::Array(a)), _) => a.iter().map(|v| self.f64_of(section, key, v)).collect(),
            (Some(v), _) => Err(self.err(section, key, format!("expected an array, found {}", v.type_str()))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(self.err(section, key, "missing required field")),
        }
    }

    fn check_keys(&self, section: &str, allowed: &[&str]) -> Result<()> {
        if let Some(t) = self.table(section) {
            for (k, v) in t {
                if v.is_table() && !section.is_empty() {
                    let sub = format!("{section}.{k}");
                    if allowed.contains(&k.as_str()) {
                        continue;
                    }
                    return Err(self.err(section, k, format!("unknown table `{sub}`")));
                }
                if !allowed.contains(&k.as_str()) {
                    return Err(self.err(section, k, "unknown field"));
                }
            }
        }
        Ok(())
    }
}

fn metric(r: &Reader, section: &str) -> Result<MetricKind> {
    match r.string(section, "kind", Some("euclidean"))?.as_str() {
        "euclidean" => Ok(MetricKind::Euclidean),
        "parabolic" => Ok(MetricKind::Parabolic),
        other => Err(r.err(section, "kind", format!("expected `euclidean` or `parabolic`, got `{other}`"))),
    }
}

fn radii(r: &Reader, section: &str, default: Option<Vec<f64>>) -> Result<Vec<f64>> {
    let v = r.floats(section, "radii", default)?;
    if v.is_empty() || v.iter().any(|e| !(*e > 0.0)) {
        return Err(r.err(section, "radii", "radii must be a non-empty list of positive numbers"));
    }
    Ok(v)
}

fn task_params(r: &Reader, task: Task, d: usize) -> Result<TaskParams> {
    let vector = |section: &str, key: &str, default: Option<Vec<f64>>| -> Result<Vec<f64>> {
        let v = r.floats(section, key, default)?;
        if v.len() != d {
            return Err(r.err(section, key, format!("expected {d} entries, found {}", v.len())));
        }
        Ok(v)
    };
    Ok(match task {
        Task::Sample => TaskParams::Sample,
        Task::CovarianceAudit => {
            let s = "covariance_audit";
            r.check_keys(s, &["pairs", "source"])?;
            let exact = match r.string(s, "source", Some("spectral"))?.as_str() {
                "spectral" => false,
                "exact" => true,
                other => return Err(r.err(s, "source", format!("expected `spectral` or `exact`, got `{other}`"))),
            };
            TaskParams::CovarianceAudit(CovarianceParams {
                pairs: r.positive(s, "pairs", Some(1000), 1)?,
                exact,
            })
        }
        Task::Hitprob => {
            let s = "hitprob";
            r.check_keys(s, &["center", "radii", "region", "at", "floor_factor"])?;
            let region = match r.string(s, "region", Some("full"))?.as_str() {
                "full" => RegionKind::Full,
                "time_section" => RegionKind::TimeSection,
                "space_section" => RegionKind::SpaceSection,
                other => {
                    return Err(r.err(s, "region", format!("expected full, time_section or space_section, got `{other}`")))
                }
            };
            let floor_factor = r.f64(s, "floor_factor", Some(1.0))?;
            if !(floor_factor >= 0.0) {
                return Err(r.err(s, "floor_factor", "must be non-negative"));
            }
            TaskParams::Hitprob(HitprobParams {
                center: vector(s, "center", Some(vec![0.0; d]))?,
                radii: radii(r, s, None)?,
                region,
                at: r.f64(s, "at", Some(0.5))?,
                floor_factor,
            })
        }
        Task::Capacity => {
            let s = "capacity";
            r.check_keys(s, &["betas", "points", "target_file", "kind"])?;
            let betas = r.floats(s, "betas", Some(vec![0.25, 0.5, 0.75]))?;
            if betas.is_empty() {
                return Err(r.err(s, "betas", "need at least one order"));
            }
            let target_file = match r.get(s, "target_file") {
                Some(_) => Some(PathBuf::from(r.string(s, "target_file", None)?)),
                None => None,
            };
            TaskParams::Capacity(CapacityParams {
                betas,
                points: r.positive(s, "points", Some(64), 1)?,
                target_file,
                kind: metric(r, s)?,
            })
        }
        Task::Dimension => {
            let s = "dimension";
            r.check_keys(s, &["z", "selector", "at", "tol", "levels", "kind"])?;
            let at = r.f64(s, "at", Some(0.5))?;
            let selector = match r.string(s, "selector", Some("time_section"))?.as_str() {
                "full" => Selector::Full,
                "time_section" => Selector::TimeSection(at),
                "space_section" => Selector::SpaceSection(at),
                "time_projection" => Selector::TimeProjection,
                "space_projection" => Selector::SpaceProjection,
                other => return Err(r.err(s, "selector", format!("unknown selector `{other}`"))),
            };
            let tol = match r.get(s, "tol") {
                Some(_) => {
                    let t = r.f64(s, "tol", None)?;
                    if !(t > 0.0) {
                        return Err(r.err(s, "tol", "must be positive"));
                    }
                    Some(t)
                }
                None => None,
            };
            let lv = r.floats(s, "levels", Some(vec![2.0, 8.0]))?;
            if lv.len() != 2 || lv[0] < 0.0 || lv[1] < lv[0] || lv.iter().any(|v| v.fract() != 0.0) {
                return Err(r.err(s, "levels", "expected [first, last] non-negative integers"));
            }
            TaskParams::Dimension(DimensionParams {
                z: vector(s, "z", Some(vec![0.0; d]))?,
                selector,
                tol,
                levels: (lv[0] as u32, lv[1] as u32),
                kind: metric(r, s)?,
            })
        }
        Task::Modulus => {
            let s = "modulus";
            r.check_keys(s, &["p", "radii", "center", "ball_nodes"])?;
            let p = r.f64(s, "p", Some(2.0))?;
            if !(p >= 1.0) {
                return Err(r.err(s, "p", "moment order must be at least 1"));
            }
            let c = r.floats(s, "center", Some(vec![0.5, 0.5]))?;
            if c.len() != 2 {
                return Err(r.err(s, "center", "expected [t, x]"));
            }
            TaskParams::Modulus(ModulusParams {
                p,
                radii: radii(r, s, Some((2..=6).map(|k| 2f64.powi(-k)).collect()))?,
                center: (c[0], c[1]),
                ball_nodes: r.positive(s, "ball_nodes", Some(4), 1)?,
            })
        }
        Task::Girsanov => {
            let s = "girsanov";
            r.check_keys(s, &["probes"])?;
            let raw = r.floats(s, "probes", Some(vec![1.0, 0.5]))?;
            if raw.is_empty() || raw.len() % 2 != 0 {
                return Err(r.err(s, "probes", "expected a flat list t1, x1, t2, x2, ..."));
            }
            TaskParams::Girsanov(GirsanovParams {
                probes: raw.chunks_exact(2).map(|c| (c[0], c[1])).collect(),
            })
        }
        Task::VerifyAll => {
            let s = "verify_all";
            r.check_keys(s, &["scale"])?;
            let scale = match r.string(s, "scale", Some("full"))?.as_str() {
                "quick" => Scale::Quick,
                "full" => Scale::Full,
                other => return Err(r.err(s, "scale", format!("expected `quick` or `full`, got `{other}`"))),
            };
            TaskParams::VerifyAll { scale }
        }
    })
}

impl ExperimentManifest {
    pub fn load(file: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(file)?;
        Self::parse(&src, file)
    }

    pub fn parse(src: &str, file: &Path) -> Result<Self> {
        let root: Table = src.parse().map_err(|e: toml::de::Error| {
            let line = e
                .span()
                .map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1)
                .unwrap_or(1);
            Error::Validation {
                file: file.to_path_buf(),
                line,
                field: "<syntax>".into(),
                message: e.message().to_string(),
            }
        })?;
        let r = Reader { file, src, root: &root };
        let task_name = r.string("", "task", None)?;
        let task = Task::parse(&task_name).ok_or_else(|| r.err("", "task", format!("unknown task `{task_name}`")))?;
        r.check_keys(
            "",
            &["name", "task", "seed", "replicas", "k_max", "out", "field", "grid", task.name()],
        )?;
        r.check_keys("field", &["d", "sigma", "horizon", "t0", "drift"])?;
        r.check_keys("field.drift", &["kind", "params"])?;
        r.check_keys("grid", &["nt", "nx", "start"])?;

        let seed = r.int("", "seed", None)?;
        if seed < 0 {
            return Err(r.err("", "seed", "must be non-negative"));
        }
        let d = r.positive("field", "d", None, 1)?;
        let horizon = r.f64("field", "horizon", Some(1.0))?;
        let t0 = r.f64("field", "t0", Some(1.0 / 64.0))?;
        let sigma = match r.get("field", "sigma") {
            None => None,
            Some(Value::Array(rows)) => {
                let mut flat = Vec::with_capacity(d * d);
                for row in rows {
                    match row {
                        Value::Array(a) if a.len() == d => {
                            for v in a {
                                flat.push(r.f64_of("field", "sigma", v)?);
                            }
                        }
                        _ => return Err(r.err("field", "sigma", format!("expected {d} rows of {d} numbers"))),
                    }
                }
                if flat.len() != d * d {
                    return Err(r.err("field", "sigma", format!("expected {d} rows of {d} numbers")));
                }
                Some(flat)
            }
            Some(v) => return Err(r.err("field", "sigma", format!("expected an array, found {}", v.type_str()))),
        };
        let identity: Vec<f64> = (0..d * d).map(|k| if k % (d + 1) == 0 { 1.0 } else { 0.0 }).collect();
        let spec = FieldSpec::new(d, sigma.as_deref().unwrap_or(&identity), horizon, t0).map_err(|e| {
            let key = match e {
                Error::Domain(ref m) if m.contains("warm-up") => "t0",
                Error::Domain(ref m) if m.contains("horizon") => "horizon",
                _ => "sigma",
            };
            r.err("field", key, e.to_string())
        })?;
        let drift = match r.table("field.drift") {
            None => DriftDescriptor::None,
            Some(_) => DriftDescriptor::Builtin {
                name: r.string("field.drift", "kind", None)?,
                params: r.floats("field.drift", "params", Some(Vec::new()))?,
            },
        };
        if let DriftDescriptor::Builtin { .. } = &drift {
            crate::drift::DriftSpec::from_descriptor(&drift, d).map_err(|e| r.err("field.drift", "kind", e.to_string()))?;
        }
        let spec = spec.with_drift(drift);

        let nt = r.positive("grid", "nt", None, 2)?;
        let nx = r.positive("grid", "nx", None, 2)?;
        let start = r.f64("grid", "start", Some(spec.t0()))?;
        if !(start >= spec.t0() && start < spec.horizon()) {
            return Err(r.err("grid", "start", format!("must lie in [t0, horizon) = [{}, {})", spec.t0(), spec.horizon())));
        }
        let grid = GridSpec::uniform(start, spec.horizon(), nt, nx).map_err(|e| r.err("grid", "nt", e.to_string()))?;

        let out = match r.get("", "out") {
            Some(_) => Some(PathBuf::from(r.string("", "out", None)?)),
            None => None,
        };
        Ok(Self {
            name: r.string("", "name", Some("experiment"))?,
            task,
            seed: seed as u64,
            replicas: r.positive("", "replicas", Some(1), 1)?,
            k_max: r.positive("", "k_max", Some(crate::field::spectral::SpectralModel::DEFAULT_K_MAX as i64), 1)?,
            params: task_params(&r, task, d)?,
            spec,
            grid,
            out,
            source: src.to_string(),
            file: file.to_path_buf(),
        })
    }

    /// Hex SHA-256 of the manifest text.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.source.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"name = "demo"
task = "sample"
seed = 7
replicas = 2
k_max = 32

[field]
d = 2
horizon = 1.0
t0 = 0.1

[grid]
nt = 5
nx = 9
"#;

    fn parse(src: &str) -> Result<ExperimentManifest> {
        ExperimentManifest::parse(src, Path::new("m.toml"))
    }

    #[test]
    fn parses_a_minimal_manifest() {
        let m = parse(GOOD).unwrap();
        assert_eq!(m.task, Task::Sample);
        assert_eq!((m.grid.nt(), m.grid.nx()), (5, 9));
        assert_eq!(m.content_hash().len(), 64);
    }

    #[test]
    fn errors_name_line_and_field() {
        let bad = GOOD.replace("nt = 5", "nt = 0");
        match parse(&bad) {
            Err(Error::Validation { line, field, .. }) => {
                assert_eq!(field, "grid.nt");
                assert_eq!(line, 13);
            }
            other => panic!("{other:?}"),
        }
        let typo = GOOD.replace("nx = 9", "nx = 9\nnz = 3");
        assert!(matches!(parse(&typo), Err(Error::Validation { line: 15, .. })));
        let syntax = GOOD.replace("seed = 7", "seed = = 7");
        assert!(matches!(parse(&syntax), Err(Error::Validation { line: 3, .. })));
    }
}
