//! Runs every acceptance criterion at full scale and prints one line each.
//! Criterion 12 drives the binary twice on the quick verification manifest
//! with different thread counts and compares the artifacts byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use hitfield::io::Scale;
use hitfield::verify;

const SEED: u64 = 20261019;

fn report(id: u8, passed: bool, detail: &str, elapsed: Duration, budget: Option<Duration>) -> bool {
    let limit = match budget {
        Some(b) if elapsed > b => format!(" / {}s, over budget", b.as_secs()),
        Some(b) => format!(" / {}s", b.as_secs()),
        None => String::new(),
    };
    println!(
        "criterion {id:>2} {:<28} {} {detail} [{:.1}s{limit}]",
        verify::name(id),
        if passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    passed
}

fn artifacts(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("output directory") {
        let path = entry.expect("entry").path();
        // Wall-clock and thread count live in timing.toml by design.
        if path.file_name().is_some_and(|n| n == "timing.toml") {
            continue;
        }
        files.insert(path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).expect("artifact"));
    }
    files
}

fn verify_all_twice() -> (bool, String) {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests/verify_quick.toml");
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut outputs = Vec::new();
    for threads in ["1", "2"] {
        let out = tmp.path().join(format!("threads{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_hitfield"))
            .args(["verify-all", "--manifest"])
            .arg(&manifest)
            .arg("--out")
            .arg(&out)
            .env("HITFIELD_THREADS", threads)
            .output()
            .expect("run hitfield");
        // Exit code 1 means a check failed, which still leaves a complete artifact set.
        if !matches!(status.status.code(), Some(0 | 1)) {
            let err = String::from_utf8_lossy(&status.stderr).into_owned();
            let table = String::from_utf8_lossy(&status.stdout).into_owned();
            return (false, format!("verify-all exited with {}: {err}{table}", status.status));
        }
        outputs.push(artifacts(&out));
    }
    let same = outputs[0] == outputs[1];
    let names: Vec<String> = outputs[0].keys().map(|p| p.display().to_string()).collect();
    (same && !names.is_empty(), format!("threads=1,2 files={names:?} identical={same}"))
}

fn main() {
    let mut all = true;
    for id in 1..=verify::CHECKS {
        let start = Instant::now();
        let (passed, detail) = match verify::run(id, Scale::Full, SEED) {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= report(id, passed, &detail, start.elapsed(), Some(verify::budget(id)));
    }
    let start = Instant::now();
    let (passed, detail) = verify_all_twice();
    all &= report(12, passed, &detail, start.elapsed(), None);
    if !all {
        std::process::exit(1);
    }
}
