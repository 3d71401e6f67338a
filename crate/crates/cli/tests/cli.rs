use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn manifests() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests")
}

fn hitfield(args: &[&str], manifest: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitfield"))
        .args(args)
        .arg("--manifest")
        .arg(manifest)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run hitfield")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timing.toml")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn sample_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = manifests().join("sample.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(hitfield(&["sample"], &manifest, &a).status.success());
    assert!(hitfield(&["sample"], &manifest, &b).status.success());
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    assert!(fa.iter().any(|(n, _)| n == "path_0000.bin"));
    assert!(fa.iter().any(|(n, _)| n == "metadata.toml"));
    assert_eq!(fa, fb);
}

#[test]
fn seed_override_changes_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = manifests().join("sample.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(hitfield(&["sample"], &manifest, &a).status.success());
    assert!(hitfield(&["sample", "--seed", "8"], &manifest, &b).status.success());
    let path_a = std::fs::read(a.join("path_0000.bin")).unwrap();
    let path_b = std::fs::read(b.join("path_0000.bin")).unwrap();
    assert_ne!(path_a, path_b);
}

#[test]
fn invalid_manifest_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let source = std::fs::read_to_string(manifests().join("sample.toml")).unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, source.replace("nt = 65", "nt = 0")).unwrap();
    let out = hitfield(&["sample"], &bad, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.nt"), "{err}");
    assert!(err.contains("bad.toml:13:"), "{err}");
    assert!(!tmp.path().join("out").join("path_0000.bin").exists());
}

#[test]
fn task_must_match_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let out = hitfield(&["capacity"], &manifests().join("sample.toml"), &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("task"));
}
