use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/gilroy_small.toml")
}

fn restore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_restore"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_into(out: &Path, extra: &[&str]) -> Output {
    let config = bundled_config();
    let mut args = vec![
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    restore(&args)
}

#[test]
fn validate_accepts_bundled_config() {
    let out = restore(&["validate", "--config", bundled_config().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("6 retailers") && stdout.contains("population 50000"),
        "{stdout}"
    );
}

#[test]
fn curves_have_documented_column_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(dir.path(), &["--replicates", "1", "--policy", "base,rollout-sa"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curves = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let header: Vec<&str> = curves.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 2 * 3 + 2);
    assert_eq!(
        header,
        [
            "time_days",
            "base_mean",
            "base_lower",
            "base_upper",
            "rollout-sa_mean",
            "rollout-sa_lower",
            "rollout-sa_upper",
            "base_rep0",
            "rollout-sa_rep0"
        ]
    );
    assert!(!curves.contains('\r'));
    let rewards = fs::read_to_string(dir.path().join("rewards.csv")).unwrap();
    assert_eq!(rewards.lines().count(), 1 + 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["replicates"], 1);
    assert_eq!(manifest["scenario_fingerprints"].as_array().unwrap().len(), 1);
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--replicates", "4", "--seed", "17"];
    assert!(run_into(a.path(), &[&args[..], &["--threads", "1"]].concat())
        .status
        .success());
    assert!(run_into(b.path(), &[&args[..], &["--threads", "3"]].concat())
        .status
        .success());
    for file in ["curves.csv", "rewards.csv", "histogram.csv"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn overrides_change_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_into(a.path(), &["--replicates", "2", "--seed", "1"])
        .status
        .success());
    assert!(run_into(
        b.path(),
        &["--replicates", "2", "--seed", "2", "--crews", "2", "--sa-iters", "40"]
    )
    .status
    .success());
    assert_ne!(
        fs::read(a.path().join("rewards.csv")).unwrap(),
        fs::read(b.path().join("rewards.csv")).unwrap()
    );
}

#[test]
fn invalid_config_names_the_offender() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(bundled_config())
        .unwrap()
        .replace("wn_node = \"main_west\"", "wn_node = \"main_nowhere\"");
    let path = dir.path().join("broken.toml");
    fs::write(&path, text).unwrap();
    let out = restore(&["validate", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("main_nowhere"), "{stderr}");
}

#[test]
fn bad_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!run_into(dir.path(), &["--policy", "greedy"]).status.success());
    assert!(!run_into(dir.path(), &["--crews", "0"]).status.success());
    assert!(!run_into(dir.path(), &["--sa-gamma", "1.5"]).status.success());
    let missing = restore(&["validate", "--config", "/nonexistent/config.toml"]);
    assert!(!missing.status.success());
}
