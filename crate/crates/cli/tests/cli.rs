use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wardsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wardsim"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .env_remove("WARDSIM_OUTPUT_DIR")
        .env_remove("WARDSIM_WORKERS")
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path, scenario: &str) -> String {
    let out = wardsim(&["init", "run.toml", "--scenario", scenario], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.join("run.toml");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replace("scale_factor = 0.1", "scale_factor = 0.02")).unwrap();
    "run.toml".to_string()
}

#[test]
fn init_writes_the_same_file_every_time() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["a.toml", "b.toml"] {
        let out = wardsim(&["init", name, "--scenario", "collider", "--seed", "9"], tmp.path());
        assert!(out.status.success());
    }
    let a = fs::read(tmp.path().join("a.toml")).unwrap();
    assert_eq!(a, fs::read(tmp.path().join("b.toml")).unwrap());
    assert!(String::from_utf8(a).unwrap().contains("seed = 9"));
}

#[test]
fn init_keeps_an_existing_file_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "keep me").unwrap();
    let out = wardsim(&["init", "c.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(fs::read_to_string(tmp.path().join("c.toml")).unwrap(), "keep me");
    assert!(wardsim(&["init", "c.toml", "--force"], tmp.path()).status.success());
}

#[test]
fn invalid_config_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "mediator");
    let path = tmp.path().join(&cfg);
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replace("alpha_home = 0.01", "alpha_home = 1.5")).unwrap();
    let out = wardsim(&["simulate", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha_home"));
    assert!(!tmp.path().join("dataset").exists());

    fs::write(&path, "seed = 1\n[world]\nno_such_key = 3\n").unwrap();
    assert_eq!(wardsim(&["simulate", &cfg], tmp.path()).status.code(), Some(2));
}

#[test]
fn simulate_then_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "mediator");
    let out = wardsim(&["simulate", &cfg, "--output-dir", "out"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    for name in ["adult_information.csv", "adult_place.csv", "story.md", "manifest.json"] {
        assert!(dir.join(name).is_file(), "{name}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "mediator");
    assert_eq!(manifest["seed"], 1);

    // A second run refuses to overwrite.
    let again = wardsim(&["simulate", &cfg, "--output-dir", "out"], tmp.path());
    assert_eq!(again.status.code(), Some(3));

    let out = wardsim(&["analyze", "out", "fig5"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("age,"), "{csv}");
    assert!(dir.join("analysis/fig5_rate_by_age.csv").is_file());
    assert!(dir.join("analysis/fig5_rate_by_age.json").is_file());

    let out = wardsim(
        &["analyze", "out", "stratified", "--outcome", "vaccinated", "--by", "sex", "--by", "age:25"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn analyze_rejects_unknown_names() {
    let tmp = tempfile::tempdir().unwrap();
    let out = wardsim(&["analyze", ".", "fig99"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig99"));
}

#[test]
fn story_prints_the_requested_level() {
    let tmp = tempfile::tempdir().unwrap();
    let base = wardsim(&["story", "--scenario", "collider"], tmp.path());
    let hinted = wardsim(&["story", "--scenario", "collider", "--level", "2"], tmp.path());
    assert!(base.status.success() && hinted.status.success());
    let (base, hinted) = (String::from_utf8(base.stdout).unwrap(), String::from_utf8(hinted.stdout).unwrap());
    assert!(!base.contains("vaccination may prevent infection"));
    assert!(hinted.contains("For example, vaccination may prevent infection."));
    assert_eq!(wardsim(&["story", "--level", "5"], tmp.path()).status.code(), Some(2));
}
