use std::path::Path;
use std::process::{Command, Output};

fn geosum(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geosum"))
        .args(args)
        .current_dir(dir)
        .env_remove("GEOSUM_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const IID: &str = r#"
p_grid = [0.1, 0.01]
epsilon_grid = [0.5]

[spec]
marginal = { kind = "gaussian" }
coordinates = [{ variance = { kind = "constant", value = 1.0 } }]

[sim]
trials = 100000
seed = 42
"#;

const SMALL: &str = r#"
p_grid = [0.2]

[spec]
marginal = { kind = "scaled_rademacher" }
coordinates = [{ variance = { kind = "periodic", values = [0.5, 1.5] } }]

[sim]
trials = 2500
seed = 9

[output]
formats = ["csv", "binary"]
"#;

#[test]
fn simulate_writes_batches_with_one_row_per_trial() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = geosum(&["simulate", &cfg, "--out-dir", "a"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("a/batch_0_p0.2.csv")).unwrap();
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 2500);
    assert!(csv.contains("# config_fingerprint: "));
    assert!(tmp.path().join("a/batch_0_p0.2.bin").exists());
    let resolved = std::fs::read_to_string(tmp.path().join("a/resolved_config.toml")).unwrap();
    assert!(resolved.starts_with("# config_fingerprint: "));
    assert!(resolved.contains("workers = 1"));
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let mut outputs = Vec::new();
    for (dir, workers) in [("w1", "1"), ("w1b", "1"), ("w3", "3")] {
        let out = geosum(&["simulate", &cfg, "--out-dir", dir, "--workers", workers], tmp.path());
        assert!(out.status.success());
        outputs.push(std::fs::read(tmp.path().join(dir).join("batch_0_p0.2.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let out = Command::new(env!("CARGO_BIN_EXE_geosum"))
        .args(["simulate", &cfg, "--out-dir", "env"])
        .current_dir(tmp.path())
        .env("GEOSUM_WORKERS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let resolved = std::fs::read_to_string(tmp.path().join("env/resolved_config.toml")).unwrap();
    assert!(resolved.contains("workers = 2"));
    assert_eq!(std::fs::read(tmp.path().join("env/batch_0_p0.2.csv")).unwrap(), outputs[0]);
}

#[test]
fn seed_override_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    assert!(geosum(&["simulate", &cfg, "--out-dir", "a"], tmp.path()).status.success());
    assert!(geosum(&["simulate", &cfg, "--out-dir", "b", "--seed", "10"], tmp.path()).status.success());
    let a = std::fs::read(tmp.path().join("a/batch_0_p0.2.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/batch_0_p0.2.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn invalid_p_is_a_usage_error_with_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &IID.replace("[0.1, 0.01]", "[1.5]"));
    let out = geosum(&["simulate", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p_grid[0]"));

    let cfg = write_config(tmp.path(), "typo.toml", &IID.replace("seed = 42", "seed = 42\nsed = 1"));
    let out = geosum(&["simulate", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let out = geosum(&["simulate", "missing.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diagnose_iid_passes_and_reports_target() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "iid.toml", IID);
    let out = geosum(&["diagnose", &cfg, "--strict", "--json", "--out-dir", "d"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["pass"], true);
    assert_eq!(report["target_source"], "cesaro_estimate");
    assert_eq!(report["hypotheses"]["a_hat"][0], 0.0);
    assert!((report["hypotheses"]["sigma2_hat"][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let sweep = report["sweep"].as_array().unwrap();
    assert_eq!(sweep.len(), 2);
    assert_eq!(sweep[0]["batch_fingerprint"], report["spec_fingerprint"]);
    assert!(tmp.path().join("d/report.txt").exists());
    let on_disk: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("d/report.json")).unwrap()).unwrap();
    assert_eq!(on_disk, report);
}

#[test]
fn strict_diagnose_fails_on_lindeberg_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let body = IID
        .replace(r#"{ kind = "gaussian" }"#, r#"{ kind = "gaussian_mixture_outlier", rate = 0.2, share = 0.9 }"#)
        .replace("[0.1, 0.01]", "[0.1, 0.01, 0.001]")
        .replace("[0.5]", "[0.1]")
        .replace("trials = 100000", "trials = 5000");
    let cfg = write_config(tmp.path(), "outlier.toml", &body);
    let out = geosum(&["diagnose", &cfg, "--strict", "--out-dir", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("lindeberg   FAIL"), "{text}");
    let lax = geosum(&["diagnose", &cfg, "--out-dir", "o"], tmp.path());
    assert_eq!(lax.status.code(), Some(0));
}

#[test]
fn lemmas_default_and_single_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let out = geosum(&["lemmas", "--json"], tmp.path());
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["kind"], "full");
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["elementary"]["taylor"].as_array().unwrap().len(), 4);

    let out = geosum(&["lemmas", "--alpha", "2.5", "--p", "1e-3", "--json"], tmp.path());
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["kind"], "sum_bound");
    let rows = doc["tables"][0]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0]["ratio"].as_f64().unwrap() <= 1.0);

    let out = geosum(&["lemmas", "--alpha", "-1"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn wealth_demo_tails_follow_drift_sign() {
    let tmp = tempfile::tempdir().unwrap();
    let out = geosum(
        &["wealth-demo", "--drift", "0.5", "--p", "0.01", "--trials", "200000", "--json", "--out-dir", "w"],
        tmp.path(),
    );
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let right = r["right"]["normalized"]["index"].as_f64().unwrap();
    let left = r["left"]["normalized"]["index"].as_f64().unwrap();
    // a > 0 makes the right tail heavier: alpha < beta
    assert!(right < left, "{right} vs {left}");
    assert!(r["right"]["expected"].as_f64().unwrap() < r["left"]["expected"].as_f64().unwrap());
    let csv = std::fs::read_to_string(tmp.path().join("w/wealth.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 200_001);
}

#[test]
fn wealth_demo_flags_unit_growth_as_degenerate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = geosum(
        &["wealth-demo", "--constant-growth", "1", "--trials", "1000", "--json", "--out-dir", "w"],
        tmp.path(),
    );
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["degenerate"], true);
    assert!(r["right"].is_null() && r["left"].is_null());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let tmp = tempfile::tempdir().unwrap();
        // a tiny run through each config validates parsing end to end
        let text = std::fs::read_to_string(&path).unwrap();
        let body = text
            .lines()
            .map(|l| if l.starts_with("trials") { "trials = 300" } else { l })
            .collect::<Vec<_>>()
            .join("\n");
        let cfg = write_config(tmp.path(), "c.toml", &body);
        let out = geosum(&["simulate", &cfg, "--out-dir", "x"], tmp.path());
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}
