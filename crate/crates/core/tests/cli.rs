use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dcsim(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dcsim"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("DCSIM__")) {
        cmd.env_remove(k);
    }
    cmd.current_dir(dir).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const MINIMAL: &str = "[layout]\nlambda_pump = 351.1e-9\n[screen]\ngrid = 401\n";

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_pattern_and_result() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", MINIMAL);
    let out = dcsim(tmp.path(), &["run", "--config", "c.toml", "--out", "a"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = tmp.path().join("a");
    assert!(a.join("pattern_position.csv").exists());
    let result = json(&a.join("result_position.json"));
    assert_eq!(result["inferred_bit"], "position");
    assert_eq!(result["config"]["layout"]["lambda_dc"], 702.2e-9);
    let csv = fs::read_to_string(a.join("pattern_position.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x_m,intensity"));
    // 17 significant digits
    let first = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(first.split('e').next().unwrap().len(), 18);
}

#[test]
fn rerun_from_echo_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "c.toml",
        "[layout]\nlambda_pump = 351.1e-9\nphi0_deg = 22.5\n[weight]\nprofile = \"sin2\"\n[screen]\ngrid = 401\n[run]\nmonte_carlo_events = 20000\nseed = 7\n",
    );
    let out = dcsim(
        tmp.path(),
        &["run", "--config", "c.toml", "--protocol", "momentum", "--out", "a"],
    );
    assert!(out.status.success());
    let out = dcsim(tmp.path(), &["run", "--config", "a/resolved_config.toml", "--out", "b"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["pattern_momentum.csv", "counts_momentum.csv"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    let mut a = json(&tmp.path().join("a/result_momentum.json"));
    let mut b = json(&tmp.path().join("b/result_momentum.json"));
    for v in [&mut a, &mut b] {
        v["config"]["run"]["output_dir"] = serde_json::Value::Null;
    }
    assert_eq!(a, b);
}

#[test]
fn oracle_and_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", MINIMAL);
    let out = dcsim(tmp.path(), &["oracle", "--config", "c.toml"]);
    assert!(out.status.success());
    let report = json(&tmp.path().join("out/no_signaling_report.json"));
    assert_eq!(report["pass"], true);
    assert_eq!(report["include_filter"], false);

    let out = dcsim(
        tmp.path(),
        &["sweep", "--config", "c.toml", "--param", "phi0_deg", "--from", "10", "--to", "80", "--steps", "8"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("out/sweep_phi0_deg.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("parameter,visibility_p,visibility_m,flux_ratio"));
    let vp: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(vp.len(), 8);
    // widening the angular interval (smaller φ₀) lowers ⟨sin φ⟩
    assert!(vp.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn exit_codes_and_error_json() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "typo.toml", "[layout]\nlambda_pump = 351.1e-9\nlamda = 1.0\n");
    let out = dcsim(tmp.path(), &["run", "--config", "typo.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert_eq!(err["line"], 3);
    assert!(err["message"].as_str().unwrap().contains("lamda"));

    // hole angle equal to the fringe angle parses, then the run is refused
    write(tmp.path(), "wide.toml", "[layout]\nlambda_pump = 351.1e-9\nhole_diameter = 7.022e-4\n");
    let out = dcsim(tmp.path(), &["run", "--config", "wide.toml"]);
    assert_eq!(out.status.code(), Some(3));
    let out = dcsim(tmp.path(), &["validate", "--config", "wide.toml"]);
    assert_eq!(out.status.code(), Some(3));
    let diag: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(diag["run_allowed"], false);

    write(tmp.path(), "ok.toml", MINIMAL);
    let out = dcsim(tmp.path(), &["validate", "--config", "ok.toml"]);
    assert_eq!(out.status.code(), Some(0));

    let out = dcsim(tmp.path(), &["run", "--config", "missing.toml"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn env_override_reaches_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "c.toml", MINIMAL);
    let out = Command::new(env!("CARGO_BIN_EXE_dcsim"))
        .current_dir(tmp.path())
        .args(["run", "--config", "c.toml"])
        .env("DCSIM__RUN__PROTOCOL", "momentum")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("out/result_momentum.json").exists());
}
