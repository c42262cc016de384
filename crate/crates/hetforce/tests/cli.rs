use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hetforce(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetforce"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{name}.summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn csv(dir: &Path, name: &str) -> Vec<Vec<String>> {
    std::fs::read_to_string(dir.join(format!("{name}.csv")))
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn period_scan_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = hetforce(&["period-scan", "--mu-list", "1e-2,1e-3,1e-4,1e-5"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv(dir.path(), "period-scan");
    assert_eq!(rows[0], ["mu", "x_star", "period", "ln_inv_mu", "x_star_over_mu"]);
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        for cell in row {
            let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.len(), 18, "{cell}");
            cell.parse::<f64>().unwrap();
        }
    }
    let s = summary(dir.path(), "period-scan");
    assert_eq!(s["params"]["alpha"], 1.0);
    assert_eq!(s["params"]["beta"], -0.2);
    assert!((s["fit"]["slope"].as_f64().unwrap() - 3.125).abs() < 0.05 * 3.125);
    assert_eq!(s["passed"], true);
    assert!(s["error"].is_null());
    assert!(s["metadata"]["generated_unix_time"].is_u64());
    let plot = std::fs::read_to_string(dir.path().join("period-scan.plot")).unwrap();
    assert!(plot.contains("'period-scan.csv'"));
}

#[test]
fn converge_omega_reports_inverse_omega_decay() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "converge-omega",
        "--nu",
        "0.01",
        "--mu",
        "0.005",
        "--omega-start",
        "10",
        "--omega-factor",
        "2",
        "--omega-count",
        "8",
    ];
    assert_eq!(hetforce(&args, dir.path()).status.code(), Some(0));
    let s = summary(dir.path(), "converge-omega");
    assert!((s["fit"]["slope"].as_f64().unwrap() + 1.0).abs() < 0.15);
    assert_eq!(csv(dir.path(), "converge-omega")[0], ["omega", "sup_distance"]);
    assert_eq!(s["inputs"]["omegas"].as_array().unwrap().len(), 8);
}

#[test]
fn flags_override_sections_override_globals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# shared\nalpha = 1.1\nbeta = -0.3\nmu-list = 1e-2,1e-3,1e-4,1e-5\n\n[period-scan]\nbeta = -0.25\nmu-list = 1e-3,1e-4,1e-5,1e-6\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let out = hetforce(&["period-scan", "--config", c, "--alpha", "1.2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "period-scan");
    assert_eq!(s["params"]["alpha"], 1.2);
    assert_eq!(s["params"]["beta"], -0.25);
    assert_eq!(s["inputs"]["mu_list"][0], 1e-3);

    // globals apply to experiments without a section
    let out = hetforce(&["calibrate-a", "--config", c], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "calibrate-a");
    assert_eq!(s["params"]["alpha"], 1.1);
    assert_eq!(s["params"]["beta"], -0.3);
    assert_eq!(s["inputs"]["mu_list"][0], 1e-2);
}

#[test]
fn configuration_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.cfg");
    std::fs::write(&bad_cfg, "[period-scan]\nomega-count = 3\n").unwrap();
    let unknown_section = dir.path().join("sec.cfg");
    std::fs::write(&unknown_section, "[nonsense]\nmu = 1\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["validate", "--beta", "0.1"],
        vec!["validate", "--alpha", "x"],
        vec!["validate", "--no-such-flag", "1"],
        vec!["no-such-experiment"],
        vec!["period-scan", "--config", bad_cfg.to_str().unwrap()],
        vec!["period-scan", "--config", unknown_section.to_str().unwrap()],
        vec!["period-scan", "--config", "/nonexistent/file.cfg"],
        vec!["simulate", "--start", "1,2"],
        vec!["validate", "--forcing", "fourier:0"],
    ];
    for args in cases {
        let out = hetforce(&args, dir.path());
        assert_eq!(out.status.code(), Some(3), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn failed_checks_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // the returned x misses by far more than 10% at eps = 0.05
    let out = hetforce(&["compare-maps", "--epsilon", "0.05"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let s = summary(dir.path(), "compare-maps");
    assert_eq!(s["passed"], false);
    assert!(s["error"].is_null());
    assert_eq!(s["checks"][0]["pass"], false);
}

#[test]
fn runtime_errors_exit_1_with_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = hetforce(&["return-map", "--mu", "1e-3", "--iterations", "4"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let s = summary(dir.path(), "return-map");
    assert_eq!(s["error"]["kind"], "runtime");
    assert!(s["error"]["message"].as_str().unwrap().contains("analytic"));
    let rows = csv(dir.path(), "return-map");
    assert_eq!(rows.len(), 6);
    // the numeric path keeps going after the analytic one fails
    assert_ne!(rows[5][6], "NaN");
    assert_eq!(rows[5][2], "NaN");
}

#[test]
fn simulate_records_trajectory_and_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let out = hetforce(&["simulate", "--mu", "1e-3", "--t-end", "40"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv(dir.path(), "simulate");
    assert_eq!(rows[0], ["t", "x", "y", "z", "s", "r"]);
    let last: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert!((last - 40.0).abs() < 1e-9);
    let s = summary(dir.path(), "simulate");
    assert!(!s["outputs"]["events"].as_array().unwrap().is_empty());
}

#[test]
fn fourier_forcing_runs_through_quadrature() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "converge-omega",
        "--nu",
        "0.01",
        "--mu",
        "0.005",
        "--forcing",
        "fourier:1,0.3",
        "--omega-count",
        "4",
    ];
    let out = hetforce(&args, dir.path());
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
    let s = summary(dir.path(), "converge-omega");
    assert_eq!(s["forcing"], "fourier:1e0,3e-1");
    assert!(s["error"].is_null());
}

#[test]
fn validate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(hetforce(&["validate"], a.path()).status.code(), Some(0));
    assert_eq!(hetforce(&["validate"], b.path()).status.code(), Some(0));
    assert_eq!(
        std::fs::read(a.path().join("validate.csv")).unwrap(),
        std::fs::read(b.path().join("validate.csv")).unwrap()
    );
    let strip = |d: &Path| {
        let mut v = summary(d, "validate");
        v.as_object_mut().unwrap().remove("metadata");
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn help_exits_0() {
    let out = Command::new(env!("CARGO_BIN_EXE_hetforce")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("converge-omega"));
}
