use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn qsteer(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsteer"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn calcium_engineer_writes_contract_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = qsteer(&["engineer", scenario("calcium.json").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    let want = [
        "t_s", "stage", "re_rho_00", "im_rho_00", "re_rho_01", "im_rho_01", "re_rho_11", "im_rho_11", "obj_final",
        "obj_tilde", "bloch_x", "bloch_y", "bloch_z",
    ];
    assert_eq!(header, want);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert!(rows.iter().all(|r| r[1] == 1.0 || r[1] == 2.0));
    let boundary = rows.iter().position(|r| r[1] == 2.0).unwrap();
    assert!(rows[boundary..].iter().all(|r| r[1] == 2.0));
    assert!((rows[boundary - 1][0] - 50e-9).abs() < 1e-20);
    for r in &rows {
        let b = (r[10].powi(2) + r[11].powi(2) + r[12].powi(2)).sqrt();
        assert!(b <= 1.0 + 1e-10);
    }

    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "pass");
    assert!(report["final_error"].as_f64().unwrap() <= 1e-3);
    assert_eq!(report["plan"]["n_star"][0]["occupation"], 0.5);
    assert_eq!(report["plan"]["stage1_duration_s"], 5e-8);
    assert_eq!(report["final_error"].as_f64().unwrap(), rows.last().unwrap()[8]);
}

#[test]
fn numbers_carry_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    qsteer(&["engineer", scenario("ground.json").to_str().unwrap()], dir.path());
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    for field in row.split(',').filter(|f| f.contains('e')) {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.replace('.', "").len(), 17, "{field}");
    }
}

#[test]
fn ground_target_is_a_trivial_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = qsteer(&["engineer", scenario("ground.json").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["final_error"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn diagonal_coupling_in_pulse_mode_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let out = qsteer(&["engineer", scenario("uncontrollable.json").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "infeasible");
    assert_eq!(report["plan"]["warnings"][0]["kind"], "uncontrollable");
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"system": {"energies_rad_per_s": [0, 1]}}"#).unwrap();
    let out = qsteer(&["engineer", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("einstein_a_per_s"));

    let unordered = dir.path().join("unordered.json");
    let text = std::fs::read_to_string(scenario("calcium.json")).unwrap().replace("[0.0, 4.5e15]", "[4.5e15, 0.0]");
    std::fs::write(&unordered, text).unwrap();
    let out = qsteer(&["engineer", unordered.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("field `system`"));

    let missing = qsteer(&["engineer", dir.path().join("nope.json").to_str().unwrap()], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn short_stage1_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("calcium.json");
    let args = ["verify", path.to_str().unwrap(), "--trials", "20", "--seed", "7", "--cases", "10", "--a", "1"];
    let out = qsteer(&args, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert!(report["max_spread"].as_f64().unwrap() > 1e-3);
}

#[test]
fn controllability_verdict_lines() {
    let dir = tempfile::tempdir().unwrap();
    for (file, want) in [
        ("sigma_zx.json", "4/4 controllable"),
        ("commuting.json", "1/4 uncontrollable"),
        ("ladder3.json", "9/9 controllable"),
    ] {
        let out = qsteer(&["controllability", scenario(file).to_str().unwrap()], dir.path());
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), want);
    }
}

#[test]
fn kraus_emits_operators() {
    let dir = tempfile::tempdir().unwrap();
    let out = qsteer(&["kraus", scenario("mixed_target.json").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("kraus.json")).unwrap()).unwrap();
    assert_eq!(report["operators"].as_array().unwrap().len(), 4);
    assert!(report["constant_output_spread"].as_f64().unwrap() <= 1e-12);
    assert!(report["trace_preservation_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn mode_override_switches_to_ideal() {
    let dir = tempfile::tempdir().unwrap();
    let out = qsteer(
        &["engineer", scenario("calcium.json").to_str().unwrap(), "--mode", "ideal", "--samples", "10"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["plan"]["mode"], "ideal");
    assert!(report["final_error"].as_f64().unwrap() <= 1e-6);
    assert_eq!(report["trajectory_rows"], 19);
}
