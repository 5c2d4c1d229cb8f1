use std::path::Path;
use std::process::{Command, Output};

use owc_sim::activation::MlpModel;

fn owc(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_owc-sim"));
    c.args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn eyesafety_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = owc(&["eyesafety", "--set", "lambda_nm=1550", "--out", out], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("19.2/60.2/129.1"));

    let csv = read(&dir.path().join("eyesafety.csv"));
    assert!(csv.starts_with("# experiment: eyesafety\n# seed: 1\n# config_hash: "));
    let p: Vec<String> = data_rows(&csv).iter().map(|r| format!("{:.1}", r[3].parse::<f64>().unwrap())).collect();
    assert_eq!(p, ["19.2", "60.2", "129.1"]);
}

#[test]
fn bad_config_reports_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"layout": {"d_cell": -0.1}}"#).unwrap();
    let o = owc(&["validate-config", "--config", bad.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("layout.d_cell"));

    std::fs::write(&bad, r#"{"receiver": {"g_apd": 30, "gain": 2}}"#).unwrap();
    let o = owc(&["validate-config", "--config", bad.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("receiver.gain"));

    std::fs::write(&bad, r#"{"experiment": "multiuser", "n_ue": [3, 7]}"#).unwrap();
    let o = owc(&["validate-config", "--config", bad.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("config ok: multiuser"));
}

#[test]
fn usage_errors_print_usage() {
    let o = owc(&["snr-map", "--bogus"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = owc(&[], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, "").unwrap();
    let o = owc(&["eyesafety", "--out", file.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["multiuser", "--set", "multiuser_trials=200", "--set", "n_ue=[2,9]", "--seed", "7"];
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3", "1"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let mut a = args.to_vec();
        a.extend(["--out", out.to_str().unwrap()]);
        let o = owc(&a, &[("OWC_SIM_THREADS", threads)]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(out.join("multiuser.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    assert!(String::from_utf8_lossy(&outputs[0]).contains("# seed: 7\n"));
}

#[test]
fn dat_mirror_and_saved_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = owc(
        &[
            "train-ann",
            "--dat",
            "--out",
            out,
            "--set",
            "rows=2000",
            "--set",
            "epochs=2",
            "--set",
            r#"orientations=[{"model":"fixed"}]"#,
            "--set",
            r#"uplinks=["omni"]"#,
            "--set",
            "save_models=true",
            "--set",
            "isvlp_errors=[0.01]",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dat = read(&dir.path().join("train-ann.dat"));
    assert!(dat.lines().any(|l| l.starts_with("# method")));
    let model = MlpModel::load(&dir.path().join("mlp_odtx_fixed.json")).unwrap();
    assert_eq!(model.dims, [5, 5, 9]);
    assert!(dir.path().join("mlp_odtx_position_fixed.json").exists());
}

#[test]
fn print_config_round_trips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let o = owc(&["mobility", "--print-config", "--set", "speeds=[0.7]"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("resolved.json");
    std::fs::write(&path, &o.stdout).unwrap();
    let v = owc(&["validate-config", "--config", path.to_str().unwrap()], &[]);
    assert_eq!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stdout).contains("mobility"));
}
