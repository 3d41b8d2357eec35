use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tegsim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tegsim"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("tegsim runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        "n_modules = 40\n[synth]\nduration_s = 60\n[validate]\ninstances = 20\ncases = 20\n",
    )
    .unwrap();
    path
}

#[test]
fn curves_writes_one_file_per_delta_t() {
    let dir = tempfile::tempdir().unwrap();
    let o = tegsim(
        &["curves", "--delta-t", "30", "--delta-t", "60"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["iv_dT30.csv", "iv_dT60.csv", "mpp_points.csv"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let text = fs::read_to_string(dir.path().join("iv_dT30.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert!(
        header.starts_with("voltage_V,current_A,power_W"),
        "{header}"
    );
}

#[test]
fn synth_trace_round_trips_through_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = tegsim(&["--seed", "3", "synth-trace"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = dir.path().join("trace.csv");
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("time_s,coolant_inlet_C,ambient_C"));

    let cfg = dir.path().join("measured.toml");
    fs::write(
        &cfg,
        "n_modules = 30\nschemes = [\"dnor\", \"fixed\"]\ntrace_file = \"trace.csv\"\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = tegsim(&["--config", cfg.to_str().unwrap(), "compare"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("DNOR"));
    assert!(out.join("comparison.csv").exists());
}

#[test]
fn run_writes_records_per_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = tegsim(
        &["--config", cfg.to_str().unwrap(), "--scheme", "dnor", "run"],
        &out,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("dnor_records.csv").exists());
    assert!(out.join("dnor_decisions.csv").exists());
    assert!(!out.join("inor_records.csv").exists());
}

#[test]
fn validate_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = tegsim(&["--config", cfg.to_str().unwrap(), "validate"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(dir.path().join("gaps.csv").exists());
}

#[test]
fn scaling_prints_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = tegsim(&["scaling", "--sizes", "100,200,400"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("R^2 = ")).unwrap();
    let value = &line["R^2 = ".len()..];
    assert_eq!(value.split('.').nth(1).map(str::len), Some(4), "{line}");
    assert!(dir.path().join("scaling.csv").exists());
}

#[test]
fn scaling_requires_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let o = tegsim(&["scaling"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_exit_2_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[teg]\ninternal_resistance = -1.0\n").unwrap();
    let o = tegsim(&["--config", bad.to_str().unwrap(), "run"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("teg.internal_resistance"),
        "{}",
        stderr(&o)
    );

    fs::write(&bad, "n_modules = 10\nbogus = 1\n").unwrap();
    let o = tegsim(&["--config", bad.to_str().unwrap(), "run"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 2"), "{}", stderr(&o));

    let o = tegsim(&["--scheme", "dnor", "compare"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_scheme_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = tegsim(&["--scheme", "greedy", "run"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
