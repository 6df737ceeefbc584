//! End-to-end checks of the duav-sim binary: exit codes, CSV contract,
//! overrides, dumps, and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_duav-sim");

/// Small aerial-UE scenario that runs in well under a second.
const SMALL_CONFIG: &str = r#"
area_m2 = 1e4
bandwidth_hz = 2e9
bs_density_per_m2 = 8e-4
uav_density_per_m2 = 2e-3
ue_density_per_m2 = 0.03
eaves_density_per_m2 = 0.01
uav_altitude_m = 200.0
uav_tx_mw = 200.0
ue_tx_mw = 300.0
beta_dbm = -120.0
eta = 0.5
noise_dbm = -130.0
alpha_air = 2.0
alpha_ground = 4.0
scenario = "aerial-ue"
n_drops = 8
master_seed = 11
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

#[test]
fn csv_on_stdout_with_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out = run(&["--config", cfg.to_str().unwrap(), "--strategy", "new"]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep_param,sweep_value,scenario,strategy,link,n_drops,n_effective,skip_count,mean_bps,std_bps,ci95_lo_bps,ci95_hi_bps"
    );
    // One strategy, no sweep: overlay and cellular rows.
    assert_eq!(lines.count(), 2);
    assert!(text.contains("none,0,aerial-ue,new,overlay,8,"));
}

#[test]
fn missing_config_file_exits_1() {
    let out = run(&["--config", "/nonexistent/nope.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_config_exits_1_with_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL_CONFIG.replace("eta = 0.5", "eta = 1.4"));
    let out = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta out of [0,1]"));
}

#[test]
fn unknown_config_key_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL_CONFIG}\nwhatever = 3\n"));
    let out = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn set_overrides_any_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out = run(&["--config", cfg.to_str().unwrap(), "--set", "eta=1.4"]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "--set must pass through validation"
    );

    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "n_drops=3",
        "--set",
        "beta_interpretation=sinr-db",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains(",new,overlay,3,"),
        "n_drops override must land in CSV: {text}"
    );
}

#[test]
fn sweep_rows_and_strategy_both() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--strategy",
        "both",
        "--drops",
        "4",
        "--sweep",
        "eaves_density_per_m2=0.005,0.02",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().count(),
        9,
        "header + 2 values x 2 strategies x 2 links"
    );
    // The comparison report goes to stderr.
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("compare overlay sweep=0.005"), "stderr: {err}");
}

#[test]
fn non_monotone_sweep_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--sweep",
        "eta=0.5,0.2,0.3",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn all_degenerate_cell_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // No transmitting UEs at all: every drop is degenerate.
    let cfg = write_config(
        dir.path(),
        &SMALL_CONFIG
            .replace("ue_density_per_m2 = 0.03", "ue_density_per_m2 = 0.0")
            .replace("uav_density_per_m2 = 2e-3", "uav_density_per_m2 = 0.0"),
    );
    let out = run(&["--config", cfg.to_str().unwrap(), "--drops", "3"]);
    assert_eq!(out.status.code(), Some(2));
    // CSV is still written.
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("sweep_param,"));
}

#[test]
fn seed_determinism_byte_identical_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for (path, threads) in [(&out_a, "1"), (&out_b, "8")] {
        let out = Command::new(BIN)
            .env("RAYON_NUM_THREADS", threads)
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "--strategy",
                "both",
                "--seed",
                "99",
                "--sweep",
                "eaves_density_per_m2=0.005,0.02",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
}

#[test]
fn dump_flags_write_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONFIG);
    let dep = dir.path().join("deployment.csv");
    let plan = dir.path().join("plan.csv");
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--drops",
        "2",
        "--dump-deployment",
        dep.to_str().unwrap(),
        "--dump-plan",
        plan.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let dep = fs::read_to_string(dep).unwrap();
    assert!(dep.starts_with("id,role,x,y,z\n"));
    assert!(dep.lines().count() > 1);
    let plan = fs::read_to_string(plan).unwrap();
    assert!(plan.starts_with("ue_id,mode,pattern,subchannel,bandwidth_hz,host_id\n"));
    assert!(plan.lines().count() > 1);
}
