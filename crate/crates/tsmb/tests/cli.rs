//! End-to-end tests of the command-line interface: flag handling, output
//! layout, exit codes, and bit-identical reproducibility across worker
//! counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tsmb::dataset::{write_csv, TaskKind};
use tsmb::injection::{synth_dataset, SynthSpec};

fn tsmb_bin() -> &'static str {
    env!("CARGO_BIN_EXE_tsmb")
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(tsmb_bin())
        .args(args)
        .output()
        .expect("failed to launch tsmb binary")
}

/// A small clean synthetic dataset written as CSV, plus a config file.
fn setup(dir: &Path) -> PathBuf {
    let clean = synth_dataset(&SynthSpec {
        n_features: 2,
        length: 400,
        true_delays: vec![0, 0],
        noise_sd: 0.1,
        seed: 77,
        task_kind: TaskKind::Regression,
    })
    .unwrap();
    let data_path = dir.join("clean.csv");
    write_csv(&clean, &data_path).unwrap();

    let config = format!(
        r#"
seed = 11
out_dir = "{out}"

[dataset]
path = "{}"
target_column = "target"
task = "regression"

[split]
train = 0.5
validation = 0.25
test = 0.25

[injection]
kind = "stochastic"
candidates = [[8, 5], [6, 3], [4, 1]]
seed = 3

[method]
name = "tsmb"
b = 4
block_fraction = 0.25
sigma = 0.1
alphas = [0.2]

[score]
kind = "gcc"
knn_k = 3

[learner]
kind = "linear"
n_trees = 20
max_depth = 3
learning_rate = 0.1
min_samples_leaf = 5
l2 = 0.001

[search]
delay_min = 0
delay_max = 10
window_min = 1
window_max = 2
budget = 150
max_iterations = 100
"#,
        data_path.display(),
        out = dir.join("out").display()
    );
    let config_path = dir.join("run.toml");
    std::fs::write(&config_path, config).unwrap();
    config_path
}

#[test]
fn inject_then_run_produces_the_frozen_output_layout() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let config = config.to_str().unwrap();

    let out = run_cli(&["--config", config, "inject"]);
    assert!(out.status.success(), "inject failed: {out:?}");
    let injected = dir.path().join("out/injected.csv");
    let sidecar = dir.path().join("out/injected.csv.truth.toml");
    assert!(injected.exists());
    assert!(sidecar.exists());
    let sidecar_text = std::fs::read_to_string(&sidecar).unwrap();
    assert!(sidecar_text.contains("stochastic"));
    assert!(sidecar_text.contains("seed"));

    // Run on the injected data.
    let run_dir = dir.path().join("run_out");
    let out = run_cli(&[
        "--config",
        config,
        "--out",
        run_dir.to_str().unwrap(),
        "run",
    ]);
    assert!(out.status.success(), "run failed: {out:?}");
    for file in [
        "report.json",
        "model.json",
        "delays.csv",
        "config.resolved.toml",
    ] {
        assert!(run_dir.join(file).exists(), "missing {file}");
    }

    // stdout carries exactly one machine-readable summary line.
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1, "stdout was: {stdout}");
    let summary: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(summary["method"], "tsmb");
    assert_eq!(summary["b"], 4);
}

#[test]
fn reports_are_bit_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let config = config.to_str().unwrap();
    let out_dir = dir.path().join("repro");

    let mut snapshots = Vec::new();
    for workers in ["1", "4"] {
        let out = run_cli(&[
            "--config",
            config,
            "--out",
            out_dir.to_str().unwrap(),
            "--workers",
            workers,
            "run",
        ]);
        assert!(out.status.success(), "run failed: {out:?}");
        snapshots.push((
            std::fs::read(out_dir.join("report.json")).unwrap(),
            std::fs::read(out_dir.join("model.json")).unwrap(),
            std::fs::read(out_dir.join("delays.csv")).unwrap(),
            out.stdout,
        ));
    }
    assert_eq!(snapshots[0].0, snapshots[1].0, "report.json differs");
    assert_eq!(snapshots[0].1, snapshots[1].1, "model.json differs");
    assert_eq!(snapshots[0].2, snapshots[1].2, "delays.csv differs");
    assert_eq!(snapshots[0].3, snapshots[1].3, "stdout summary differs");
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let out_dir = dir.path().join("tde");
    let out = run_cli(&[
        "--config",
        config.to_str().unwrap(),
        "--method",
        "tde-point",
        "--score",
        "tdmi",
        "--b",
        "2",
        "--seed",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
        "run",
    ]);
    assert!(out.status.success(), "run failed: {out:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["method"], "tde-point");
    assert_eq!(report["config"]["score"]["kind"], "tdmi");
    assert_eq!(report["config"]["method"]["b"], 2);
    assert_eq!(report["config"]["seed"], 5);
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let config = config.to_str().unwrap();

    // Unknown method name.
    let out = run_cli(&["--config", config, "--method", "magic", "run"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // Unknown config field, named in the message.
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "[dataset]\npath = \"x.csv\"\ntarget_column = \"y\"\ntask = \"regression\"\nbogus_field = 1\n",
    )
    .unwrap();
    let out = run_cli(&["--config", bad.to_str().unwrap(), "run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_field"));

    // real-delay without a ground-truth sidecar.
    let out = run_cli(&["--config", config, "--method", "real-delay", "run"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn data_errors_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("broken.csv");
    std::fs::write(&data, "a,y\n1,abc\n2,3\n").unwrap();
    let config = dir.path().join("cfg.toml");
    std::fs::write(
        &config,
        format!(
            "[dataset]\npath = \"{}\"\ntarget_column = \"y\"\ntask = \"regression\"\n",
            data.display()
        ),
    )
    .unwrap();
    let out = run_cli(&["--config", config.to_str().unwrap(), "run"]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn sweep_b_rejects_duplicates_and_writes_per_b_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = setup(dir.path());
    let config = config.to_str().unwrap();

    let out = run_cli(&["--config", config, "sweep-b", "--b-list", "2,2"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    let sweep_dir = dir.path().join("sweep");
    let out = run_cli(&[
        "--config",
        config,
        "--out",
        sweep_dir.to_str().unwrap(),
        "sweep-b",
        "--b-list",
        "1,3",
    ]);
    assert!(out.status.success(), "sweep failed: {out:?}");
    assert!(sweep_dir.join("b1/report.json").exists());
    assert!(sweep_dir.join("b3/report.json").exists());
    assert!(sweep_dir.join("sweep_summary.txt").exists());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);
}

#[test]
fn real_delay_runs_when_the_sidecar_exists() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = setup(dir.path());
    let config = config_path.to_str().unwrap();
    let out = run_cli(&["--config", config, "inject"]);
    assert!(out.status.success());

    // Re-point the config at the injected dataset.
    let injected = dir.path().join("out/injected.csv");
    let text = std::fs::read_to_string(&config_path).unwrap().replace(
        "clean.csv",
        injected.file_name().unwrap().to_str().unwrap(),
    );
    let text = text.replace(
        &format!("path = \"{}\"", dir.path().join("injected.csv").display()),
        &format!("path = \"{}\"", injected.display()),
    );
    let injected_cfg = dir.path().join("run_injected.toml");
    std::fs::write(&injected_cfg, text).unwrap();

    let out_dir = dir.path().join("real");
    let out = run_cli(&[
        "--config",
        injected_cfg.to_str().unwrap(),
        "--method",
        "real-delay",
        "--out",
        out_dir.to_str().unwrap(),
        "run",
    ]);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    // Representative truth: rounded mean of the candidate vectors.
    assert_eq!(report["member_delays"][0]["delays"][0], 6);
    assert_eq!(report["member_delays"][0]["delays"][1], 3);
}
