//! The `netslice` binary: subcommand output and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use netslice::agents::Algo;
use netslice::harness::ExperimentConfig;

fn netslice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netslice")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(path: &Path, algo: Algo, seed: u64) {
    let mut cfg = ExperimentConfig::standard(algo, seed);
    cfg.iterations = 40;
    cfg.eval_window = 10;
    cfg.env.slots_per_step = 100;
    cfg.env.warmup_steps = 10;
    cfg.agent.buffer = 20;
    cfg.agent.batch_size = 8;
    fs::write(path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
}

#[test]
fn enumerate_actions_lists_the_table() {
    let o = netslice(&["enumerate-actions", "--bandwidth", "10000000", "--resolution", "1000000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "36 actions");
    assert_eq!(lines.len(), 37);
    assert_eq!(lines[1].trim(), "0  [1, 1, 8]");
    assert!(lines.iter().any(|l| l.trim() == "23  [4, 3, 3]"));
}

#[test]
fn dirac_lab_emits_csv() {
    let o = netslice(&["dirac-lab", "--h", "0.01", "--lambda", "10", "--steps", "50", "--xi-schedule", "0:1,20:3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("step,"), "{header}");
    assert!(header.contains("theta") && header.contains("psi") && header.contains("xi"));
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn train_compare_and_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut run_dirs = Vec::new();
    for algo in [Algo::Hard, Algo::Dqn] {
        let cfg = dir.path().join(format!("{}.json", algo.name()));
        write_config(&cfg, algo, 3);
        let out = dir.path().join(algo.name());
        let o = netslice(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(summary["iterations"], 40);
        run_dirs.push(out);
    }
    let runs = format!("{},{}", run_dirs[0].display(), run_dirs[1].display());
    let report = dir.path().join("report");
    let o = netslice(&["compare", "--runs", &runs, "--out", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);
    assert!(report.join("compare.csv").is_file() && report.join("compare.txt").is_file());

    let ckpt = run_dirs[1].join("checkpoint.bin");
    let cfg = dir.path().join("dqn.json");
    let o = netslice(&["eval", "--checkpoint", ckpt.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("mean_utility"));
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"iterations\": 3}").unwrap();
    let o = netslice(&["train", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let mut cfg = ExperimentConfig::standard(Algo::Hard, 1);
    cfg.eval_window = 0;
    let invalid = dir.path().join("invalid.json");
    fs::write(&invalid, serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(netslice(&["train", "--config", invalid.to_str().unwrap()]).status.code(), Some(2));

    let missing = dir.path().join("nope.json");
    assert_eq!(netslice(&["train", "--config", missing.to_str().unwrap()]).status.code(), Some(4));

    let o = netslice(&["enumerate-actions", "--bandwidth", "10000000", "--resolution", "3000000"]);
    assert_eq!(o.status.code(), Some(2));
    let o = netslice(&["dirac-lab", "--h", "0.01", "--lambda", "10", "--steps", "5", "--xi-schedule", "0-1"]);
    assert_eq!(o.status.code(), Some(2));

    let good = dir.path().join("good.json");
    write_config(&good, Algo::Dqn, 1);
    let garbage = dir.path().join("garbage.bin");
    fs::write(&garbage, b"not a checkpoint").unwrap();
    let o = netslice(&["eval", "--checkpoint", garbage.to_str().unwrap(), "--config", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}
