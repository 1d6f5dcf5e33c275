use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn validity(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_validity")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn emit_battery(cwd: &Path, policies: &str) {
    let out = validity(
        &["synthetic", "--seed", "5", "--iterations", "100", "--emit-battery", "--policies", policies, "--out", "syn"],
        cwd,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synthetic_is_clean_and_byte_identical() {
    let dir = TempDir::new().unwrap();
    for out in ["a", "b"] {
        let o = validity(&["synthetic", "--seed", "9", "--iterations", "150", "--out", out], dir.path());
        assert_eq!(code(&o), 0);
        assert!(String::from_utf8_lossy(&o.stdout).contains("8/8 policies"));
    }
    let a = fs::read(dir.path().join("a/synthetic_matrix.csv")).unwrap();
    let b = fs::read(dir.path().join("b/synthetic_matrix.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        fs::read(dir.path().join("a/synthetic.json")).unwrap(),
        fs::read(dir.path().join("b/synthetic.json")).unwrap()
    );
}

#[test]
fn sequential_and_parallel_outputs_match() {
    let dir = TempDir::new().unwrap();
    validity(&["synthetic", "--seed", "2", "--iterations", "120", "--out", "par"], dir.path());
    validity(&["synthetic", "--seed", "2", "--iterations", "120", "--sequential", "--out", "seq"], dir.path());
    assert_eq!(
        fs::read(dir.path().join("par/synthetic_matrix.csv")).unwrap(),
        fs::read(dir.path().join("seq/synthetic_matrix.csv")).unwrap()
    );
}

#[test]
fn screen_gate_exit_codes() {
    let dir = TempDir::new().unwrap();
    emit_battery(dir.path(), "AlwaysKeepBet,PerfectMonitor,NoisyMonitor");
    let out =
        validity(&["screen", "--data", "syn/battery", "--norms", "syn/battery_norms.json", "--out", "s"], dir.path());
    assert_eq!(code(&out), 2);
    let report = fs::read_to_string(dir.path().join("s/screen.md")).unwrap();
    assert!(report.contains("AlwaysKeepBet | Tier1-Invalid"));
    assert!(report.contains("L = 1.000 >= 0.950"));

    let clean = TempDir::new().unwrap();
    emit_battery(clean.path(), "PerfectMonitor,NoisyMonitor,Random80Keep");
    let out =
        validity(&["screen", "--data", "syn/battery", "--norms", "syn/battery_norms.json", "--out", "s"], clean.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn errors_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&validity(&["screen", "--data", "missing"], dir.path())), 1);
    assert_eq!(code(&validity(&["screen", "--no-such-flag"], dir.path())), 1);
    assert_eq!(code(&validity(&["synthetic", "--l-min", "2"], dir.path())), 1);
    fs::write(dir.path().join("run.json"), r#"{"seed": 1, "iterations": 5}"#).unwrap();
    let out = validity(&["synthetic", "--config", "run.json"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
    assert_eq!(code(&validity(&["--help"], dir.path())), 0);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"seed": 4, "synthetic_iterations": 100, "output": {"path": "from_config", "format": "csv"}}"#,
    )
    .unwrap();
    let out = validity(&["synthetic", "--config", "run.json"], dir.path());
    assert_eq!(code(&out), 0);
    let entries: Vec<String> = fs::read_dir(dir.path().join("from_config"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(entries, ["synthetic_matrix.csv"]);
    let csv = fs::read_to_string(dir.path().join("from_config/synthetic_matrix.csv")).unwrap();
    assert!(csv.contains("# seed=4"));

    validity(&["synthetic", "--config", "run.json", "--seed", "8", "--out", "flag"], dir.path());
    let csv = fs::read_to_string(dir.path().join("flag/synthetic_matrix.csv")).unwrap();
    assert!(csv.contains("# seed=8"));
}

#[test]
fn psych_plot_and_sweep_on_full_battery() {
    let dir = TempDir::new().unwrap();
    emit_battery(
        dir.path(),
        "AlwaysKeepBet,AlwaysWithdrawNoBet,Random5050,Random80Keep,PerfectMonitor,NoisyMonitor,InvertedMonitor,R1Like",
    );
    let data = ["--data", "syn/battery", "--norms", "syn/battery_norms.json"];
    let run = |extra: &[&str]| {
        let args: Vec<&str> = extra.iter().chain(data.iter()).copied().collect();
        validity(&args, dir.path())
    };
    let psych = run(&["psych", "--iterations", "300", "--out", "p"]);
    assert_eq!(code(&psych), 2, "{}", String::from_utf8_lossy(&psych.stderr));
    assert!(String::from_utf8_lossy(&psych.stdout).contains("PCA on 8 models"));

    for figure in ["tiered", "sensitivity", "contingency"] {
        let a = format!("figs/{figure}-a.svg");
        let b = format!("figs/{figure}-b.svg");
        for path in [&a, &b] {
            let out = validity(&["plot", "--report", "p/psych.json", "--figure", figure, "--out", path], dir.path());
            assert_eq!(code(&out), 0);
        }
        assert_eq!(fs::read(dir.path().join(&a)).unwrap(), fs::read(dir.path().join(&b)).unwrap());
    }
    let tiered = fs::read_to_string(dir.path().join("figs/tiered-a.svg")).unwrap();
    assert!(tiered.contains("stroke-dasharray"));
    let missing = validity(&["plot", "--report", "syn/synthetic.json", "--figure", "tiered"], dir.path());
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("profiles"));
    let synthetic =
        validity(&["plot", "--report", "syn/synthetic.json", "--figure", "synthetic", "--out", "figs"], dir.path());
    assert_eq!(code(&synthetic), 0);
    assert!(dir.path().join("figs/synthetic.svg").exists());

    let sweep = run(&["sweep", "--l-grid", "0.90:0.99:0.01", "--f-grid", "0.40:0.60:0.05", "--out", "sw"]);
    assert_eq!(code(&sweep), 2);
    let csv = fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 10 * 5);
    assert!(run(&["sweep", "--l-grid", "0.9:0.8:0.1"]).status.code() == Some(1));
}
