use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ripforge(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ripforge"))
        .args(args)
        .env("RIPFORGE_OUT", out)
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_then_certify() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ripforge(tmp.path(), &["gen", "matrix", "--dist", "rademacher", "--n", "64", "--p", "8", "--seed", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let matrix = tmp.path().join("gen-matrix-5/matrix.ripm");
    assert!(matrix.exists());
    assert_eq!(read_json(&tmp.path().join("gen-matrix-5/config.json"))["master_seed"], 5);

    let m = matrix.to_str().unwrap();
    let o = ripforge(tmp.path(), &["certify", "--matrix", m, "--certifier", "opnorm-exact", "--k", "2", "--theta", "0.9"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["threshold"], 0.9);
    assert!(v["statistic"].as_f64().unwrap() >= 0.0);

    // A declined certificate is still a successful command.
    let o = ripforge(tmp.path(), &["certify", "--matrix", m, "--certifier", "opnorm-exact", "--k", "2", "--theta", "0.001"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["certified"], false);

    // 64 rows is far below what the incoherence certifier needs.
    let o = ripforge(tmp.path(), &["certify", "--matrix", m, "--certifier", "incoherence-paper", "--k", "2", "--theta", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("need n >="));
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = ripforge(dir.path(), &["gen", "graph", "--m", "50", "--plant", "random-dense", "--kappa", "10", "--epsilon", "0.3", "--seed", "9"]);
        assert!(o.status.success());
    }
    for f in ["graph.txt", "graph.meta.json"] {
        let x = std::fs::read(a.path().join("gen-graph-9").join(f)).unwrap();
        let y = std::fs::read(b.path().join("gen-graph-9").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn refuses_to_overwrite_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["gen", "graph", "--m", "20", "--seed", "1"];
    assert!(ripforge(tmp.path(), &args).status.success());
    let o = ripforge(tmp.path(), &args);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(ripforge(tmp.path(), &forced).status.success());
}

#[test]
fn reduce_with_trace_and_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ripforge(tmp.path(), &["gen", "graph", "--m", "400", "--plant", "clique", "--kappa", "40", "--seed", "3"]);
    assert!(o.status.success());
    let graph = tmp.path().join("gen-graph-3/graph.txt");
    let g = graph.to_str().unwrap();
    let o = ripforge(
        tmp.path(),
        &["reduce", "--graph", g, "--kappa", "40", "--dist", "rademacher", "--seed", "4", "--witness", "--trace", "--certifier", "opnorm-exact", "--theta", "0.9"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout_json(&o);
    let n = report["dims"]["n"].as_u64().unwrap();
    assert!(n > 0);
    assert!(report["witness"]["value"].as_f64().unwrap() > 0.0);
    assert!(report["distinguisher"] == 0 || report["distinguisher"] == 1);
    let run = tmp.path().join("reduce-4");
    for f in ["X.ripm", "report.json", "config.json", "trace/A.ripm", "trace/Z.ripm", "trace/U.json", "trace/W.json", "trace/K.json"] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let u: Vec<usize> = serde_json::from_value(read_json(&run.join("trace/U.json"))).unwrap();
    assert_eq!(u.len() as u64, n);
}

#[test]
fn witness_without_sidecar_fails() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(ripforge(tmp.path(), &["gen", "graph", "--m", "100", "--seed", "2"]).status.success());
    let graph = tmp.path().join("gen-graph-2/graph.txt");
    let o = ripforge(
        tmp.path(),
        &["reduce", "--graph", graph.to_str().unwrap(), "--kappa", "20", "--dist", "gaussian", "--seed", "1", "--witness"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sidecar"));
}

#[test]
fn experiment_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"distribution": "gaussian", "n": 400, "p": 8, "k": 2, "theta": 0.9, "trials": 50}"#).unwrap();
    let o = ripforge(
        tmp.path(),
        &["experiment", "rip-probability", "--config", cfg.to_str().unwrap(), "--seed", "11", "--trials", "12", "--csv", "--jobs", "2"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout_json(&o);
    assert_eq!(summary["verdict"], "pass");
    assert_eq!(summary["trials"], 12);

    let run = tmp.path().join("rip-probability-11");
    assert_eq!(read_json(&run.join("config.json"))["params"]["trials"], 12);
    assert_eq!(read_json(&run.join("summary.json")), summary);
    let records = std::fs::read_to_string(run.join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 12);
    let csv = std::fs::read_to_string(run.join("records.csv")).unwrap();
    assert!(csv.starts_with("trial,seed,margin\n"));
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn failing_verdict_sets_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    // Nothing is certified at this theta, so the decline budget is blown.
    let base = [
        "experiment", "certifier", "--seed", "1", "--set", "certifier=opnorm-exact", "--set", "distribution=gaussian",
        "--set", "n=200", "--set", "p=6", "--set", "k=2", "--set", "theta=0.0001", "--trials", "5",
    ];
    let o = ripforge(tmp.path(), &base);
    let summary = stdout_json(&o);
    assert_eq!(summary["verdict"], "fail", "{summary}");
    assert_eq!(o.status.code(), Some(1));

    let mut report = base.to_vec();
    report.extend(["--report-only", "--force"]);
    assert_eq!(ripforge(tmp.path(), &report).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["experiment", "no-such-thing", "--seed", "1"],
        &["experiment", "tail-bound", "--seed", "1", "--set", "distribution=gaussian", "--set", "n=10", "--set", "theta=0.5", "--trials", "0"],
        &["experiment", "tail-bound", "--seed", "1", "--set", "bogus=1"],
        &["gen", "matrix", "--dist", "cauchy", "--n", "3", "--p", "3", "--seed", "1"],
        &["certify", "--matrix", "x.ripm"],
    ];
    for args in cases {
        let o = ripforge(tmp.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
