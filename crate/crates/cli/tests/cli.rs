use std::fs;
use std::path::Path;

use assert_cmd::Command;

fn sartre() -> Command {
    let mut cmd = Command::cargo_bin("sartre").unwrap();
    cmd.env_remove("SARTRE_OUTPUT_DIR");
    cmd
}

fn eval_json(truth: &Path, est: &Path) -> serde_json::Value {
    let out = sartre().arg("eval").arg(truth).arg(est).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn eval_identical_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.dag");
    fs::write(&p, "d=4\n1,2\n1,3\n3,4\n").unwrap();
    let m = eval_json(&p, &p);
    assert_eq!(m["shd"], 0);
    assert_eq!(m["sid"], 0);
    assert_eq!(m["f1"], 1.0);
}

#[test]
fn eval_missing_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("t.dag");
    let est = dir.path().join("e.dag");
    fs::write(&truth, "d=2\n1,2\n").unwrap();
    fs::write(&est, "d=2\n").unwrap();
    let m = eval_json(&truth, &est);
    assert_eq!(m["shd"], 1);
    assert_eq!(m["sid"], 1);
    assert_eq!(m["recall"], 0.0);
}

#[test]
fn eval_malformed_line_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("t.dag");
    let bad = dir.path().join("e.dag");
    fs::write(&good, "d=3\n1,2\n").unwrap();
    fs::write(&bad, "d=3\n1,2\n2;3\n").unwrap();
    let out = sartre().arg("eval").arg(&good).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn eval_dimension_mismatch_fails() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.dag");
    let b = dir.path().join("b.dag");
    fs::write(&a, "d=3\n").unwrap();
    fs::write(&b, "d=4\n").unwrap();
    let out = sartre().arg("eval").arg(&a).arg(&b).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn gen_single_variable() {
    let dir = tempfile::tempdir().unwrap();
    sartre()
        .args(["gen", "-d", "1", "-n", "10", "--avg-edges", "0", "--out"])
        .arg(dir.path())
        .assert()
        .success();
    let csv = fs::read_to_string(dir.path().join("data.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x1");
    assert_eq!(lines.len(), 11);
    assert_eq!(
        fs::read_to_string(dir.path().join("truth.dag")).unwrap(),
        "d=1\n"
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("truth.order")).unwrap(),
        "1\n"
    );
}

#[test]
fn gen_is_deterministic_and_round_trips() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        sartre()
            .args([
                "gen",
                "--graph",
                "er",
                "-d",
                "10",
                "--avg-edges",
                "10",
                "-n",
                "2000",
                "--seed",
                "3",
                "--out",
            ])
            .arg(dir.path())
            .assert()
            .success();
    }
    for f in ["data.csv", "truth.dag", "truth.order"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let data = sartre::Dataset::read_csv(a.path().join("data.csv")).unwrap();
    assert_eq!((data.n(), data.d()), (2000, 10));
    let dag = sartre::graph::io::read_dag(a.path().join("truth.dag")).unwrap();
    let order = sartre::graph::io::read_order(a.path().join("truth.order")).unwrap();
    assert!(order.is_consistent_with(&dag));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    sartre()
        .env("SARTRE_OUTPUT_DIR", &target)
        .args(["gen", "-d", "3", "-n", "20", "--avg-edges", "2"])
        .assert()
        .success();
    assert!(target.join("data.csv").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, "{\n  \"d\": 5,\n  \"bogus\": 1\n}\n").unwrap();
    let out = sartre()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("bogus") && msg.contains("line 3"), "{msg}");

    let out = sartre()
        .args([
            "run",
            "-d",
            "80",
            "--avg-edges",
            "80",
            "--ordering",
            "score",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_then_prune_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    sartre()
        .args([
            "run",
            "-d",
            "4",
            "--avg-edges",
            "3",
            "-n",
            "200",
            "--trials",
            "2",
            "--ordering",
            "ground-truth",
        ])
        .arg("--out")
        .arg(&run)
        .assert()
        .success();
    let loaded = sartre::runner::load_run(&run).unwrap();
    assert_eq!(loaded.aggregate.trials, 2);

    let gen = dir.path().join("gen");
    sartre()
        .args(["gen", "-d", "4", "--avg-edges", "3", "-n", "200", "--out"])
        .arg(&gen)
        .assert()
        .success();
    let est = dir.path().join("est.dag");
    let model = dir.path().join("model.json");
    sartre()
        .args(["prune", "--lambda", "1e6", "--data"])
        .arg(gen.join("data.csv"))
        .arg("--order")
        .arg(gen.join("truth.order"))
        .arg("--out")
        .arg(&est)
        .arg("--model")
        .arg(&model)
        .assert()
        .success();
    assert_eq!(fs::read_to_string(&est).unwrap(), "d=4\n");
    let dump: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(dump["edges"].as_array().unwrap().len(), 0);
}

#[test]
fn order_writes_a_permutation() {
    let dir = tempfile::tempdir().unwrap();
    sartre()
        .args(["gen", "-d", "3", "-n", "300", "--avg-edges", "2", "--out"])
        .arg(dir.path())
        .assert()
        .success();
    let out = sartre()
        .args(["order", "--data"])
        .arg(dir.path().join("data.csv"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let order = sartre::graph::io::parse_order(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(order.len(), 3);
}

#[test]
fn ingest_bootstrap() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("in.csv");
    let mut text = String::from("a,b\n");
    for i in 0..500 {
        text.push_str(&format!("{i},{}\n", 2 * i));
    }
    fs::write(&src, text).unwrap();
    let run = |seed: &str| {
        let out = sartre()
            .args(["ingest", "--bootstrap", "2000", "--seed", seed])
            .arg(&src)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let first = run("9");
    assert_eq!(first, run("9"));
    let data = sartre::Dataset::from_csv_reader(first.as_slice()).unwrap();
    assert_eq!(data.n(), 2000);
    for m in 0..data.n() {
        let a = data.values()[(m, 0)];
        assert!(a.fract() == 0.0 && (0.0..500.0).contains(&a));
        assert_eq!(data.values()[(m, 1)], 2.0 * a);
    }

    fs::write(&src, "a,b\n1,2\n3,oops\n").unwrap();
    let out = sartre().arg("ingest").arg(&src).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("oops"));
}

#[test]
fn sweep_lambda_writes_long_csv() {
    let dir = tempfile::tempdir().unwrap();
    sartre()
        .args([
            "sweep-lambda",
            "-d",
            "4",
            "--avg-edges",
            "3",
            "-n",
            "200",
            "--trials",
            "2",
        ])
        .args([
            "--ordering",
            "ground-truth",
            "--lambdas",
            "0.1,0.3",
            "--out",
        ])
        .arg(dir.path())
        .assert()
        .success();
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(text.starts_with("lambda,trial,dataset_hash,metric,value\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 6);
}
