use std::path::Path;
use std::process::Command;

use hbsg_cli::config::OracleMode;
use hbsg_cli::report::{load_dir, Report};
use hbsg_cli::{run_experiment, ExperimentConfig, Overrides};
use serde_json::{json, Value};

fn config(v: Value) -> ExperimentConfig {
    serde_json::from_value(v).unwrap()
}

fn ap_instance(id: &str, n: usize) -> Value {
    json!({
        "id": id,
        "ambient": { "kind": "ap", "start": 0, "step": 1, "n": n },
        "strings": { "kind": "random-deletion", "fraction": "0.05", "seed": 3 },
        "k": 4,
        "params": { "c": "2" }
    })
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn single_instance_gives_one_report_and_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&config(json!({ "instances": [ap_instance("one", 8)] })), dir.path()).unwrap();
    assert_eq!(out.reports.len(), 1);
    assert_eq!(std::fs::read_dir(dir.path().join("reports")).unwrap().count(), 1);
    let rows = csv_rows(&out.summary);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "one");
    let status = &rows[0][rows[0].len() - 2];
    assert!(["proved-at-scale", "best-effort", "diagnostic-halt"].contains(&status));
    assert!(out.reports[0].oracle.is_none());
}

#[test]
fn delta_sweep_differs_only_where_delta_enters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(json!({
        "sweeps": [{ "base": ap_instance("sweep", 16), "delta": ["0.02", "0.05", "0.1"] }]
    }));
    let out = run_experiment(&cfg, dir.path()).unwrap();
    let rows = csv_rows(&out.summary);
    assert_eq!(rows.len(), 3);
    let deltas: Vec<&str> = rows.iter().map(|r| r.get(3).unwrap()).collect();
    assert_eq!(deltas, ["1/50", "1/20", "1/10"]);

    let ledgers: Vec<Value> = out.reports.iter().map(|r| serde_json::to_value(&r.result.ledger).unwrap()).collect();
    for other in &ledgers[1..] {
        let (a, b) = (ledgers[0].as_array().unwrap(), other.as_array().unwrap());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            let strip = |e: &Value| {
                let mut e = e.clone();
                e.as_object_mut().unwrap().remove("delta");
                e
            };
            let (x, y) = (strip(x), strip(y));
            if x == y {
                continue;
            }
            let (ex, ey) = (&x["event"], &y["event"]);
            match ex["kind"].as_str().unwrap() {
                "check" => {
                    let (cx, cy) = (&ex["certificate"], &ey["certificate"]);
                    assert_eq!((&cx["op"], &cx["lhs"]), (&cy["op"], &cy["lhs"]));
                    assert_ne!(cx["rhs_expr"], cy["rhs_expr"], "{cx} vs {cy}");
                }
                "reassign" => {
                    let mut ex = ex.clone();
                    let mut ey = ey.clone();
                    ex.as_object_mut().unwrap().remove("delta");
                    ey.as_object_mut().unwrap().remove("delta");
                    assert_eq!(ex, ey);
                }
                other => panic!("unexpected difference in a {other} event: {x} vs {y}"),
            }
        }
    }
}

#[test]
fn tiny_oracle_runs_report_the_subset_gap() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(json!({ "instances": [ap_instance("tiny", 8)] }));
    cfg.apply(&Overrides { oracle: Some(OracleMode::On), ell: Some(vec![2, 3, 4]), ..Overrides::default() });
    let out = run_experiment(&cfg, dir.path()).unwrap();
    let r = &out.reports[0];
    let oracle = r.oracle.as_ref().unwrap();
    assert!(oracle.audit.as_ref().unwrap().pass);
    assert!(oracle.pass());
    if let Some(a_prime) = &r.result.a_prime {
        assert_eq!(oracle.best_subset.len(), 3);
        for g in &oracle.best_subset {
            assert_eq!(g.min_size, a_prime.len());
            assert!(g.optimum <= g.pipeline_size);
            assert_eq!(g.gap, g.pipeline_size - g.optimum);
        }
        assert_eq!(oracle.growth.len(), 3);
    }
    let header: Vec<String> =
        csv::Reader::from_path(&out.summary).unwrap().headers().unwrap().iter().map(String::from).collect();
    assert!(header.contains(&"ell3_bound".to_string()));
}

#[test]
fn reports_round_trip_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(json!({ "oracle": "on", "seed": 11, "instances": [
        ap_instance("a", 8),
        {
            "id": "noisy",
            "ambient": { "kind": "ap-plus-noise", "n_ap": 6, "n_noise": 3, "window": [10, 60] },
            "strings": { "kind": "full-product" },
            "k": 4,
            "params": { "c": "2.5" }
        }
    ] }));
    let first = run_experiment(&cfg, dir.path()).unwrap();
    let loaded = load_dir(&dir.path().join("reports")).unwrap();
    let mut expected = first.reports.clone();
    expected.sort_by_key(Report::file_name);
    assert_eq!(loaded, expected);

    let again = tempfile::tempdir().unwrap();
    let second = run_experiment(&cfg, again.path()).unwrap();
    for (a, b) in first.reports.iter().zip(&second.reports) {
        assert_eq!(a.deterministic_json(), b.deterministic_json());
    }
    // The resolved seed is echoed, so the report alone regenerates the input.
    let noisy = first.reports.iter().find(|r| r.instance.id == "noisy").unwrap();
    let echo = serde_json::to_value(&noisy.instance).unwrap();
    assert_eq!(echo["ambient"]["seed"], 11);
    for r in &loaded {
        let v = hbsg_cli::verify_report(r).unwrap();
        assert!(v.pass(), "{v:?}");
    }
}

#[test]
fn overrides_take_precedence() {
    let mut cfg = config(json!({ "seed": 1, "ell": [2], "instances": [ap_instance("x", 8)] }));
    cfg.apply(&Overrides { seed: Some(5), max_iters: Some(3), ell: Some(vec![2, 4]), oracle: None });
    let specs = cfg.expand().unwrap();
    assert_eq!(specs[0].params.ell_list, [2, 4]);
    assert_eq!(specs[0].params.max_iterations, 3);
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.oracle, OracleMode::Off);
    let dup = config(json!({ "instances": [ap_instance("x", 8), ap_instance("x", 9)] }));
    assert!(dup.expand().is_err());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, v: Value| {
        let p = dir.path().join(name);
        std::fs::write(&p, v.to_string()).unwrap();
        p
    };
    let exe = env!("CARGO_BIN_EXE_hbsg");
    let run = |cfg: &Path, out: &str, extra: &[&str]| {
        Command::new(exe)
            .args(["run", "--config"])
            .arg(cfg)
            .arg("--out-dir")
            .arg(dir.path().join(out))
            .args(extra)
            .output()
            .unwrap()
            .status
            .code()
    };

    // |Sigma| = 29 is not below 8^1.5, so the hypotheses fail.
    let halting = json!({ "instances": [{
        "id": "halt",
        "ambient": { "kind": "ap", "start": 0, "step": 1, "n": 8 },
        "strings": { "kind": "full-product" },
        "k": 4
    }] });
    assert_eq!(run(&write("halt.json", halting), "h", &[]), Some(20));

    let ok = write("ok.json", json!({ "instances": [ap_instance("ok", 8)] }));
    let code = run(&ok, "o", &["--oracle", "on", "--ell", "2,4", "--max-iters", "8"]);
    let report = Report::load(&dir.path().join("o/reports/ok.json")).unwrap();
    let expected = match report.result.status {
        hbsg::pipeline::Status::ProvedAtScale => 0,
        hbsg::pipeline::Status::BestEffort => 10,
        hbsg::pipeline::Status::DiagnosticHalt => 20,
    };
    assert_eq!(code, Some(expected));
    assert!(report.oracle.is_some());
    assert_eq!(report.instance.params.max_iterations, 8);

    let verify = Command::new(exe).arg("verify").arg(dir.path().join("o/reports")).output().unwrap().status;
    assert_eq!(verify.code(), Some(0));

    let bad = write("bad.json", json!({ "instances": "nope" }));
    assert_eq!(run(&bad, "b", &[]), Some(1));
    assert_eq!(run(&dir.path().join("missing.json"), "m", &[]), Some(1));
}
