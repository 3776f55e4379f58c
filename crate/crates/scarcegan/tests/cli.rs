use scarcegan::cli::main_with_args;
use scarcegan::report::ExperimentReport;

fn run(args: &[&str]) -> i32 {
    let mut v = vec!["scarcegan"];
    v.extend_from_slice(args);
    main_with_args(v)
}

fn p(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["synth", "--n", "3", "--out", "x.csv", "--bogus"]), 2);
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(run(&[]), 2);
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(p(&dir, "spec.txt"), "label_noise = 0.3\n").unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = p(&dir, name);
        assert_eq!(
            run(&["synth", "--spec", &p(&dir, "spec.txt"), "--n", "500", "--seed", "7", "--out", &out]),
            0
        );
    }
    let a = std::fs::read_to_string(p(&dir, "a.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(p(&dir, "b.csv")).unwrap());
    let mut lines = a.lines();
    assert_eq!(lines.next().unwrap(), "x0,x1,x2,x3,x4,x5,x6,x7,truth,observed");
    assert_eq!(lines.count(), 500);
}

#[test]
fn featurize_writes_ten_columns_per_counter() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("sample_id,counter_name,day_index,value\n");
    for (s, scale) in [("alice", 1.0), ("bob", 2.5)] {
        for counter in ["logins", "deposits"] {
            for d in 0..30 {
                let v = scale * (10.0 + 0.3 * d as f64 + (d as f64 * 0.9).sin());
                csv += &format!("{s},{counter},{d},{v}\n");
            }
        }
    }
    std::fs::write(p(&dir, "series.csv"), csv).unwrap();
    assert_eq!(run(&["featurize", "--in", &p(&dir, "series.csv"), "--out", &p(&dir, "f.csv")]), 0);
    let out = std::fs::read_to_string(p(&dir, "f.csv")).unwrap();
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 3);
    let header: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(header.len(), 1 + 10 * 2);
    assert_eq!(header[0], "sample_id");
    assert!(header[1].starts_with("deposits"));
    assert!(rows[1].starts_with("alice,"));
}

#[test]
fn featurize_rejects_a_missing_counter() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("sample_id,counter_name,day_index,value\n");
    for d in 0..20 {
        csv += &format!("a,x,{d},{d}\nb,y,{d},{d}\n");
    }
    std::fs::write(p(&dir, "series.csv"), csv).unwrap();
    assert_eq!(run(&["featurize", "--in", &p(&dir, "series.csv"), "--out", &p(&dir, "f.csv")]), 1);
}

#[test]
fn train_eval_experiment_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(&dir, "run.toml");
    std::fs::write(&cfg, "task = \"synthetic\"\nruns = 2\nseed = 1\n[train]\nsteps = 30\ndisc_base_widths = [16, 8]\n").unwrap();
    let ck = p(&dir, "model.sgan");
    assert_eq!(run(&["train", "--config", &cfg, "--out", &ck, "--history", &p(&dir, "h.csv")]), 0);
    let hist = std::fs::read_to_string(p(&dir, "h.csv")).unwrap();
    assert!(hist.starts_with("step,phase,term,value\n0,supervised,sup_positive,"));
    assert_eq!(hist.lines().count(), 1 + 30 * 10);

    assert_eq!(run(&["eval", "--config", &cfg, "--checkpoint", &ck, "--out", &p(&dir, "m.json")]), 0);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p(&dir, "m.json")).unwrap()).unwrap();
    assert!(m["f1"].is_number());

    let rep = p(&dir, "report.json");
    assert_eq!(run(&["experiment", "--config", &cfg, "--out", &rep]), 0);
    let r = ExperimentReport::from_json(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(r.runs.len(), 2);
    assert_eq!(r.schema_version, 1);
    assert_eq!(run(&["report", "--in", &rep, "--out", &p(&dir, "summary.txt")]), 0);
    assert!(std::fs::read_to_string(p(&dir, "summary.txt")).unwrap().contains("mean"));
}

#[test]
fn kdd_experiment_without_data_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&[
        "experiment",
        "--task",
        "kdd-r2l",
        "--data-dir",
        &p(&dir, "missing"),
        "--runs",
        "5",
        "--out",
        &p(&dir, "r.json"),
    ]);
    assert_eq!(code, 1);
}
