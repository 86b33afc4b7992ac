use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bvqo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvqo"))
        .args(args)
        .current_dir(root())
        .env_remove("BVQO_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn golden(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).expect("golden file")
}

#[test]
fn explain_matches_golden_files() {
    for (workload, file) in [("workloads/cyclic4.json", "cyclic4_explain.txt"), ("workloads/movie_keyword.json", "movie_keyword_explain.txt")] {
        let out = bvqo(&["explain", "--workload", workload]);
        assert!(out.status.success());
        assert_eq!(stdout(&out), golden(file), "{workload}");
    }
}

#[test]
fn aware_plan_is_no_costlier_than_baseline() {
    for workload in ["workloads/movie_keyword.json", "workloads/star.json", "workloads/snowflake3.json"] {
        let out = bvqo(&["explain", "--workload", workload, "--seed", "5", "--format", "json"]);
        assert!(out.status.success());
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let cost = |k: &str| v[k]["cout"].as_f64().unwrap();
        assert!(cost("aware") <= cost("baseline"), "{workload}");
        assert_eq!(v["provider"], "exact");
    }
}

#[test]
fn single_relation_explains_to_one_scan() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.json");
    fs::write(
        &path,
        r#"{"relations":[{"name":"R","cardinality":42,"columns":["x"],"key_columns":[]}],"edges":[]}"#,
    )
    .unwrap();
    let out = bvqo(&["explain", "--workload", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.matches("SCAN R").count(), 2);
    assert!(!text.contains("HJ#"));
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"relations\": [").unwrap();
    let bad = bad.to_str().unwrap();
    let missing = dir.path().join("missing.json");
    let unwritable = dir.path().join("no/such/dir/out.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["explain", "--workload", bad],
        vec!["explain", "--workload", missing.to_str().unwrap()],
        vec!["explain", "--workload", "workloads/movie_keyword.json", "--threshold", "1.5"],
        vec!["explain", "--workload", "workloads/movie_keyword.json", "--filter-mode", "lossy:1.5"],
        vec!["verify", "--workload", "workloads/snowflake3.json", "--cap", "3"],
        vec!["verify", "--cap", "5"],
        vec!["bench", "--grid", "0.5", "--out", unwritable.to_str().unwrap()],
        vec!["bench", "--grid", "nope"],
        vec!["compare", "--workload", bad],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = bvqo(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn cap_error_names_the_cap() {
    let out = bvqo(&["verify", "--workload", "workloads/snowflake3.json", "--cap", "3"]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("cap of 3"), "{err}");
}

#[test]
fn verify_suite_holds_on_small_shapes() {
    let out = bvqo(&["verify", "--seeds", "3", "--max-relations", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().last().unwrap().contains("counterexamples=0"), "{text}");
}

#[test]
fn lossy_verification_never_fails_the_run() {
    let out = bvqo(&["verify", "--seeds", "3", "--max-relations", "5", "--filter-mode", "lossy:0.4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("filter_mode=lossy:0.4"));
}

#[test]
fn verify_json_is_one_report_per_run() {
    let out = bvqo(&["verify", "--seeds", "2", "--min-relations", "3", "--max-relations", "4", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let runs = v.as_array().unwrap();
    assert!(!runs.is_empty() && runs.len().is_multiple_of(2));
    assert!(runs.iter().all(|r| r["report"]["verdict"] == "TheoremHolds"));
}

#[test]
fn single_point_grid_gives_one_row() {
    let out = bvqo(&["bench", "--grid", "0.5", "--fact-size", "1000", "--dim-size", "100"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("e,cost_with,cost_without,wall_with_ns,wall_without_ns\n"));
    assert!(text.lines().nth(1).unwrap().starts_with("0.50,"));
}

#[test]
fn bench_out_writes_csv_and_prints_break_even() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    let out = bvqo(&["bench", "--fact-size", "10000", "--dim-size", "200", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("break-even elimination: 0."));
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 21);
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_bvqo"));
        cmd.args(["explain", "--workload", "workloads/snowflake3.json", "--format", "json"])
            .current_dir(root())
            .env_remove("BVQO_SEED");
        if let Some(seed) = env {
            cmd.env("BVQO_SEED", seed);
        }
        cmd.output().unwrap().stdout
    };
    let flagged = bvqo(&["explain", "--workload", "workloads/snowflake3.json", "--format", "json", "--seed", "9"]);
    assert_eq!(run(Some("9")), flagged.stdout);
    let v: serde_json::Value = serde_json::from_slice(&run(None)).unwrap();
    assert_eq!(v["provider"], "statistical");
}

#[test]
fn compare_identical_plans_have_ratio_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.json");
    fs::write(
        &path,
        r#"{"relations":[
            {"name":"F","cardinality":200,"columns":["f_d"],"key_columns":[]},
            {"name":"D","cardinality":20,"columns":["d_id"],"key_columns":["d_id"]}],
          "edges":[{"left":"F","right":"D","left_cols":["f_d"],"right_cols":["d_id"],
                    "pkfk":"LeftToRight","sel_lr":0.5,"sel_rl":1.0}]}"#,
    )
    .unwrap();
    let out = bvqo(&["compare", "--workload", path.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["aware_total"], v["baseline_total"]);
    assert_eq!(v["join_tuple_ratio"], 1.0);
}

#[test]
fn compare_reads_per_query_data_directories() {
    let dir = tempfile::tempdir().unwrap();
    let graph = bvqo_core::JoinGraph::new(
        bvqo_core::load_catalog_file(root().join("workloads/compare/q02.json")).unwrap(),
    )
    .unwrap();
    bvqo_core::executor::generate_data(&graph, 42).unwrap().write_dir(dir.path().join("q02")).unwrap();
    let from_dir = bvqo(&[
        "compare",
        "--workload",
        "workloads/compare/q02.json",
        "--data",
        dir.path().to_str().unwrap(),
    ]);
    assert!(from_dir.status.success(), "{}", String::from_utf8_lossy(&from_dir.stderr));
    let generated = bvqo(&["compare", "--workload", "workloads/compare/q02.json"]);
    assert_eq!(from_dir.stdout, generated.stdout);
}
