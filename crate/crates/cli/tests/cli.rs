mod common;

use std::io::{BufRead, BufReader};
use std::process::{Command, Stdio};

use common::*;

#[test]
fn index_prints_stats() {
    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("i");
    let o = gqeprf(["index", "--docs", fixture("docs.tsv").to_str().unwrap(), "-o", idx.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("N=40"), "{out}");
    assert!(out.contains("avgdl="));
    assert!(out.contains("vocabulary="));
    assert!(idx.exists());
}

#[test]
fn missing_input_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("i");
    let o = gqeprf(["index", "--docs", "/no/such/docs.tsv", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/docs.tsv"), "{}", stderr(&o));

    let o = gqeprf(["eval", "--run", "/no/such/run", "--qrels", fixture("qrels.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/run"));
}

#[test]
fn malformed_inputs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let bad_run = dir.path().join("bad.run");
    std::fs::write(&bad_run, "q1 Q0 d01 1\n").unwrap();
    let o = gqeprf(["eval", "--run", bad_run.to_str().unwrap(), "--qrels", fixture("qrels.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.run:1"), "{}", stderr(&o));

    let bad_qrels = dir.path().join("bad.qrels");
    std::fs::write(&bad_qrels, "q1 0 d01 high\n").unwrap();
    let good_run = dir.path().join("good.run");
    std::fs::write(&good_run, "q1 Q0 d01 1 2.5 t\n").unwrap();
    let o = gqeprf(["eval", "--run", good_run.to_str().unwrap(), "--qrels", bad_qrels.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn perfect_run_has_map_one() {
    let dir = tempfile::tempdir().unwrap();
    let qrels = dir.path().join("q");
    std::fs::write(&qrels, "a 0 x 2\na 0 y 1\nb 0 z 1\n").unwrap();
    let run = dir.path().join("r");
    std::fs::write(&run, "a Q0 x 1 3 t\na Q0 y 2 2 t\nb Q0 z 1 1 t\n").unwrap();
    let json = dir.path().join("report.json");
    let o = gqeprf([
        "eval",
        "--run",
        run.to_str().unwrap(),
        "--qrels",
        qrels.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let all = stdout(&o).lines().last().unwrap().to_owned();
    assert!(all.starts_with("all"));
    let cells: Vec<&str> = all.split_whitespace().collect();
    // P@5 P@10 MAP nDCG@20
    assert_eq!(cells[3], "1.0000");
    assert_eq!(cells[4], "1.0000");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(report["mean"][2], 1.0);
}

#[test]
fn method_comparison_table() {
    let dir = tempfile::tempdir().unwrap();
    let idx = fixture_index(dir.path());
    let mut args = vec!["eval".to_string()];
    for (m, label) in [("none", "None"), ("rm3", "RM3"), ("prf", "PRF"), ("gqe", "GQE-PRF")] {
        let out = dir.path().join(format!("{m}.run"));
        run_fixture(&idx, &out, &["--method", m, "--workers", "2"]).unwrap();
        args.extend(["--run".into(), out.to_str().unwrap().into(), "--label".into(), label.into()]);
    }
    args.extend(["--qrels".into(), fixture("qrels.txt").to_str().unwrap().into(), "--threshold".into(), "2".into()]);
    let o = gqeprf(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 5, "{table}");
    assert!(rows[0].starts_with("run"));
    for (row, label) in rows[1..].iter().zip(["None", "RM3", "PRF", "GQE-PRF"]) {
        assert!(row.starts_with(label), "{row}");
    }
}

#[test]
fn rm3_lambda_one_equals_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let idx = fixture_index(dir.path());
    let base = run_fixture(&idx, &dir.path().join("a"), &["--method", "none"]).unwrap();
    let rm3 = run_fixture(&idx, &dir.path().join("b"), &["--method", "rm3", "--orig-weight", "1"]).unwrap();
    let ids = |s: &str| s.lines().map(|l| l.split_whitespace().take(3).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>();
    assert_eq!(ids(&base), ids(&rm3));
}

#[test]
fn runs_are_idempotent_and_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let idx = fixture_index(dir.path());
    let a = run_fixture(&idx, &dir.path().join("a"), &["--method", "gqe", "--n", "5"]).unwrap();
    let b = run_fixture(&idx, &dir.path().join("b"), &["--method", "gqe", "--n", "5"]).unwrap();
    assert_eq!(a, b);
    assert!(a.lines().all(|l| l.ends_with(" gqe-prf.n5")));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let idx = fixture_index(dir.path());
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "method = \"gqe\"\nn = 3\ndepth = 5\n").unwrap();
    let from_file = run_fixture(&idx, &dir.path().join("a"), &["--config", cfg.to_str().unwrap()]).unwrap();
    assert!(from_file.lines().all(|l| l.ends_with("gqe-prf.n3")));
    assert!(from_file.lines().filter(|l| l.starts_with("q1 ")).count() <= 5);

    let flag = run_fixture(&idx, &dir.path().join("b"), &["--config", cfg.to_str().unwrap(), "--method", "rm3"]).unwrap();
    assert!(flag.lines().all(|l| l.ends_with(" rm3")));

    std::fs::write(&cfg, "methd = \"gqe\"\n").unwrap();
    assert!(run_fixture(&idx, &dir.path().join("c"), &["--config", cfg.to_str().unwrap()]).is_err());
}

#[test]
fn stdio_generator_from_env_matches_mock() {
    let dir = tempfile::tempdir().unwrap();
    let idx = fixture_index(dir.path());
    let mock = run_fixture(&idx, &dir.path().join("mock"), &["--method", "gqe", "--workers", "3"]).unwrap();

    let out = dir.path().join("stdio");
    let o = Command::new(BIN)
        .args([
            "run",
            "--index",
            idx.to_str().unwrap(),
            "--queries",
            fixture("queries.tsv").to_str().unwrap(),
            "-o",
            out.to_str().unwrap(),
            "--method",
            "gqe",
            "--workers",
            "3",
        ])
        .env("GQEPRF_GENERATOR_URL", format!("stdio:{BIN} serve-mock --stdio --index {}", idx.display()))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out).unwrap(), mock);
}

#[test]
fn http_generator_and_external_scorer_match_mock() {
    let dir = tempfile::tempdir().unwrap();
    let idx = fixture_index(dir.path());
    let mut server = Command::new(BIN)
        .args(["serve-mock", "--listen", "127.0.0.1:0", "--index", idx.to_str().unwrap()])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut first = String::new();
    BufReader::new(server.stdout.take().unwrap()).read_line(&mut first).unwrap();
    let url = first.trim().strip_prefix("listening on ").unwrap().to_owned();

    let common = ["--method", "gqe", "--rerank", "external", "--rerank-depth", "5", "--workers", "2"];
    let mock = run_fixture(&idx, &dir.path().join("mock"), &common);
    let mut remote_args = common.to_vec();
    remote_args.extend(["--generator", &url, "--scorer", &url]);
    let remote = run_fixture(&idx, &dir.path().join("http"), &remote_args);
    server.kill().ok();
    server.wait().ok();

    let mock = mock.unwrap();
    assert_eq!(remote.unwrap(), mock);
    assert!(mock.lines().all(|l| l.ends_with("gqe-prf.n7.rerank5")));
}

#[test]
fn unreachable_generator_names_query() {
    let dir = tempfile::tempdir().unwrap();
    let idx = fixture_index(dir.path());
    let err = run_fixture(
        &idx,
        &dir.path().join("x"),
        &["--method", "gqe", "--generator", "http://127.0.0.1:9", "--timeout-secs", "2", "--workers", "1"],
    )
    .unwrap_err();
    assert!(err.contains("query q1"), "{err}");
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let idx = fixture_index(dir.path());
    let csv = dir.path().join("s.csv");
    let o = gqeprf([
        "sweep",
        "--index",
        idx.to_str().unwrap(),
        "--queries",
        fixture("queries.tsv").to_str().unwrap(),
        "--qrels",
        fixture("qrels.txt").to_str().unwrap(),
        "-o",
        csv.to_str().unwrap(),
        "--n-values",
        "2,4",
        "--objective",
        "nDCG@20",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("n,P@5,P@10,MAP,nDCG@20\n"));
    assert!(stdout(&o).starts_with("best_n="));
}
