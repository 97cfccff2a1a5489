#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_gqeprf");

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn gqeprf<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(BIN)
        .args(args)
        .env_remove("GQEPRF_GENERATOR_URL")
        .output()
        .expect("spawn gqeprf")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Build the fixture index into `dir` and return its path.
pub fn fixture_index(dir: &Path) -> PathBuf {
    let idx = dir.join("fixture.idx");
    let docs = fixture("docs.tsv");
    let o = gqeprf(["index", "--docs", docs.to_str().unwrap(), "-o", idx.to_str().unwrap()]);
    assert!(o.status.success(), "index failed: {}", stderr(&o));
    idx
}

/// `gqeprf run` on the fixture queries; returns the run file contents.
pub fn run_fixture(index: &Path, out: &Path, extra: &[&str]) -> Result<String, String> {
    let queries = fixture("queries.tsv");
    let mut args = vec![
        "run",
        "--index",
        index.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = gqeprf(&args);
    if !o.status.success() {
        return Err(format!("run {extra:?} failed: {}", stderr(&o)));
    }
    std::fs::read_to_string(out).map_err(|e| e.to_string())
}
