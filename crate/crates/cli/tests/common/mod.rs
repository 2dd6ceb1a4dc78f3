#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub fn core_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

pub fn core_golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Compares `actual` with a committed golden file, or rewrites the golden
/// when `UPDATE_GOLDENS` is set.
pub fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDENS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    assert_eq!(actual, read(&path), "golden {name} differs (set UPDATE_GOLDENS=1 to refresh)");
}

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the CLI in process with an explicit environment.
pub fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> Outcome {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let argv = std::iter::once("ctxreward").chain(args.iter().copied());
    let env = env.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let code = ctxreward_cli::main_with(argv, env, &mut stdout, &mut stderr);
    Outcome {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

pub fn run(args: &[&str]) -> Outcome {
    run_with_env(args, &[])
}

/// Runs the compiled binary with a clean `CTXREWARD_*` environment.
pub fn run_binary(args: &[&str]) -> Outcome {
    let mut command = Command::new(env!("CARGO_BIN_EXE_ctxreward"));
    command.args(args);
    for (key, _) in std::env::vars_os() {
        if key.to_string_lossy().starts_with("CTXREWARD_") {
            command.env_remove(key);
        }
    }
    let output = command.output().unwrap();
    Outcome {
        code: output.status.code().unwrap_or(-1),
        stdout: String::from_utf8(output.stdout).unwrap(),
        stderr: String::from_utf8(output.stderr).unwrap(),
    }
}

pub fn path_str(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Arguments shared by the fixture score and group runs.
pub fn fixture_inputs() -> Vec<String> {
    vec![
        "--manuscript".into(),
        core_fixture("manuscript.jsonl").display().to_string(),
        "--figure".into(),
        core_fixture("figure_details.txt").display().to_string(),
        "--novelty".into(),
        core_fixture("novelty_assessment.txt").display().to_string(),
    ]
}

pub fn score_args() -> Vec<String> {
    let mut args = vec!["score".to_string()];
    args.extend(fixture_inputs());
    args.extend(["--review".into(), core_fixture("review.txt").display().to_string()]);
    args
}

pub fn group_args() -> Vec<String> {
    let mut args = vec!["group".to_string(), "-G".into(), "2".into()];
    args.extend(fixture_inputs());
    args.extend(["--candidates".into(), core_fixture("group_candidates.jsonl").display().to_string()]);
    args
}

pub fn as_strs(args: &[String]) -> Vec<&str> {
    args.iter().map(String::as_str).collect()
}
