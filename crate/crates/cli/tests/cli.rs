use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_localregret"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"
[[experiment]]
name = "smooth"
kind = "tsogd"
horizon = 100
window = 10
seeds = [1, 2, 3]
body = { kind = "cube", dim = 2, half_width = 1.0 }
sequence = { kind = "random" }

[[experiment]]
name = "hard"
kind = "adversary-vs-tsogd"
horizon = 40
window = 2
seeds = { first = 0, count = 50 }
"#;

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn list_builtins_names_every_builtin() {
    let out = run(&["list-builtins"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["quadratic", "negquadratic", "linear", "sine_mix", "rastrigin_smooth", "hidden_valley_demo"] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn run_writes_one_trace_per_seed_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = run(&["run", config.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--parallelism",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));

    let smooth = files_in(&a.join("smooth"));
    let names: Vec<&str> = smooth.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, vec!["seed-1.csv", "seed-2.csv", "seed-3.csv", "summary.json"]);
    assert_eq!(smooth, files_in(&b.join("smooth")));
    assert_eq!(files_in(&a.join("hard")), files_in(&b.join("hard")));
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&["run", config.to_str().unwrap(), "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["run", config.to_str().unwrap(), "--out", b.to_str().unwrap(), "--sequential"])
        .status
        .success());
    assert_eq!(files_in(&a.join("hard")), files_in(&b.join("hard")));
}

#[test]
fn seed_override_replaces_seed_lists() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("o");
    let out = run(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seed-override",
        "7,8",
    ]);
    assert!(out.status.success());
    let names: Vec<String> = files_in(&out_dir.join("smooth")).into_iter().map(|f| f.0).collect();
    assert_eq!(names, vec!["seed-7.csv", "seed-8.csv", "summary.json"]);
}

#[test]
fn verify_passes_on_fresh_summaries_and_fails_on_tampered_ones() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("o");
    assert!(run(&["run", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]).status.success());
    let summary = out_dir.join("smooth/summary.json");
    let out = run(&["verify", summary.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("PASS") && !table.contains("FAIL"), "{table}");

    // push a measured value past its bound; the stored pass flag is ignored
    let text = fs::read_to_string(&summary).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
    json["bounds"][0]["measured"] = serde_json::json!(1e300);
    fs::write(&summary, json.to_string()).unwrap();
    let out = run(&["verify", summary.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}

#[test]
fn empty_verify_succeeds() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn malformed_summary_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("summary.json");
    fs::write(&path, "{ not json").unwrap();
    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_config_names_the_violated_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[[experiment]]\nname = \"x\"\nkind = \"tsogd\"\nhorizon = 10\nwindow = 2\neta = 5.0\n\
         body = { kind = \"cube\", dim = 1, half_width = 1.0 }\n\
         sequence = { kind = \"builtin\", name = \"quadratic\" }\n",
    );
    let out = run(&["run", config.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("eta < 2/beta"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn missing_config_exits_with_two() {
    let out = run(&["run", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
}
