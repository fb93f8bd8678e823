use std::path::Path;

use localregret::harness::{
    read_trace, replay_regret, run_config, verify, ConfigFile, RunOptions, Summary,
};
use localregret::parallel::Execution;

const CONFIG: &str = r#"
[[experiment]]
name = "sine"
kind = "tsogd"
horizon = 60
window = 6
seeds = [4, 5]
body = { kind = "cube", dim = 2, half_width = 2.0 }
sequence = { kind = "random" }

[[experiment]]
name = "adversary"
kind = "adversary-vs-tsogd"
horizon = 40
window = 2
seeds = { first = 0, count = 50 }

[[experiment]]
name = "gan"
kind = "game"
horizon = 20
window = 5
game = { kind = "toy_gan" }
"#;

fn run_into(dir: &Path, execution: Execution) -> Vec<Summary> {
    let config = ConfigFile::parse(CONFIG).unwrap();
    let options = RunOptions {
        out_dir: Some(dir.to_path_buf()),
        execution,
        ..Default::default()
    };
    let report = run_config(&config, &options).unwrap();
    assert!(report.passed(), "{:?}", report.failures);
    report.summaries.iter().map(|p| Summary::read(p).unwrap()).collect()
}

#[test]
fn traces_replay_summary_regrets_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let summaries = run_into(dir.path(), Execution::default());
    assert_eq!(summaries.len(), 3);
    for summary in &summaries {
        let base = dir.path().join(&summary.experiment);
        for run in &summary.runs {
            for (file, regret) in run.traces.iter().zip(&run.regrets) {
                let records = read_trace(&base.join(file)).unwrap();
                assert_eq!(records.len(), summary.horizon);
                assert!((replay_regret(&records) - regret).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn execution_mode_does_not_change_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let seq = run_into(a.path(), Execution::Sequential);
    let par = run_into(b.path(), Execution::Parallel);
    assert_eq!(seq, par);
}

#[test]
fn written_summaries_verify() {
    let dir = tempfile::tempdir().unwrap();
    let config = ConfigFile::parse(CONFIG).unwrap();
    let options = RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let report = run_config(&config, &options).unwrap();
    let checked = verify(&report.summaries).unwrap();
    assert!(checked.passed());
}
