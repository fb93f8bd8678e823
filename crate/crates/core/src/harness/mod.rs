//! Config-driven experiment runner.
//!
//! A TOML file lists `[[experiment]]` tables. Each experiment runs once per
//! seed (in parallel across seeds), writes one CSV trace per run and player
//! to `<out>/<name>/`, and a JSON `summary.json` with one row per checked
//! bound. [`verify`] re-reads summaries, recomputes every pass rule and
//! replays the traces.

mod config;
mod run;
mod summary;
mod trace;
mod verify;

pub use config::{
    BodySpec, ConfigFile, ExperimentConfig, ExperimentKind, GameConfig, SeedSpec, SequenceSpec,
};
pub use run::{run_config, run_experiment, validate_config, ExperimentOutput, RunOptions, RunReport, DEFAULT_OUTPUT_DIR};
pub use summary::{BoundRow, BoundRule, RunSummary, Summary, DETERMINISTIC_TOL, LOWER_BOUND_SE};
pub use trace::{
    format_point, parse_point, read_trace, records_from_ledger, replay_regret, write_trace, TraceRecord,
    MAX_LOGGED_DIM,
};
pub use verify::{verify, VerifyReport, VerifyRow, REPLAY_TOL};

use crate::losses::BUILTINS;

/// One line per builtin: name, default cube half-width and parameters.
pub fn list_builtins() -> String {
    BUILTINS
        .iter()
        .map(|(name, help, r)| format!("{name:<20} r = {r:<4} {help}\n"))
        .collect()
}
