use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::summary_dir;
use super::summary::Summary;
use super::trace::{read_trace, replay_regret};
use crate::error::{Error, Result};

/// Allowed gap between a summary's regret and the one replayed from its
/// trace.
pub const REPLAY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub experiment: String,
    pub name: String,
    pub rule: String,
    pub measured: f64,
    pub theoretical: f64,
    pub margin: f64,
    pub pass: bool,
    /// Informational rows never fail verification.
    pub enforced: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass || !r.enforced)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ew = self.rows.iter().map(|r| r.experiment.len()).max().unwrap_or(0).max(10);
        let nw = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(5);
        writeln!(
            f,
            "{:<ew$} {:<nw$} {:<19} {:>13} {:>13} {:>10} result",
            "experiment", "bound", "rule", "measured", "theoretical", "margin"
        )?;
        for r in &self.rows {
            let verdict = match (r.pass, r.enforced) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "info",
            };
            writeln!(
                f,
                "{:<ew$} {:<nw$} {:<19} {:>13.6e} {:>13.6e} {:>10.3e} {verdict}",
                r.experiment, r.name, r.rule, r.measured, r.theoretical, r.margin
            )?;
        }
        Ok(())
    }
}

/// Rechecks every bound row and replays every trace named in `paths`.
pub fn verify(paths: &[PathBuf]) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    for path in paths {
        let summary = Summary::read(path)?;
        for row in &summary.bounds {
            report.rows.push(VerifyRow {
                experiment: summary.experiment.clone(),
                name: row.name.clone(),
                rule: serde_json::to_value(row.rule)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                measured: row.measured,
                theoretical: row.theoretical,
                margin: row.margin(),
                pass: row.holds(),
                enforced: summary.assert_bounds,
            });
        }
        report.rows.push(replay_row(path, &summary)?);
    }
    Ok(report)
}

fn replay_row(path: &Path, summary: &Summary) -> Result<VerifyRow> {
    let dir = summary_dir(path);
    let mut worst: f64 = 0.0;
    for run in &summary.runs {
        for (name, regret) in run.traces.iter().zip(&run.regrets) {
            let records = read_trace(&dir.join(name)).map_err(|e| Error::MalformedSummary {
                path: path.display().to_string(),
                reason: format!("trace {name}: {e}"),
            })?;
            if records.len() != summary.horizon {
                return Err(Error::MalformedSummary {
                    path: path.display().to_string(),
                    reason: format!("trace {name} has {} rounds, expected {}", records.len(), summary.horizon),
                });
            }
            worst = worst.max((replay_regret(&records) - regret).abs());
        }
    }
    Ok(VerifyRow {
        experiment: summary.experiment.clone(),
        name: "trace replay of local regret".into(),
        rule: "replay".into(),
        measured: worst,
        theoretical: REPLAY_TOL,
        margin: REPLAY_TOL - worst,
        pass: worst <= REPLAY_TOL,
        enforced: true,
    })
}
