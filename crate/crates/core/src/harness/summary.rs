use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentKind;
use crate::error::{Error, Result};
use crate::games::EquilibriumReport;
use crate::losses::OracleCalls;

/// Slack for deterministic comparisons.
pub const DETERMINISTIC_TOL: f64 = 1e-9;
/// Standard errors granted to a sample mean checked against a lower bound.
pub const LOWER_BOUND_SE: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundRule {
    /// `measured ≤ theoretical + 1e−9`.
    DeterministicUpper,
    /// Sample mean `≤ theoretical`.
    MeanUpper,
    /// Sample mean `+ 3·SE ≥ theoretical`.
    MeanLower,
    /// `|measured − theoretical| ≤ 1e−9`.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub name: String,
    pub rule: BoundRule,
    pub measured: f64,
    pub theoretical: f64,
    pub std_error: Option<f64>,
    pub samples: usize,
    pub pass: bool,
}

impl BoundRow {
    pub fn new(name: impl Into<String>, rule: BoundRule, measured: f64, theoretical: f64) -> Self {
        let mut row = BoundRow {
            name: name.into(),
            rule,
            measured,
            theoretical,
            std_error: None,
            samples: 1,
            pass: false,
        };
        row.pass = row.holds();
        row
    }

    /// Mean and standard error of `samples` checked with `rule`.
    pub fn from_samples(name: impl Into<String>, rule: BoundRule, samples: &[f64], theoretical: f64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let se = if samples.len() > 1 {
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        let mut row = BoundRow {
            name: name.into(),
            rule,
            measured: mean,
            theoretical,
            std_error: Some(se),
            samples: samples.len(),
            pass: false,
        };
        row.pass = row.holds();
        row
    }

    /// Signed slack; non-negative iff the row passes.
    pub fn margin(&self) -> f64 {
        match self.rule {
            BoundRule::DeterministicUpper => self.theoretical + DETERMINISTIC_TOL - self.measured,
            BoundRule::MeanUpper => self.theoretical - self.measured,
            BoundRule::MeanLower => {
                self.measured + LOWER_BOUND_SE * self.std_error.unwrap_or(0.0) - self.theoretical
            }
            BoundRule::Exact => DETERMINISTIC_TOL - (self.measured - self.theoretical).abs(),
        }
    }

    /// Recomputes the pass rule from the stored numbers.
    pub fn holds(&self) -> bool {
        let m = self.margin();
        m.is_finite() && m >= 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    /// Trace files, relative to the summary's directory; one per player.
    pub traces: Vec<String>,
    /// Local regret per trace.
    pub regrets: Vec<f64>,
    pub total_steps: Vec<u64>,
    pub calls: Vec<OracleCalls>,
    #[serde(default)]
    pub phi_total: Option<f64>,
    #[serde(default)]
    pub equilibrium: Option<EquilibriumReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub kind: ExperimentKind,
    pub horizon: usize,
    pub window: usize,
    /// When false, rows are informational and never fail.
    pub assert_bounds: bool,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunSummary>,
    pub bounds: Vec<BoundRow>,
}

impl Summary {
    pub fn failures(&self) -> impl Iterator<Item = &BoundRow> {
        self.bounds.iter().filter(move |r| self.assert_bounds && !r.holds())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedSummary {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| malformed(e.to_string()))?;
        let s: Summary = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
        if s.runs.iter().any(|r| r.traces.len() != r.regrets.len()) {
            return Err(malformed("trace and regret counts differ".into()));
        }
        Ok(s)
    }
}
