use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::minimizers::RegretLedger;

/// Iterates are written only up to this dimension.
pub const MAX_LOGGED_DIM: usize = 8;

/// One CSV row per round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub run: String,
    pub round: usize,
    /// `c_t`, the squared projected-gradient norm of the window average.
    pub cost: f64,
    /// `Φ_t(x_t)`, second-order runs only.
    pub phi: Option<f64>,
    pub steps: u64,
    pub cumulative_regret: f64,
    pub cumulative_steps: u64,
    pub value_calls: u64,
    pub gradient_calls: u64,
    pub hessian_calls: u64,
    pub stochastic_calls: u64,
    /// `x_t` as space-separated coordinates.
    pub iterate: Option<String>,
}

/// Trace rows of one ledger; `iterates[t − 1] = x_t` is logged when given
/// and small.
pub fn records_from_ledger(run: &str, ledger: &RegretLedger, iterates: Option<&[Point]>) -> Vec<TraceRecord> {
    let mut regret = 0.0;
    let mut steps = 0;
    ledger
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            regret += e.cost;
            steps += e.steps;
            let iterate = iterates
                .and_then(|xs| xs.get(i))
                .filter(|x| x.dim() <= MAX_LOGGED_DIM)
                .map(format_point);
            TraceRecord {
                run: run.to_string(),
                round: e.round,
                cost: e.cost,
                phi: e.phi.map(|p| p.value),
                steps: e.steps,
                cumulative_regret: regret,
                cumulative_steps: steps,
                value_calls: e.calls.value,
                gradient_calls: e.calls.gradient,
                hessian_calls: e.calls.hessian,
                stochastic_calls: e.calls.stochastic,
                iterate,
            }
        })
        .collect()
}

pub fn format_point(x: &Point) -> String {
    x.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn parse_point(s: &str) -> Result<Point> {
    let coords = s
        .split_whitespace()
        .map(|c| c.parse::<f64>().map_err(|e| Error::invalid(format!("bad coordinate {c:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Point::new(coords)
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace and checks that rounds increase and cumulative columns
/// never decrease.
pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let records = r.deserialize().collect::<std::result::Result<Vec<TraceRecord>, _>>()?;
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.round <= a.round
            || b.cumulative_regret < a.cumulative_regret
            || b.cumulative_steps < a.cumulative_steps
            || b.gradient_calls < a.gradient_calls
        {
            return Err(Error::invalid(format!(
                "{}: trace is not monotone at round {}",
                path.display(),
                b.round
            )));
        }
    }
    Ok(records)
}

/// Local regret recomputed from the per-round costs.
pub fn replay_regret(records: &[TraceRecord]) -> f64 {
    records.iter().map(|r| r.cost).sum()
}
