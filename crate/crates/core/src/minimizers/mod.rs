//! Time-smoothed online learners and their local-regret bookkeeping.
//!
//! - [`Tsogd`]: follow-the-leader on `F_{t,w}`, approximated by projected
//!   gradient descent to tolerance `δ/w`.
//! - [`StochasticTsogd`]: one averaged stochastic-gradient step per round,
//!   unconstrained only.
//! - [`TimeSmoothedNewton`]: gradient plus negative-curvature steps until the
//!   Φ-potential drops below `δ³/w³`, unconstrained only.
//!
//! All three implement [`OnlineLearner`], which is what the game simulator
//! drives.

mod eig;
mod ledger;
mod newton;
mod stochastic;
mod tsogd;

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, Point};
use crate::losses::{Constants, LossFunction};

pub use eig::{min_eig, symmetric_eigen, EigenPair};
pub use ledger::{local_regret, LocalRegret, PhiPotential, RegretLedger, RoundEntry};
pub use newton::{newton_run, NewtonConfig, TimeSmoothedNewton};
pub use stochastic::{stochastic_tsogd_run, StochasticConfig, StochasticTsogd};
pub use tsogd::{tsogd_run, Tsogd, TsogdConfig};

/// Default cap on inner-loop steps per round.
pub const DEFAULT_SAFETY_CAP: u64 = 1_000_000;

/// One inner-loop step `z → z′`, recorded when inner tracing is enabled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerStep {
    /// `F_{t,w}(z)`.
    pub before: f64,
    /// `F_{t,w}(z′)`.
    pub after: f64,
    /// Stationarity measure at `z`: `‖∇_{K,η} F‖²` or `Φ_t(z)`.
    pub measure: f64,
    /// Whether the negative-curvature candidate was accepted (Newton only).
    pub curvature_step: bool,
}

/// What a learner reports after observing `f_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub cost: f64,
    pub steps: u64,
    pub phi: Option<PhiPotential>,
    pub inner: Vec<InnerStep>,
}

/// An online learner over a convex body: predict `x_t`, then observe `f_t`.
pub trait OnlineLearner: Send {
    /// The iterate the learner will play next.
    fn current(&self) -> &Point;

    fn observe(&mut self, loss: LossFunction) -> Result<RoundRecord>;

    fn ledger(&self) -> &RegretLedger;

    fn body(&self) -> &ConvexBody;

    /// Step scale `η` of the projected gradient the ledger costs are
    /// measured with.
    fn eta(&self) -> f64;

    fn window(&self) -> usize;
}

/// Played iterates and ledger of a completed run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    /// `x_1, …, x_T`.
    pub iterates: Vec<Point>,
    /// `x_{T+1}`.
    pub last: Point,
    pub ledger: RegretLedger,
}

/// `η = 1/β`, or `1` for a 0-smooth sequence.
pub fn default_eta(constants: &Constants) -> f64 {
    if constants.smoothness > 0.0 {
        1.0 / constants.smoothness
    } else {
        1.0
    }
}

/// `δ = L`, or `1` for a constant sequence.
pub fn default_delta(constants: &Constants) -> f64 {
    if constants.lipschitz > 0.0 {
        constants.lipschitz
    } else {
        1.0
    }
}

fn check_window(window: usize) -> Result<()> {
    if window == 0 {
        Err(Error::invalid("window size must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn resolve_start(body: &ConvexBody, start: Option<&Point>) -> Result<Point> {
    match start {
        None => Ok(body.center()),
        Some(p) => {
            Error::check_dim(body.dim(), p.dim())?;
            if !body.contains(p, crate::geometry::MEMBERSHIP_TOL) {
                return Err(Error::Precondition(format!("start point {p:?} lies outside the body")));
            }
            Point::from_vector(body.project(p)?)
        }
    }
}

/// Rejects a loss whose dimension, domain or declared constants are not
/// covered by the learner's assumptions.
fn check_incoming(f: &LossFunction, body: &ConvexBody, declared: &Constants) -> Result<()> {
    Error::check_dim(body.dim(), f.dim())?;
    if !f.domain().covers(body) {
        return Err(Error::Precondition(format!(
            "loss {f:?} declares constants on {:?}, which does not cover the body",
            f.domain()
        )));
    }
    let c = f.constants();
    let within = |have: f64, limit: f64| have <= limit * (1.0 + 1e-12) + 1e-300;
    if !(within(c.bound, declared.bound)
        && within(c.lipschitz, declared.lipschitz)
        && within(c.smoothness, declared.smoothness))
    {
        return Err(Error::Precondition(format!(
            "loss constants {c:?} exceed the declared constants {declared:?}"
        )));
    }
    Ok(())
}
