use std::collections::VecDeque;

use nalgebra::DVector;

use super::{
    check_incoming, check_positive, check_window, default_eta, resolve_start, OnlineLearner,
    RegretLedger, RoundRecord, RunOutput,
};
use crate::bounds;
use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, Point};
use crate::losses::{Constants, LossFunction, OracleCalls, StochasticGradientOracle, WindowAverage};

/// Parameters of time-smoothed OGD with stochastic gradients.
#[derive(Clone, Debug)]
pub struct StochasticConfig {
    /// Must be unconstrained.
    pub body: ConvexBody,
    pub window: usize,
    /// Defaults to `1/β`.
    pub eta: Option<f64>,
    /// Defaults to the origin.
    pub start: Option<Point>,
    /// Noise level used when the learner wraps plain losses itself.
    pub sigma: f64,
    /// Seed for oracles the learner creates from plain losses; round `t`
    /// uses stream `t`.
    pub seed: u64,
}

impl StochasticConfig {
    pub fn new(dim: usize, window: usize) -> Self {
        StochasticConfig {
            body: ConvexBody::Unconstrained { dim },
            window,
            eta: None,
            start: None,
            sigma: 0.0,
            seed: 0,
        }
    }

    pub fn eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn start(mut self, start: Point) -> Self {
        self.start = Some(start);
        self
    }

    pub fn noise(mut self, sigma: f64, seed: u64) -> Self {
        self.sigma = sigma;
        self.seed = seed;
        self
    }
}

/// Time-smoothed OGD driven by stochastic gradient oracles:
/// `x_{t+1} = x_t − (η/w) Σ_{i<w} ∇̃f_{t−i}(x_t)`.
///
/// Rounds `t − i ≤ 0` contribute zero and consume no sample. The ledger cost
/// of round `t` is the exact `‖∇F_{t,w}(x_t)‖²`, evaluated from the oracles'
/// base losses for verification only; those evaluations are not charged.
#[derive(Clone, Debug)]
pub struct StochasticTsogd {
    body: ConvexBody,
    window: usize,
    constants: Constants,
    eta: f64,
    sigma: f64,
    seed: u64,
    oracles: VecDeque<StochasticGradientOracle>,
    exact: WindowAverage,
    x: Point,
    ledger: RegretLedger,
}

impl StochasticTsogd {
    pub fn new(config: StochasticConfig, constants: Constants) -> Result<Self> {
        config.body.validate()?;
        if !config.body.is_unconstrained() {
            return Err(Error::Precondition(
                "the stochastic learner is defined for unconstrained bodies only".into(),
            ));
        }
        check_window(config.window)?;
        let eta = config.eta.unwrap_or_else(|| default_eta(&constants));
        check_positive("eta", eta)?;
        if !(config.sigma.is_finite() && config.sigma >= 0.0) {
            return Err(Error::invalid(format!("sigma must be >= 0, got {}", config.sigma)));
        }
        let x = resolve_start(&config.body, config.start.as_ref())?;
        Ok(StochasticTsogd {
            exact: WindowAverage::new(config.window, config.body.dim())?,
            oracles: VecDeque::with_capacity(config.window),
            body: config.body,
            window: config.window,
            constants,
            eta,
            sigma: config.sigma,
            seed: config.seed,
            x,
            ledger: RegretLedger::new(),
        })
    }

    /// `(8βM + σ²)·T/w` for the rounds played so far, at the learner's `σ`.
    pub fn regret_bound(&self, sigma: f64) -> f64 {
        bounds::stochastic_regret_bound(
            self.constants.smoothness,
            self.constants.bound,
            sigma,
            self.ledger.len(),
            self.window,
        )
    }

    /// Plays one round against a stochastic oracle for `f_t`.
    pub fn observe_oracle(&mut self, oracle: StochasticGradientOracle) -> Result<RoundRecord> {
        check_incoming(oracle.base(), &self.body, &self.constants)?;
        if self.oracles.len() == self.window {
            self.oracles.pop_front();
        }
        self.exact.push(oracle.base().clone())?;
        self.oracles.push_back(oracle);
        let round = self.exact.round();

        let x = self.x.as_vector();
        let mut unused = OracleCalls::default();
        let cost = self.exact.gradient(x, &mut unused)?.norm_squared();

        let mut step = DVector::zeros(x.len());
        for oracle in self.oracles.iter_mut() {
            step += oracle.sample(x);
        }
        let calls = OracleCalls {
            stochastic: self.oracles.len() as u64,
            ..Default::default()
        };
        let next = x - step * (self.eta / self.window as f64);
        self.x = Point::from_vector(next).map_err(|_| {
            Error::NonFinite(format!("stochastic iterate diverged in round {round}"))
        })?;
        self.ledger.record(cost, 1, None, calls);
        Ok(RoundRecord {
            round,
            cost,
            steps: 1,
            phi: None,
            inner: Vec::new(),
        })
    }
}

impl OnlineLearner for StochasticTsogd {
    fn current(&self) -> &Point {
        &self.x
    }

    /// Wraps `f` in an oracle with the configured noise on stream `t`.
    fn observe(&mut self, f: LossFunction) -> Result<RoundRecord> {
        let stream = self.exact.round() as u64 + 1;
        let oracle = StochasticGradientOracle::with_stream(f, self.sigma, self.seed, stream)?;
        self.observe_oracle(oracle)
    }

    fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }

    fn body(&self) -> &ConvexBody {
        &self.body
    }

    fn eta(&self) -> f64 {
        self.eta
    }

    fn window(&self) -> usize {
        self.window
    }
}

/// Runs the stochastic learner over a sequence of oracles.
pub fn stochastic_tsogd_run(
    oracles: Vec<StochasticGradientOracle>,
    config: StochasticConfig,
) -> Result<RunOutput> {
    let constants = Constants::uniform(oracles.iter().map(|o| o.base()));
    let mut learner = StochasticTsogd::new(config, constants)?;
    let mut iterates = Vec::with_capacity(oracles.len());
    for oracle in oracles {
        iterates.push(learner.current().clone());
        learner.observe_oracle(oracle)?;
    }
    Ok(RunOutput {
        iterates,
        last: learner.x,
        ledger: learner.ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::builtin_loss;

    fn base() -> LossFunction {
        builtin_loss("sine_mix", &[1.0, 0.0], 2).unwrap()
    }

    fn oracles(sigma: f64, seed: u64, horizon: usize) -> Vec<StochasticGradientOracle> {
        (0..horizon)
            .map(|t| StochasticGradientOracle::with_stream(base(), sigma, seed, t as u64 + 1).unwrap())
            .collect()
    }

    #[test]
    fn noiseless_single_window_is_gradient_descent() {
        let f = base();
        let eta = 1.0;
        let start = Point::new(vec![0.4, -1.3]).unwrap();
        let run = stochastic_tsogd_run(
            oracles(0.0, 1, 10),
            StochasticConfig::new(2, 1).start(start.clone()),
        )
        .unwrap();
        let mut x = start.into_inner();
        for played in &run.iterates {
            assert_eq!(played.as_vector(), &x);
            x = &x - f.gradient(&x) * eta;
        }
        assert_eq!(run.last.as_vector(), &x);
    }

    #[test]
    fn sample_count_excludes_padding() {
        let (horizon, w) = (25, 6);
        let run = stochastic_tsogd_run(oracles(0.5, 3, horizon), StochasticConfig::new(2, w)).unwrap();
        assert_eq!(run.ledger.calls().stochastic, bounds::stochastic_sample_count(horizon, w));
        assert_eq!(run.ledger.calls().gradient, 0);
    }

    #[test]
    fn constrained_bodies_are_rejected() {
        let mut config = StochasticConfig::new(2, 3);
        config.body = ConvexBody::cube(2, 1.0).unwrap();
        assert!(matches!(
            StochasticTsogd::new(config, base().constants()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn seeded_runs_repeat() {
        let a = stochastic_tsogd_run(oracles(2.0, 9, 40), StochasticConfig::new(2, 4)).unwrap();
        let b = stochastic_tsogd_run(oracles(2.0, 9, 40), StochasticConfig::new(2, 4)).unwrap();
        assert_eq!(a.iterates, b.iterates);
        let c = stochastic_tsogd_run(oracles(2.0, 10, 40), StochasticConfig::new(2, 4)).unwrap();
        assert_ne!(a.iterates, c.iterates);
    }

    #[test]
    fn learner_wraps_plain_losses_with_round_streams() {
        let mut by_loss = StochasticTsogd::new(
            StochasticConfig::new(2, 3).noise(1.0, 5),
            base().constants(),
        )
        .unwrap();
        for _ in 0..10 {
            by_loss.observe(base()).unwrap();
        }
        let by_oracle =
            stochastic_tsogd_run(oracles(1.0, 5, 10), StochasticConfig::new(2, 3)).unwrap();
        assert_eq!(by_loss.current(), &by_oracle.last);
    }
}
