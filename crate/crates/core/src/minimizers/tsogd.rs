use nalgebra::DVector;

use super::{
    check_incoming, check_positive, check_window, default_delta, default_eta, resolve_start,
    InnerStep, OnlineLearner, RegretLedger, RoundRecord, RunOutput, DEFAULT_SAFETY_CAP,
};
use crate::bounds;
use crate::error::{Error, Result};
use crate::geometry::{projected_gradient_unchecked, ConvexBody, Point};
use crate::losses::{Constants, LossFunction, OracleCalls, WindowAverage};

/// Parameters of time-smoothed online gradient descent.
///
/// `eta` defaults to `1/β` and `delta` to `L` of the declared constants.
#[derive(Clone, Debug)]
pub struct TsogdConfig {
    pub body: ConvexBody,
    pub window: usize,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub safety_cap: u64,
    pub start: Option<Point>,
    /// Record `F_{t,w}` before and after every inner step. Costs extra value
    /// evaluations that are not charged to the ledger.
    pub trace_inner: bool,
}

impl TsogdConfig {
    pub fn new(body: ConvexBody, window: usize) -> Self {
        TsogdConfig {
            body,
            window,
            eta: None,
            delta: None,
            safety_cap: DEFAULT_SAFETY_CAP,
            start: None,
            trace_inner: false,
        }
    }

    pub fn eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn start(mut self, start: Point) -> Self {
        self.start = Some(start);
        self
    }

    pub fn safety_cap(mut self, cap: u64) -> Self {
        self.safety_cap = cap;
        self
    }

    pub fn trace_inner(mut self, on: bool) -> Self {
        self.trace_inner = on;
        self
    }
}

/// Time-smoothed online gradient descent.
///
/// After observing `f_t` the learner runs projected gradient descent on
/// `F_{t,w}` from `x_t` until `‖∇_{K,η} F_{t,w}(x)‖ ≤ δ/w`. The check runs
/// before the first step, so a round can take zero steps, and its first
/// evaluation is exactly the round cost `c_t`.
#[derive(Clone, Debug)]
pub struct Tsogd {
    body: ConvexBody,
    window: WindowAverage,
    constants: Constants,
    eta: f64,
    delta: f64,
    safety_cap: u64,
    trace_inner: bool,
    x: Point,
    ledger: RegretLedger,
}

impl Tsogd {
    /// Builds a learner for losses satisfying `constants` on `config.body`.
    pub fn new(config: TsogdConfig, constants: Constants) -> Result<Self> {
        config.body.validate()?;
        check_window(config.window)?;
        let eta = config.eta.unwrap_or_else(|| default_eta(&constants));
        let delta = config.delta.unwrap_or_else(|| default_delta(&constants));
        check_positive("eta", eta)?;
        check_positive("delta", delta)?;
        if bounds::descent_factor(eta, constants.smoothness) <= 0.0 {
            return Err(Error::Precondition(format!(
                "learning rate must satisfy eta < 2/beta; got eta = {eta}, beta = {}",
                constants.smoothness
            )));
        }
        let x = resolve_start(&config.body, config.start.as_ref())?;
        Ok(Tsogd {
            window: WindowAverage::new(config.window, config.body.dim())?,
            body: config.body,
            constants,
            eta,
            delta,
            safety_cap: config.safety_cap,
            trace_inner: config.trace_inner,
            x,
            ledger: RegretLedger::new(),
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    /// `R_w(T) ≤ (δ + 2L)² T / w²` for the rounds played so far.
    pub fn regret_bound(&self) -> f64 {
        bounds::tsogd_regret_bound(
            self.delta,
            self.constants.lipschitz,
            self.ledger.len(),
            self.window.window(),
        )
    }

    /// Inner-step bound `M/(δ²(η − βη²/2))·(2Tw + w²)` for the rounds so far.
    pub fn step_bound(&self) -> f64 {
        bounds::tsogd_step_bound(
            self.constants.bound,
            self.constants.smoothness,
            self.eta,
            self.delta,
            self.ledger.len(),
            self.window.window(),
        )
    }
}

impl OnlineLearner for Tsogd {
    fn current(&self) -> &Point {
        &self.x
    }

    fn observe(&mut self, f: LossFunction) -> Result<RoundRecord> {
        check_incoming(&f, &self.body, &self.constants)?;
        self.window.push(f)?;
        let round = self.window.round();
        let threshold = self.delta / self.window.window() as f64;

        let mut calls = OracleCalls::default();
        let mut scratch = OracleCalls::default();
        let mut x: DVector<f64> = self.x.as_vector().clone();
        let mut steps = 0u64;
        let mut cost = None;
        let mut inner = Vec::new();
        loop {
            let grad = self.window.gradient(&x, &mut calls)?;
            let pg = projected_gradient_unchecked(&self.body, self.eta, &grad, &x);
            let norm = pg.norm();
            if !norm.is_finite() {
                return Err(Error::NonFinite(format!(
                    "projected gradient in round {round}"
                )));
            }
            cost.get_or_insert(norm * norm);
            if norm <= threshold {
                break;
            }
            if steps >= self.safety_cap {
                return Err(Error::SafetyCapExceeded {
                    round,
                    cap: self.safety_cap,
                    last_measure: norm,
                    threshold,
                });
            }
            let next = self.body.project_unchecked(&(&x - &pg.value * self.eta));
            if self.trace_inner {
                inner.push(InnerStep {
                    before: self.window.value(&x, &mut scratch)?,
                    after: self.window.value(&next, &mut scratch)?,
                    measure: norm * norm,
                    curvature_step: false,
                });
            }
            x = next;
            steps += 1;
        }
        let cost = cost.expect("loop body runs at least once");
        self.ledger.record(cost, steps, None, calls);
        self.x = Point::from_vector(x)?;
        Ok(RoundRecord {
            round,
            cost,
            steps,
            phi: None,
            inner,
        })
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
        self.window.window()
    }
}

/// Runs time-smoothed OGD over `losses` with constants taken uniformly over
/// the sequence.
pub fn tsogd_run(losses: &[LossFunction], config: TsogdConfig) -> Result<RunOutput> {
    let constants = Constants::uniform(losses);
    let mut learner = Tsogd::new(config, constants)?;
    let mut iterates = Vec::with_capacity(losses.len());
    for f in losses {
        iterates.push(learner.current().clone());
        learner.observe(f.clone())?;
    }
    debug_assert!(
        learner.ledger.regret() <= learner.regret_bound() + 1e-9,
        "local regret {} exceeds its bound {}",
        learner.ledger.regret(),
        learner.regret_bound()
    );
    Ok(RunOutput {
        iterates,
        last: learner.x.clone(),
        ledger: learner.ledger,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::MEMBERSHIP_TOL;
    use crate::losses::{builtin_loss, builtin_loss_on, FnLoss, ZeroLoss};

    fn unit_interval() -> ConvexBody {
        ConvexBody::cube(1, 1.0).unwrap()
    }

    fn square() -> LossFunction {
        builtin_loss("quadratic", &[1.0], 1).unwrap()
    }

    /// Scalar re-implementation of the inner loop on [−1, 1] for identical
    /// quadratic losses `x²`.
    fn hand_simulate(start: f64, rounds: usize, w: usize, eta: f64, delta: f64) -> Vec<(f64, u64)> {
        let mut x = start;
        let mut out = Vec::new();
        for t in 1..=rounds {
            let weight = t.min(w) as f64 / w as f64;
            let pg = |x: f64| (x - (x - eta * weight * 2.0 * x).clamp(-1.0, 1.0)) / eta;
            let cost = pg(x).powi(2);
            let mut steps = 0;
            while pg(x).abs() > delta / w as f64 {
                x -= eta * pg(x);
                steps += 1;
            }
            out.push((cost, steps));
        }
        out
    }

    #[test]
    fn first_round_matches_hand_simulation() {
        // f = x² on [−1, 1]: β = 2, L = 2, so η = 1/2 and δ = 2.
        let losses = vec![square(); 5];
        let start = Point::new(vec![0.9]).unwrap();
        let run = tsogd_run(&losses, TsogdConfig::new(unit_interval(), 1).start(start)).unwrap();
        let expected = hand_simulate(0.9, 5, 1, 0.5, 2.0);
        for (entry, (cost, steps)) in run.ledger.entries().iter().zip(expected) {
            assert!((entry.cost - cost).abs() < 1e-15);
            assert_eq!(entry.steps, steps);
        }
        // |∇_{K,η}f| ≤ |f'| ≤ 2 = δ everywhere on [−1, 1]
        assert_eq!(run.ledger.total_steps(), 0);
    }

    #[test]
    fn hand_simulation_with_a_wider_window() {
        let losses = vec![square(); 12];
        let start = Point::new(vec![-0.8]).unwrap();
        let run = tsogd_run(&losses, TsogdConfig::new(unit_interval(), 4).start(start)).unwrap();
        let expected = hand_simulate(-0.8, 12, 4, 0.5, 2.0);
        for (entry, (cost, steps)) in run.ledger.entries().iter().zip(expected) {
            assert!((entry.cost - cost).abs() < 1e-14);
            assert_eq!(entry.steps, steps);
        }
    }

    #[test]
    fn zero_losses_cost_nothing() {
        let zero: LossFunction = Arc::new(ZeroLoss::new(2));
        let losses = vec![zero; 10];
        let run = tsogd_run(&losses, TsogdConfig::new(ConvexBody::cube(2, 1.0).unwrap(), 3)).unwrap();
        assert!(run.ledger.costs().iter().all(|&c| c == 0.0));
        assert!(run.ledger.steps().iter().all(|&s| s == 0));
    }

    #[test]
    fn single_round_is_plain_projected_descent() {
        let f = builtin_loss_on("sine_mix", &[3.0, 0.5], 1, 2.0).unwrap();
        let body = ConvexBody::cube(1, 2.0).unwrap();
        let start = Point::new(vec![1.7]).unwrap();
        let delta = 0.01;
        let run = tsogd_run(
            std::slice::from_ref(&f),
            TsogdConfig::new(body.clone(), 1).delta(delta).start(start.clone()),
        )
        .unwrap();
        let eta = 1.0 / f.constants().smoothness;
        let search = crate::geometry::find_stationary_point(&body, f.as_ref(), &start, eta, delta, 1000)
            .unwrap();
        assert_eq!(run.last.as_vector(), search.point().as_vector());
    }

    #[test]
    fn oversized_learning_rate_is_rejected() {
        let c = square().constants();
        let err = Tsogd::new(TsogdConfig::new(unit_interval(), 1).eta(1.0), c).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(Tsogd::new(TsogdConfig::new(unit_interval(), 1).eta(0.99), c).is_ok());
        assert!(Tsogd::new(TsogdConfig::new(unit_interval(), 0), c).is_err());
    }

    #[test]
    fn safety_cap_surfaces_as_an_error() {
        // declared β far too small: the loop cannot converge with η = 1/β
        let bad = FnLoss::new(
            "misdeclared",
            1,
            crate::losses::Constants::new(100.0, 1.0, 1e-3),
            |x| 50.0 * x[0] * x[0],
            |x| DVector::from_element(1, 100.0 * x[0]),
        )
        .into_shared();
        let body = unit_interval();
        let config = TsogdConfig::new(body, 1)
            .delta(1e-6)
            .safety_cap(50)
            .start(Point::new(vec![0.5]).unwrap());
        let err = tsogd_run(&[bad], config).unwrap_err();
        assert!(matches!(err, Error::SafetyCapExceeded { round: 1, cap: 50, .. }));
    }

    #[test]
    fn foreign_losses_are_rejected() {
        let mut learner = Tsogd::new(TsogdConfig::new(unit_interval(), 2), square().constants()).unwrap();
        let steeper = builtin_loss("quadratic", &[3.0], 1).unwrap();
        assert!(matches!(learner.observe(steeper), Err(Error::Precondition(_))));
        let wrong_dim = builtin_loss("quadratic", &[1.0], 2).unwrap();
        assert!(learner.observe(wrong_dim).is_err());
    }

    #[test]
    fn inner_steps_descend_and_iterates_stay_feasible() {
        let f = builtin_loss_on("sine_mix", &[3.0, 0.5], 2, 2.0).unwrap();
        let body = ConvexBody::cube(2, 2.0).unwrap();
        let losses = vec![f.clone(); 30];
        let c = f.constants();
        let w = 5;
        let eta = 1.0 / c.smoothness;
        let delta = c.lipschitz;
        let mut learner = Tsogd::new(
            TsogdConfig::new(body.clone(), w)
                .trace_inner(true)
                .start(Point::new(vec![1.9, -1.9]).unwrap()),
            c,
        )
        .unwrap();
        let min_drop = bounds::descent_factor(eta, c.smoothness) * (delta / w as f64).powi(2);
        let mut steps_seen = 0;
        for f in losses {
            assert!(body.contains(learner.current(), MEMBERSHIP_TOL));
            let record = learner.observe(f).unwrap();
            for step in &record.inner {
                assert!(step.before - step.after >= min_drop - 1e-9);
                steps_seen += 1;
            }
        }
        assert!(steps_seen > 0);
    }

    #[test]
    fn runs_are_bit_reproducible() {
        let f = builtin_loss_on("rastrigin_smooth", &[0.2], 2, 1.0).unwrap();
        let losses = vec![f; 20];
        let config = TsogdConfig::new(ConvexBody::cube(2, 1.0).unwrap(), 4)
            .start(Point::new(vec![0.77, -0.31]).unwrap());
        let a = tsogd_run(&losses, config.clone()).unwrap();
        let b = tsogd_run(&losses, config).unwrap();
        assert_eq!(a.iterates, b.iterates);
        assert_eq!(a.ledger, b.ledger);
    }

    #[test]
    fn oracle_accounting_matches_buffer_sizes() {
        let f = builtin_loss_on("sine_mix", &[2.0, 0.3], 2, 1.0).unwrap();
        let w = 3;
        let run = tsogd_run(
            &vec![f; 8],
            TsogdConfig::new(ConvexBody::cube(2, 1.0).unwrap(), w).delta(0.05),
        )
        .unwrap();
        let expected: u64 = run
            .ledger
            .entries()
            .iter()
            .map(|e| (e.steps + 1) * e.round.min(w) as u64)
            .sum();
        assert_eq!(run.ledger.calls().gradient, expected);
    }
}
