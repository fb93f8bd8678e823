use nalgebra::DVector;

use super::eig::min_eig;
use super::{
    check_incoming, check_positive, check_window, resolve_start, InnerStep, OnlineLearner,
    PhiPotential, RegretLedger, RoundRecord, RunOutput, DEFAULT_SAFETY_CAP,
};
use crate::bounds;
use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, Point};
use crate::losses::{Constants, LossFunction, OracleCalls, WindowAverage, WindowEval};

/// Parameters of the time-smoothed online Newton method.
#[derive(Clone, Debug)]
pub struct NewtonConfig {
    pub dim: usize,
    pub window: usize,
    /// Defaults to `β`.
    pub delta: Option<f64>,
    pub safety_cap: u64,
    pub start: Option<Point>,
    pub trace_inner: bool,
}

impl NewtonConfig {
    pub fn new(dim: usize, window: usize) -> Self {
        NewtonConfig {
            dim,
            window,
            delta: None,
            safety_cap: DEFAULT_SAFETY_CAP,
            start: None,
            trace_inner: false,
        }
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

/// Time-smoothed online Newton method on `Rⁿ`.
///
/// Each inner step takes a gradient step `x ← x − ∇F_{t,w}(x)/β`, then looks
/// at the minimum eigenpair `(λ, v)` of `∇²F_{t,w}(x)`. When `λ < 0` the
/// candidate `y = x + (2|λ|/L₂)·v`, with `v` oriented so that
/// `⟨v, ∇F_{t,w}(x)⟩ ≤ 0`, replaces `x` if it lowers `F_{t,w}`. Rounds end
/// once `Φ_t(x) ≤ δ³/w³`. `λ = 0` counts as non-negative.
#[derive(Clone, Debug)]
pub struct TimeSmoothedNewton {
    body: ConvexBody,
    window: WindowAverage,
    constants: Constants,
    hessian_lipschitz: f64,
    delta: f64,
    safety_cap: u64,
    trace_inner: bool,
    x: Point,
    ledger: RegretLedger,
}

impl TimeSmoothedNewton {
    pub fn new(config: NewtonConfig, constants: Constants) -> Result<Self> {
        check_window(config.window)?;
        let body = ConvexBody::unconstrained(config.dim)?;
        check_positive("beta", constants.smoothness)?;
        let hessian_lipschitz = match constants.hessian_lipschitz {
            Some(l2) if l2 > 0.0 && l2.is_finite() => l2,
            other => {
                return Err(Error::Precondition(format!(
                    "the Newton learner needs a positive Hessian-Lipschitz constant, got {other:?}"
                )))
            }
        };
        let delta = config.delta.unwrap_or(constants.smoothness);
        check_positive("delta", delta)?;
        let x = resolve_start(&body, config.start.as_ref())?;
        Ok(TimeSmoothedNewton {
            window: WindowAverage::new(config.window, config.dim)?,
            body,
            constants,
            hessian_lipschitz,
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

    /// Loop threshold `δ³/w³`.
    pub fn threshold(&self) -> f64 {
        (self.delta / self.window.window() as f64).powi(3)
    }

    /// `C₁·T/w²` for the rounds played so far.
    pub fn phi_bound(&self) -> f64 {
        self.ledger.len() as f64
            * bounds::newton_round_bound(
                self.delta,
                self.constants.lipschitz,
                self.constants.smoothness,
                self.hessian_lipschitz,
                self.window.window(),
            )
    }

    /// `(2βM/δ³)(2Tw² + w³)` for the rounds played so far.
    pub fn step_bound(&self) -> f64 {
        bounds::newton_step_bound(
            self.constants.bound,
            self.constants.smoothness,
            self.delta,
            self.ledger.len(),
            self.window.window(),
        )
    }

    fn evaluate(&self, x: &DVector<f64>, calls: &mut OracleCalls) -> Result<WindowEval> {
        let e = self.window.evaluate(x, calls)?;
        if !(e.value.is_finite() && e.gradient.iter().all(|g| g.is_finite())) {
            return Err(Error::NonFinite(format!(
                "window average at round {}",
                self.window.round()
            )));
        }
        Ok(e)
    }

    fn phi(&self, e: &WindowEval) -> Result<PhiPotential> {
        let h = e
            .hessian
            .as_ref()
            .ok_or_else(|| Error::Precondition("window has a loss without a Hessian".into()))?;
        let pair = min_eig(h)?;
        Ok(PhiPotential::new(
            &e.gradient,
            pair.value,
            self.constants.smoothness,
            self.hessian_lipschitz,
        ))
    }

    /// One inner step from `z`; returns the new point, its evaluation and
    /// whether the curvature candidate won.
    fn inner_step(
        &self,
        z: &DVector<f64>,
        at_z: &WindowEval,
        calls: &mut OracleCalls,
    ) -> Result<(DVector<f64>, WindowEval, bool)> {
        let beta = self.constants.smoothness;
        let stepped = z - &at_z.gradient / beta;
        let at_stepped = self.evaluate(&stepped, calls)?;
        let h = at_stepped.hessian.as_ref().expect("checked in phi");
        let pair = min_eig(h)?;
        if pair.value < 0.0 {
            let mut v = pair.vector;
            if v.dot(&at_stepped.gradient) > 0.0 {
                v = -v;
            }
            let y = &stepped + v * (2.0 * pair.value.abs() / self.hessian_lipschitz);
            let at_y = self.evaluate(&y, calls)?;
            if at_y.value < at_stepped.value {
                return Ok((y, at_y, true));
            }
        }
        Ok((stepped, at_stepped, false))
    }
}

impl OnlineLearner for TimeSmoothedNewton {
    fn current(&self) -> &Point {
        &self.x
    }

    fn observe(&mut self, f: LossFunction) -> Result<RoundRecord> {
        check_incoming(&f, &self.body, &self.constants)?;
        if !f.has_hessian() {
            return Err(Error::Precondition(format!("loss {f:?} has no Hessian oracle")));
        }
        self.window.push(f)?;
        let round = self.window.round();
        let threshold = self.threshold();

        let mut calls = OracleCalls::default();
        let mut x = self.x.as_vector().clone();
        let mut at_x = self.evaluate(&x, &mut calls)?;
        let mut phi = self.phi(&at_x)?;
        let played = phi;
        let cost = at_x.gradient.norm_squared();
        let mut steps = 0u64;
        let mut inner = Vec::new();
        while phi.value > threshold {
            if steps >= self.safety_cap {
                return Err(Error::SafetyCapExceeded {
                    round,
                    cap: self.safety_cap,
                    last_measure: phi.value,
                    threshold,
                });
            }
            let (next, at_next, curvature_step) = self.inner_step(&x, &at_x, &mut calls)?;
            let next_phi = self.phi(&at_next)?;
            if self.trace_inner {
                inner.push(InnerStep {
                    before: at_x.value,
                    after: at_next.value,
                    measure: phi.value,
                    curvature_step,
                });
            }
            x = next;
            at_x = at_next;
            phi = next_phi;
            steps += 1;
        }
        self.ledger.record(cost, steps, Some(played), calls);
        self.x = Point::from_vector(x)?;
        Ok(RoundRecord {
            round,
            cost,
            steps,
            phi: Some(played),
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
        1.0 / self.constants.smoothness
    }

    fn window(&self) -> usize {
        self.window.window()
    }
}

/// Runs the Newton learner with constants taken uniformly over `losses`.
pub fn newton_run(losses: &[LossFunction], config: NewtonConfig) -> Result<RunOutput> {
    let constants = Constants::uniform(losses);
    let mut learner = TimeSmoothedNewton::new(config, constants)?;
    let mut iterates = Vec::with_capacity(losses.len());
    for f in losses {
        iterates.push(learner.current().clone());
        learner.observe(f.clone())?;
    }
    Ok(RunOutput {
        iterates,
        last: learner.x,
        ledger: learner.ledger,
    })
}
