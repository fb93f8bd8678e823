//! Iterated k-player games played by independent local-regret learners.
//!
//! Every round each player outputs `x_tⁱ`; only after all outputs are fixed
//! is player `i` shown the loss `x ↦ −fᵢ(x_t¹, …, x, …, x_tᵏ)`. A joint
//! strategy is an `ε`-smoothed local equilibrium at round `t` when each
//! player's projected gradient of the window-averaged deviation loss is at
//! most `ε` at its current action. Certificates use the same loss sign the
//! players are trained on, so they coincide with the per-player round costs.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::geometry::{projected_gradient, ConvexBody, Point};
use crate::losses::{Constants, Domain, Loss};
use crate::minimizers::{OnlineLearner, RegretLedger, Tsogd, TsogdConfig};

/// Payoffs `f₁, …, f_k` of a game, each a function of the joint point.
pub trait JointPayoff: Send + Sync + fmt::Debug {
    fn players(&self) -> usize;

    fn block_dim(&self, player: usize) -> usize;

    fn payoff(&self, player: usize, joint: &[DVector<f64>]) -> f64;

    /// Gradient of `f_player` with respect to the player's own block.
    fn block_gradient(&self, player: usize, joint: &[DVector<f64>]) -> DVector<f64>;

    fn block_hessian(&self, _player: usize, _joint: &[DVector<f64>]) -> Option<DMatrix<f64>> {
        None
    }

    /// Region of the player's own block on which its constants hold.
    fn domain(&self, _player: usize) -> Domain {
        Domain::Everywhere
    }
}

/// A game instance: payoffs, one decision set per player, the constants of
/// each player's induced losses and the starting joint point.
#[derive(Clone, Debug)]
pub struct GameSpec {
    pub name: String,
    pub payoff: Arc<dyn JointPayoff>,
    pub bodies: Vec<ConvexBody>,
    pub constants: Vec<Constants>,
    pub starts: Vec<Point>,
}

impl GameSpec {
    pub fn players(&self) -> usize {
        self.bodies.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.payoff.players();
        if k == 0 {
            return Err(Error::invalid("a game needs at least one player"));
        }
        for (what, len) in [
            ("bodies", self.bodies.len()),
            ("constants", self.constants.len()),
            ("starts", self.starts.len()),
        ] {
            if len != k {
                return Err(Error::invalid(format!("game has {k} players but {len} {what}")));
            }
        }
        for i in 0..k {
            self.bodies[i].validate()?;
            Error::check_dim(self.payoff.block_dim(i), self.bodies[i].dim())?;
            Error::check_dim(self.bodies[i].dim(), self.starts[i].dim())?;
            if !self.payoff.domain(i).covers(&self.bodies[i]) {
                return Err(Error::Precondition(format!(
                    "player {i}'s constants do not hold on its decision set"
                )));
            }
        }
        Ok(())
    }

    /// The loss player `i` sees when the others play `joint`.
    pub fn deviation_loss(&self, player: usize, joint: &[Point]) -> DeviationLoss {
        DeviationLoss {
            payoff: self.payoff.clone(),
            player,
            joint: joint.iter().map(|p| p.as_vector().clone()).collect(),
            constants: self.constants[player],
            domain: self.payoff.domain(player),
        }
    }
}

/// `x ↦ −f_player(joint with slot player replaced by x)`.
#[derive(Clone, Debug)]
pub struct DeviationLoss {
    payoff: Arc<dyn JointPayoff>,
    player: usize,
    joint: Vec<DVector<f64>>,
    constants: Constants,
    domain: Domain,
}

impl DeviationLoss {
    pub fn player(&self) -> usize {
        self.player
    }

    /// The frozen joint point (the player's own slot included).
    pub fn joint(&self) -> &[DVector<f64>] {
        &self.joint
    }

    fn with_slot(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let mut joint = self.joint.clone();
        joint[self.player] = x.clone();
        joint
    }
}

impl Loss for DeviationLoss {
    fn dim(&self) -> usize {
        self.joint[self.player].len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        -self.payoff.payoff(self.player, &self.with_slot(x))
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        -self.payoff.block_gradient(self.player, &self.with_slot(x))
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.payoff
            .block_hessian(self.player, &self.with_slot(x))
            .map(|h| -h)
    }

    fn has_hessian(&self) -> bool {
        let probe = self.joint.clone();
        self.payoff.block_hessian(self.player, &probe).is_some()
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn domain(&self) -> Domain {
        self.domain
    }
}

/// How players take turns within a round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOrder {
    /// All players output, then all observe losses at that joint point.
    #[default]
    Simultaneous,
    /// Player `i` observes a loss that already reflects the updated actions
    /// of players `0..i`. Demo only: the equilibrium guarantee assumes
    /// simultaneous play.
    Alternating,
}

/// Events reported to a [`SimulationHook`], in the order they happen.
#[derive(Clone, Debug, PartialEq)]
pub enum RoundEvent<'a> {
    /// The joint action of round `round` is fixed.
    Outputs { round: usize, joint: &'a [Point] },
    /// `player` is shown its loss for `round`, frozen at `frozen`.
    LossShown {
        round: usize,
        player: usize,
        frozen: &'a [DVector<f64>],
    },
}

pub trait SimulationHook {
    fn event(&mut self, event: RoundEvent<'_>);
}

impl<F: FnMut(RoundEvent<'_>)> SimulationHook for F {
    fn event(&mut self, event: RoundEvent<'_>) {
        self(event)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationOutcome {
    /// `history[t − 1][i] = x_tⁱ`.
    pub history: Vec<Vec<Point>>,
    pub ledgers: Vec<RegretLedger>,
    pub etas: Vec<f64>,
    pub window: usize,
    pub order: UpdateOrder,
}

impl SimulationOutcome {
    pub fn horizon(&self) -> usize {
        self.history.len()
    }

    pub fn regrets(&self) -> Vec<f64> {
        self.ledgers.iter().map(RegretLedger::regret).collect()
    }

    /// `√(Σᵢ Rᵢ/(T − w))`; requires `T > w`.
    pub fn theorem_bound(&self) -> Result<f64> {
        if self.horizon() <= self.window {
            return Err(Error::Precondition(format!(
                "equilibrium bound needs T > w, got T = {}, w = {}",
                self.horizon(),
                self.window
            )));
        }
        Ok(bounds::equilibrium_bound(&self.regrets(), self.horizon(), self.window))
    }

    /// The round in `[w, T]` with the smallest certificate, with the bound
    /// attached.
    pub fn certify(&self, game: &GameSpec) -> Result<EquilibriumReport> {
        let mut report = best_equilibrium_round(&self.history, game, &self.etas, self.window)?;
        report.theorem_bound = Some(self.theorem_bound()?);
        Ok(report)
    }
}

/// Plays `horizon` rounds of `game` with one learner per player.
pub fn simulate(
    game: &GameSpec,
    mut players: Vec<Box<dyn OnlineLearner>>,
    horizon: usize,
    order: UpdateOrder,
    mut hook: Option<&mut dyn SimulationHook>,
) -> Result<SimulationOutcome> {
    game.validate()?;
    let k = game.players();
    if players.len() != k {
        return Err(Error::invalid(format!(
            "game has {k} players but {} learners were supplied",
            players.len()
        )));
    }
    let window = players[0].window();
    if players.iter().any(|p| p.window() != window) {
        return Err(Error::invalid("all players must share one window size"));
    }
    for (i, p) in players.iter().enumerate() {
        if p.body() != &game.bodies[i] {
            return Err(Error::invalid(format!("player {i} plays on the wrong body")));
        }
    }

    let mut history = Vec::with_capacity(horizon);
    for round in 1..=horizon {
        let joint: Vec<Point> = players.iter().map(|p| p.current().clone()).collect();
        if let Some(h) = hook.as_deref_mut() {
            h.event(RoundEvent::Outputs { round, joint: &joint });
        }
        let mut frozen = joint.clone();
        for (i, player) in players.iter_mut().enumerate() {
            let loss = game.deviation_loss(i, &frozen);
            if let Some(h) = hook.as_deref_mut() {
                h.event(RoundEvent::LossShown {
                    round,
                    player: i,
                    frozen: loss.joint(),
                });
            }
            player
                .observe(Arc::new(loss))
                .map_err(|e| Error::PlayerAbort {
                    player: i,
                    source: Box::new(e),
                })?;
            if order == UpdateOrder::Alternating {
                frozen[i] = player.current().clone();
            }
        }
        history.push(joint);
    }
    Ok(SimulationOutcome {
        history,
        ledgers: players.iter().map(|p| p.ledger().clone()).collect(),
        etas: players.iter().map(|p| p.eta()).collect(),
        window,
        order,
    })
}

/// One time-smoothed OGD learner per player with default `η` and `δ`.
pub fn tsogd_players(game: &GameSpec, window: usize) -> Result<Vec<Box<dyn OnlineLearner>>> {
    (0..game.players())
        .map(|i| {
            let config = TsogdConfig::new(game.bodies[i].clone(), window).start(game.starts[i].clone());
            Ok(Box::new(Tsogd::new(config, game.constants[i])?) as Box<dyn OnlineLearner>)
        })
        .collect()
}

/// Simultaneous play with time-smoothed OGD players.
pub fn simulate_tsogd(game: &GameSpec, window: usize, horizon: usize) -> Result<SimulationOutcome> {
    simulate(game, tsogd_players(game, window)?, horizon, UpdateOrder::Simultaneous, None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub round: usize,
    /// Per-player certificate norms.
    pub norms: Vec<f64>,
    /// `max` of `norms`.
    pub epsilon: f64,
    /// `√(Σᵢ Rᵢ/(T − w))` when the ledgers are known.
    pub theorem_bound: Option<f64>,
}

/// Per-player `‖∇_{K,η}[(1/w)Σ_{j<w} −f̃_{i,t−j}](x_tⁱ)‖`, recomputed from
/// the raw history. Rounds before the first are zero, so any
/// `1 ≤ t ≤ T` is accepted.
pub fn certificate_norms(
    history: &[Vec<Point>],
    game: &GameSpec,
    etas: &[f64],
    window: usize,
    round: usize,
) -> Result<Vec<f64>> {
    let k = game.players();
    if window == 0 {
        return Err(Error::invalid("window size must be at least 1"));
    }
    if round == 0 || round > history.len() {
        return Err(Error::invalid(format!(
            "round {round} outside the history 1..={}",
            history.len()
        )));
    }
    if etas.len() != k {
        return Err(Error::invalid(format!("need {k} step sizes, got {}", etas.len())));
    }
    let past = &history[round.saturating_sub(window)..round];
    (0..k)
        .map(|i| {
            let x = history[round - 1][i].as_vector();
            let mut g = DVector::zeros(x.len());
            for joint in past {
                let mut joint: Vec<DVector<f64>> = joint.iter().map(|p| p.as_vector().clone()).collect();
                joint[i] = x.clone();
                g += game.payoff.block_gradient(i, &joint);
            }
            let g = g * (-1.0 / window as f64);
            Ok(projected_gradient(&game.bodies[i], etas[i], &g, x)?.norm())
        })
        .collect()
}

/// The smoothed-local-equilibrium certificate at round `t`, `w ≤ t ≤ T`.
pub fn check_equilibrium(
    history: &[Vec<Point>],
    game: &GameSpec,
    etas: &[f64],
    window: usize,
    round: usize,
) -> Result<EquilibriumReport> {
    if round < window || round > history.len() {
        return Err(Error::invalid(format!(
            "round {round} outside {window}..={}",
            history.len()
        )));
    }
    let norms = certificate_norms(history, game, etas, window, round)?;
    let epsilon = norms.iter().copied().fold(0.0, f64::max);
    Ok(EquilibriumReport {
        round,
        norms,
        epsilon,
        theorem_bound: None,
    })
}

/// The round in `[w, T]` minimizing the certificate; needs `T > w`.
pub fn best_equilibrium_round(
    history: &[Vec<Point>],
    game: &GameSpec,
    etas: &[f64],
    window: usize,
) -> Result<EquilibriumReport> {
    if history.len() <= window {
        return Err(Error::Precondition(format!(
            "need T > w, got T = {}, w = {window}",
            history.len()
        )));
    }
    let mut best: Option<EquilibriumReport> = None;
    for t in window..=history.len() {
        let r = check_equilibrium(history, game, etas, window, t)?;
        if best.as_ref().is_none_or(|b| r.epsilon < b.epsilon) {
            best = Some(r);
        }
    }
    Ok(best.expect("range is non-empty"))
}

/// `f₀(x, y) = ⟨x, y⟩ = −f₁(x, y)` on `[−r, r]ⁿ × [−r, r]ⁿ`.
#[derive(Clone, Debug)]
pub struct Bilinear {
    pub dim: usize,
    pub half_width: f64,
}

impl JointPayoff for Bilinear {
    fn players(&self) -> usize {
        2
    }

    fn block_dim(&self, _player: usize) -> usize {
        self.dim
    }

    fn payoff(&self, player: usize, joint: &[DVector<f64>]) -> f64 {
        let v = joint[0].dot(&joint[1]);
        if player == 0 {
            v
        } else {
            -v
        }
    }

    fn block_gradient(&self, player: usize, joint: &[DVector<f64>]) -> DVector<f64> {
        if player == 0 {
            joint[1].clone()
        } else {
            -&joint[0]
        }
    }

    fn block_hessian(&self, _player: usize, _joint: &[DVector<f64>]) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(self.dim, self.dim))
    }

    fn domain(&self, _player: usize) -> Domain {
        Domain::Cube {
            half_width: self.half_width,
        }
    }
}

/// The zero-sum bilinear game on `[−r, r]ⁿ` per player, started at
/// `(r/2·𝟙, −r/2·𝟙)`.
pub fn bilinear_game(dim: usize, half_width: f64) -> Result<GameSpec> {
    let body = ConvexBody::cube(dim, half_width)?;
    let r = half_width;
    let n = dim as f64;
    // induced losses ∓⟨x, y⟩: |·| ≤ n r², gradient norm ≤ r √n, affine
    let constants = Constants::new(n * r * r, r * n.sqrt(), 0.0).with_hessian_lipschitz(0.0);
    Ok(GameSpec {
        name: "bilinear".into(),
        payoff: Arc::new(Bilinear { dim, half_width }),
        bodies: vec![body.clone(), body],
        constants: vec![constants; 2],
        starts: vec![
            Point::new(vec![0.5 * r; dim])?,
            Point::new(vec![-0.5 * r; dim])?,
        ],
    })
}

/// Scalar GAN: the real data is a point mass at `target`, the generator
/// emits `θ_G` and the discriminator is `D(z) = σ(θ_D z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyGanParams {
    pub target: f64,
    /// `|θ_D| ≤ disc_bound`.
    pub disc_bound: f64,
    /// `|θ_G| ≤ gen_bound`.
    pub gen_bound: f64,
    pub disc_start: f64,
    pub gen_start: f64,
}

impl Default for ToyGanParams {
    fn default() -> Self {
        ToyGanParams {
            target: 1.0,
            disc_bound: 2.0,
            gen_bound: 2.0,
            disc_start: 1.0,
            gen_start: -1.0,
        }
    }
}

/// `sup |σ''|` rounded up.
const SIGMOID_CURVATURE: f64 = 0.0963;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log σ(z)` without overflow.
fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// `L(θ_D, θ_G) = log σ(θ_D μ) + log σ(−θ_D θ_G)`; the discriminator's
/// payoff is `L`, the generator's is `−L`.
#[derive(Clone, Debug)]
pub struct ToyGan {
    pub params: ToyGanParams,
}

impl ToyGan {
    pub fn objective(&self, disc: f64, gen: f64) -> f64 {
        log_sigmoid(disc * self.params.target) + log_sigmoid(-disc * gen)
    }

    /// `(∂L/∂θ_D, ∂L/∂θ_G)`.
    pub fn objective_gradient(&self, disc: f64, gen: f64) -> (f64, f64) {
        let mu = self.params.target;
        let s = sigmoid(disc * gen);
        (mu * sigmoid(-disc * mu) - gen * s, -disc * s)
    }

    /// `(∂²L/∂θ_D², ∂²L/∂θ_G²)`.
    pub fn objective_curvature(&self, disc: f64, gen: f64) -> (f64, f64) {
        let mu = self.params.target;
        let d1 = |z: f64| sigmoid(z) * (1.0 - sigmoid(z));
        (
            -mu * mu * d1(disc * mu) - gen * gen * d1(disc * gen),
            -disc * disc * d1(disc * gen),
        )
    }
}

impl JointPayoff for ToyGan {
    fn players(&self) -> usize {
        2
    }

    fn block_dim(&self, _player: usize) -> usize {
        1
    }

    fn payoff(&self, player: usize, joint: &[DVector<f64>]) -> f64 {
        let v = self.objective(joint[0][0], joint[1][0]);
        if player == 0 {
            v
        } else {
            -v
        }
    }

    fn block_gradient(&self, player: usize, joint: &[DVector<f64>]) -> DVector<f64> {
        let (gd, gg) = self.objective_gradient(joint[0][0], joint[1][0]);
        DVector::from_element(1, if player == 0 { gd } else { -gg })
    }

    fn block_hessian(&self, player: usize, joint: &[DVector<f64>]) -> Option<DMatrix<f64>> {
        let (hd, hg) = self.objective_curvature(joint[0][0], joint[1][0]);
        Some(DMatrix::from_element(1, 1, if player == 0 { hd } else { -hg }))
    }

    fn domain(&self, player: usize) -> Domain {
        Domain::Cube {
            half_width: if player == 0 {
                self.params.disc_bound
            } else {
                self.params.gen_bound
            },
        }
    }
}

/// The two-player scalar GAN on `[−a, a] × [−b, b]`.
pub fn toy_gan_game(params: ToyGanParams) -> Result<GameSpec> {
    let ToyGanParams {
        target: mu,
        disc_bound: a,
        gen_bound: b,
        ..
    } = params;
    for (name, v) in [("disc_bound", a), ("gen_bound", b)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if !mu.is_finite() {
        return Err(Error::invalid("target must be finite"));
    }
    let m = mu.abs();
    let bound = (1.0 + (a * m).exp()).ln() + (1.0 + (a * b).exp()).ln();
    let disc = Constants::new(bound, m + b, (m * m + b * b) / 4.0)
        .with_hessian_lipschitz(SIGMOID_CURVATURE * (m.powi(3) + b.powi(3)));
    let gen = Constants::new(bound, a, a * a / 4.0).with_hessian_lipschitz(SIGMOID_CURVATURE * a.powi(3));
    let spec = GameSpec {
        name: "toy_gan".into(),
        payoff: Arc::new(ToyGan { params }),
        bodies: vec![ConvexBody::cube(1, a)?, ConvexBody::cube(1, b)?],
        constants: vec![disc, gen],
        starts: vec![
            Point::new(vec![params.disc_start])?,
            Point::new(vec![params.gen_start])?,
        ],
    };
    for (i, s) in spec.starts.iter().enumerate() {
        if !spec.bodies[i].contains(s, crate::geometry::MEMBERSHIP_TOL) {
            return Err(Error::Precondition(format!("player {i} starts outside its box")));
        }
    }
    Ok(spec)
}
