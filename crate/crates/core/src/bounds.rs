//! Closed-form regret, step-count and equilibrium bounds.

/// Per-round cost bound of time-smoothed OGD: `((δ + 2L)/w)²`.
pub fn tsogd_cost_bound(delta: f64, lipschitz: f64, w: usize) -> f64 {
    ((delta + 2.0 * lipschitz) / w as f64).powi(2)
}

/// Local-regret bound of time-smoothed OGD: `(δ + 2L)² T / w²`.
pub fn tsogd_regret_bound(delta: f64, lipschitz: f64, horizon: usize, w: usize) -> f64 {
    horizon as f64 * tsogd_cost_bound(delta, lipschitz, w)
}

/// Per-step guaranteed decrease `η − βη²/2`.
pub fn descent_factor(eta: f64, smoothness: f64) -> f64 {
    eta - 0.5 * smoothness * eta * eta
}

/// Total inner-step bound of time-smoothed OGD:
/// `M / (δ²(η − βη²/2)) · (2Tw + w²)`.
pub fn tsogd_step_bound(
    bound: f64,
    smoothness: f64,
    eta: f64,
    delta: f64,
    horizon: usize,
    w: usize,
) -> f64 {
    let (t, w) = (horizon as f64, w as f64);
    bound / (delta * delta * descent_factor(eta, smoothness)) * (2.0 * t * w + w * w)
}

/// Window achieving mean tail cost `ε` for identical losses:
/// `w = (δ + 2L)·√(2/ε)` (rounded up by callers).
pub fn offline_window(delta: f64, lipschitz: f64, epsilon: f64) -> f64 {
    (delta + 2.0 * lipschitz) * (2.0 / epsilon).sqrt()
}

/// Expected local-regret bound with stochastic gradients at `η = 1/β`:
/// `(8βM + σ²) T / w`.
pub fn stochastic_regret_bound(
    smoothness: f64,
    bound: f64,
    sigma: f64,
    horizon: usize,
    w: usize,
) -> f64 {
    (8.0 * smoothness * bound + sigma * sigma) * horizon as f64 / w as f64
}

/// Window for the stochastic reduction: `w = (12Mβ + 2σ²)/ε`.
pub fn stochastic_window(bound: f64, smoothness: f64, sigma: f64, epsilon: f64) -> f64 {
    (12.0 * bound * smoothness + 2.0 * sigma * sigma) / epsilon
}

/// Stochastic samples consumed by `T` rounds with window `w` when rounds
/// `t ≤ 0` are zero-padded: `Σ_t min(t, w)`.
pub fn stochastic_sample_count(horizon: usize, w: usize) -> u64 {
    (1..=horizon).map(|t| t.min(w) as u64).sum()
}

/// Inflation of the eigenvalue term in the Newton per-round bound.
///
/// A played iterate satisfies `Φ_{t−1}(x_t) ≤ δ³/w³`, which bounds
/// `−λ_min(∇²F_{t−1}(x_t))` by `κ·δ/w` with `κ = (3L₂²/(4β))^{1/3}`. The
/// displayed bound uses `δ/w`, i.e. `κ = 1`; we take `max(1, κ)` so the bound
/// stays valid when `3L₂² > 4β` and coincides with the displayed expression
/// otherwise.
pub fn newton_eigen_inflation(smoothness: f64, hessian_lipschitz: f64) -> f64 {
    (3.0 * hessian_lipschitz * hessian_lipschitz / (4.0 * smoothness))
        .cbrt()
        .max(1.0)
}

/// Bound on a single `Φ_t(x_t)`:
/// `max{(δ^{3/2}/w^{3/2} + 2L/w)², (4β/(3L₂²))·(κδ/w + 2β/w)³}`.
pub fn newton_round_bound(
    delta: f64,
    lipschitz: f64,
    smoothness: f64,
    hessian_lipschitz: f64,
    w: usize,
) -> f64 {
    let w = w as f64;
    let grad = ((delta / w).powf(1.5) + 2.0 * lipschitz / w).powi(2);
    let kappa = newton_eigen_inflation(smoothness, hessian_lipschitz);
    let eig = 4.0 * smoothness / (3.0 * hessian_lipschitz * hessian_lipschitz)
        * ((kappa * delta + 2.0 * smoothness) / w).powi(3);
    grad.max(eig)
}

/// `C₁ = w² · newton_round_bound`, so that `Σ Φ_t(x_t) ≤ C₁·T/w²`.
pub fn newton_c1(
    delta: f64,
    lipschitz: f64,
    smoothness: f64,
    hessian_lipschitz: f64,
    w: usize,
) -> f64 {
    (w * w) as f64 * newton_round_bound(delta, lipschitz, smoothness, hessian_lipschitz, w)
}

/// `(2βM/δ³)·(2Tw² + w³)`.
pub fn newton_step_bound(bound: f64, smoothness: f64, delta: f64, horizon: usize, w: usize) -> f64 {
    let (t, w) = (horizon as f64, w as f64);
    2.0 * smoothness * bound / delta.powi(3) * (2.0 * t * w * w + w.powi(3))
}

/// `C₂·Tw²` with `C₂ = 6M/β²`; valid for `δ = β` and `T ≥ w`.
pub fn newton_step_bound_coarse(bound: f64, smoothness: f64, horizon: usize, w: usize) -> f64 {
    6.0 * bound / (smoothness * smoothness) * horizon as f64 * (w * w) as f64
}

/// Expected local regret any learner suffers on the adversarial sequence:
/// `(1/(4w))·⌊T/(2w)⌋`.
pub fn adversary_lower_bound(horizon: usize, w: usize) -> f64 {
    (horizon / (2 * w)) as f64 / (4.0 * w as f64)
}

/// Equilibrium accuracy guaranteed for some round in `[w, T]`:
/// `√(Σ_i R_i / (T − w))`.
pub fn equilibrium_bound(regrets: &[f64], horizon: usize, w: usize) -> f64 {
    assert!(horizon > w, "equilibrium bound needs T > w");
    (regrets.iter().sum::<f64>() / (horizon - w) as f64).sqrt()
}
