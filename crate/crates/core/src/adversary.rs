//! Randomized oblivious adversary forcing `Ω(T/w²)` local regret.
//!
//! Play on `K = [−1, 1]` is cut into `⌊T/(2w)⌋` segments of `2w` rounds. In
//! the first half of a segment, odd positions draw `±x` with equal
//! probability and each even position negates its predecessor; the second
//! half and the trailing `T mod 2w` rounds are zero. At every random round
//! the window average equals `f_t/w`, since older terms cancel in pairs or
//! vanish.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::losses::{builtin_loss_on, Constants, LossFunction, ZeroLoss};

/// One round's loss on `[−1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryLoss {
    /// `f(x) = x`.
    Plus,
    /// `f(x) = −x`.
    Minus,
    Zero,
}

impl AdversaryLoss {
    /// Slope of the loss.
    pub fn slope(self) -> f64 {
        match self {
            AdversaryLoss::Plus => 1.0,
            AdversaryLoss::Minus => -1.0,
            AdversaryLoss::Zero => 0.0,
        }
    }

    fn negated(self) -> Self {
        match self {
            AdversaryLoss::Plus => AdversaryLoss::Minus,
            AdversaryLoss::Minus => AdversaryLoss::Plus,
            AdversaryLoss::Zero => AdversaryLoss::Zero,
        }
    }
}

/// Constants every adversary loss satisfies on `[−1, 1]`.
pub const ADVERSARY_CONSTANTS: Constants = Constants {
    bound: 1.0,
    lipschitz: 1.0,
    smoothness: 0.0,
    hessian_lipschitz: Some(0.0),
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarySequence {
    pub horizon: usize,
    pub window: usize,
    pub seed: u64,
    /// `rounds[t − 1]` is `f_t`.
    pub rounds: Vec<AdversaryLoss>,
    /// Whether round `t` was drawn at random.
    pub random: Vec<bool>,
}

impl AdversarySequence {
    /// The decision set `[−1, 1]`.
    pub fn body() -> ConvexBody {
        ConvexBody::cube(1, 1.0).expect("unit interval is a valid body")
    }

    pub fn segments(&self) -> usize {
        self.horizon / (2 * self.window)
    }

    /// 1-based indices of the randomly drawn rounds.
    pub fn random_rounds(&self) -> impl Iterator<Item = usize> + '_ {
        self.random
            .iter()
            .enumerate()
            .filter(|(_, r)| **r)
            .map(|(i, _)| i + 1)
    }

    /// The sequence as loss oracles with `M = 1`, `L = 1`, `β = 0`.
    pub fn to_losses(&self) -> Vec<LossFunction> {
        let plus = builtin_loss_on("linear", &[1.0], 1, 1.0).expect("linear builtin exists");
        let minus = builtin_loss_on("linear", &[-1.0], 1, 1.0).expect("linear builtin exists");
        let zero: LossFunction = Arc::new(ZeroLoss::with_constants(1, ADVERSARY_CONSTANTS));
        self.rounds
            .iter()
            .map(|r| match r {
                AdversaryLoss::Plus => plus.clone(),
                AdversaryLoss::Minus => minus.clone(),
                AdversaryLoss::Zero => zero.clone(),
            })
            .collect()
    }

    /// `(1/(4w))·⌊T/(2w)⌋`.
    pub fn expected_lower_bound(&self) -> f64 {
        bounds::adversary_lower_bound(self.horizon, self.window)
    }
}

/// Draws the hard sequence for horizon `T` and window `w`, `1 ≤ w ≤ T`.
pub fn generate(horizon: usize, window: usize, seed: u64) -> Result<AdversarySequence> {
    if window == 0 || window > horizon {
        return Err(Error::invalid(format!(
            "adversary needs 1 <= w <= T, got w = {window}, T = {horizon}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rounds = vec![AdversaryLoss::Zero; horizon];
    let mut random = vec![false; horizon];
    let segment = 2 * window;
    for start in (0..horizon / segment).map(|s| s * segment) {
        for pos in 0..window {
            // pos is 0-based, so even pos is an odd position in the segment
            let t = start + pos;
            if pos % 2 == 0 {
                rounds[t] = if rng.random_bool(0.5) {
                    AdversaryLoss::Plus
                } else {
                    AdversaryLoss::Minus
                };
                random[t] = true;
            } else {
                rounds[t] = rounds[t - 1].negated();
            }
        }
    }
    Ok(AdversarySequence {
        horizon,
        window,
        seed,
        rounds,
        random,
    })
}

/// `(1/(4w))·⌊T/(2w)⌋`, the expected local regret every learner suffers.
pub fn expected_lower_bound(horizon: usize, window: usize) -> Result<f64> {
    if window == 0 || window > horizon {
        return Err(Error::invalid(format!(
            "lower bound needs 1 <= w <= T, got w = {window}, T = {horizon}"
        )));
    }
    Ok(bounds::adversary_lower_bound(horizon, window))
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;
    use rand::Rng;

    use super::*;
    use crate::geometry::projected_gradient;
    use crate::losses::{OracleCalls, WindowAverage};
    use AdversaryLoss::*;

    #[test]
    fn unit_window_alternates_random_and_zero() {
        let s = generate(4, 1, 7).unwrap();
        assert_eq!(s.random, vec![true, false, true, false]);
        assert_eq!(s.rounds[1], Zero);
        assert_eq!(s.rounds[3], Zero);
        assert_ne!(s.rounds[0], Zero);
        assert_ne!(s.rounds[2], Zero);
    }

    #[test]
    fn window_two_unrolls_by_hand() {
        for seed in 0..20 {
            let s = generate(8, 2, seed).unwrap();
            assert_eq!(s.segments(), 2);
            assert_eq!(s.random_rounds().collect::<Vec<_>>(), vec![1, 5]);
            assert_eq!(s.rounds[1].slope(), -s.rounds[0].slope());
            assert_eq!(s.rounds[5].slope(), -s.rounds[4].slope());
            assert_eq!(&s.rounds[2..4], &[Zero, Zero]);
            assert_eq!(&s.rounds[6..8], &[Zero, Zero]);
        }
    }

    #[test]
    fn trailing_rounds_are_zero_padded() {
        let s = generate(11, 2, 3).unwrap();
        assert_eq!(&s.rounds[8..], &[Zero, Zero, Zero]);
        assert!(s.random[8..].iter().all(|r| !r));
    }

    #[test]
    fn at_least_half_a_window_of_random_rounds_per_segment() {
        for w in 1..=12 {
            let s = generate(10 * w + 3, w, w as u64).unwrap();
            for seg in 0..s.segments() {
                let count = s.random[seg * 2 * w..(seg + 1) * 2 * w]
                    .iter()
                    .filter(|r| **r)
                    .count();
                assert!(2 * count >= w, "w = {w}: {count} random rounds");
            }
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        assert_eq!(generate(50, 3, 9).unwrap(), generate(50, 3, 9).unwrap());
        assert_ne!(
            generate(200, 1, 9).unwrap().rounds,
            generate(200, 1, 10).unwrap().rounds
        );
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(expected_lower_bound(2, 1).unwrap(), 0.25);
        assert_eq!(expected_lower_bound(100, 5).unwrap(), 0.5);
        assert_eq!(expected_lower_bound(9, 5).unwrap(), 0.0);
        assert!(expected_lower_bound(3, 4).is_err());
        assert!(generate(3, 0, 0).is_err());
    }

    #[test]
    fn window_average_is_the_current_loss_over_w_at_random_rounds() {
        for w in 1..=6 {
            let s = generate(9 * w, w, 11).unwrap();
            let mut window = WindowAverage::new(w, 1).unwrap();
            let mut calls = OracleCalls::default();
            for (t, f) in s.to_losses().into_iter().enumerate() {
                window.push(f).unwrap();
                if s.random[t] {
                    // symbolic: the slopes in the window sum to the current slope
                    let lo = (t + 1).saturating_sub(w);
                    let total: f64 = s.rounds[lo..=t].iter().map(|r| r.slope()).sum();
                    assert_eq!(total, s.rounds[t].slope());
                    for x in [-1.0, -0.3, 0.0, 0.8] {
                        let x = DVector::from_element(1, x);
                        let v = window.value(&x, &mut calls).unwrap();
                        let expected = s.rounds[t].slope() * x[0] / w as f64;
                        assert!((v - expected).abs() <= 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn losses_satisfy_declared_constants() {
        let s = generate(20, 2, 1).unwrap();
        for f in s.to_losses() {
            let c = f.constants();
            assert!(c.bound <= 1.0 && c.lipschitz <= 1.0 && c.smoothness == 0.0);
        }
    }

    #[test]
    fn random_rounds_have_unit_projected_gradient_half_the_time() {
        let body = AdversarySequence::body();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 10_000;
        let mut unit = 0;
        for i in 0..draws {
            let x: f64 = rng.random_range(-1.0..=1.0);
            let eta: f64 = rng.random_range(0.01..=1.0);
            let s = generate(2, 1, i).unwrap();
            let g = DVector::from_element(1, s.rounds[0].slope());
            let pg = projected_gradient(&body, eta, &g, &DVector::from_element(1, x)).unwrap();
            if (pg.norm() - 1.0).abs() < 1e-12 {
                unit += 1;
            }
        }
        let rate = unit as f64 / draws as f64;
        assert!(rate >= 0.5 - 0.02, "rate {rate}");
    }
}
