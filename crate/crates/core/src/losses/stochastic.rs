use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LossFunction;
use crate::error::{Error, Result};

/// Unbiased noisy gradients of `base` with `E‖noise‖² = σ²`.
///
/// Noise is isotropic Gaussian with per-coordinate variance `σ²/n`. The
/// stream is a seeded ChaCha generator, so two oracles with the same
/// `(seed, stream)` produce identical samples.
#[derive(Clone, Debug)]
pub struct StochasticGradientOracle {
    base: LossFunction,
    sigma: f64,
    seed: u64,
    rng: ChaCha8Rng,
    samples: u64,
}

impl StochasticGradientOracle {
    pub fn new(base: LossFunction, sigma: f64, seed: u64) -> Result<Self> {
        Self::with_stream(base, sigma, seed, 0)
    }

    pub fn with_stream(base: LossFunction, sigma: f64, seed: u64, stream: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(StochasticGradientOracle {
            base,
            sigma,
            seed,
            rng,
            samples: 0,
        })
    }

    /// An independent oracle for the same loss on a derived stream.
    pub fn fork(&self, stream: u64) -> Self {
        Self::with_stream(self.base.clone(), self.sigma, self.seed, stream)
            .expect("sigma already validated")
    }

    pub fn base(&self) -> &LossFunction {
        &self.base
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Samples drawn so far.
    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// One fresh sample `∇f(x) + ξ`.
    pub fn sample(&mut self, x: &DVector<f64>) -> DVector<f64> {
        self.samples += 1;
        let mut g = self.base.gradient(x);
        if self.sigma > 0.0 {
            let scale = self.sigma / (g.len() as f64).sqrt();
            for gi in g.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                *gi += scale * z;
            }
        }
        g
    }
}
