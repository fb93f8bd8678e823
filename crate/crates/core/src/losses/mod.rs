//! Loss oracles, the sliding-window average and stochastic gradient oracles.

mod builtin;
mod stochastic;
mod window;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexBody;

pub use builtin::{
    builtin_loss, builtin_loss_on, default_half_width, make_builtin, random_builtin_sequence,
    Builtin, BuiltinKind, BUILTINS,
};
pub use stochastic::StochasticGradientOracle;
pub use window::{WindowAverage, WindowEval};

/// Regularity constants a loss declares on its [`Domain`].
///
/// `bound` is `M` (|f| ≤ M), `lipschitz` is `L`, `smoothness` is `β` (the
/// gradient is β-Lipschitz) and `hessian_lipschitz` is `L₂`, present only
/// for losses with a Hessian oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub bound: f64,
    pub lipschitz: f64,
    pub smoothness: f64,
    pub hessian_lipschitz: Option<f64>,
}

impl Constants {
    pub const ZERO: Constants = Constants {
        bound: 0.0,
        lipschitz: 0.0,
        smoothness: 0.0,
        hessian_lipschitz: Some(0.0),
    };

    pub fn new(bound: f64, lipschitz: f64, smoothness: f64) -> Self {
        Constants {
            bound,
            lipschitz,
            smoothness,
            hessian_lipschitz: None,
        }
    }

    pub fn with_hessian_lipschitz(mut self, l2: f64) -> Self {
        self.hessian_lipschitz = Some(l2);
        self
    }

    /// Coordinatewise maximum; `L₂` survives only if both sides declare it.
    pub fn max(self, other: Constants) -> Constants {
        Constants {
            bound: self.bound.max(other.bound),
            lipschitz: self.lipschitz.max(other.lipschitz),
            smoothness: self.smoothness.max(other.smoothness),
            hessian_lipschitz: match (self.hessian_lipschitz, other.hessian_lipschitz) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            },
        }
    }

    /// Uniform constants for a whole loss sequence.
    pub fn uniform<'a>(losses: impl IntoIterator<Item = &'a LossFunction>) -> Constants {
        losses
            .into_iter()
            .fold(Constants::ZERO, |acc, f| acc.max(f.constants()))
    }
}

/// Region on which a loss's declared constants are valid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Everywhere,
    /// The cube `[−half_width, half_width]ⁿ`.
    Cube { half_width: f64 },
}

impl Domain {
    /// Whether the constants hold on every point of `body`.
    pub fn covers(&self, body: &ConvexBody) -> bool {
        match (self, body.sup_extent()) {
            (Domain::Everywhere, _) => true,
            (Domain::Cube { .. }, None) => false,
            (Domain::Cube { half_width }, Some(extent)) => extent <= half_width + 1e-12,
        }
    }

    pub fn intersect(self, other: Domain) -> Domain {
        match (self, other) {
            (Domain::Everywhere, d) | (d, Domain::Everywhere) => d,
            (Domain::Cube { half_width: a }, Domain::Cube { half_width: b }) => Domain::Cube {
                half_width: a.min(b),
            },
        }
    }
}

/// A first- (optionally second-) order oracle for one loss `f_t`.
pub trait Loss: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    fn has_hessian(&self) -> bool {
        false
    }

    fn constants(&self) -> Constants;

    fn domain(&self) -> Domain {
        Domain::Everywhere
    }
}

/// Shared handle to a loss; the window keeps these so past losses can be
/// re-evaluated at new points.
pub type LossFunction = Arc<dyn Loss>;

/// Per-kind oracle call counters. One gradient call is one `(f, x)`
/// gradient evaluation of a single member loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCalls {
    pub value: u64,
    pub gradient: u64,
    pub hessian: u64,
    pub stochastic: u64,
}

impl OracleCalls {
    pub fn total(&self) -> u64 {
        self.value + self.gradient + self.hessian + self.stochastic
    }
}

impl std::ops::AddAssign for OracleCalls {
    fn add_assign(&mut self, rhs: OracleCalls) {
        self.value += rhs.value;
        self.gradient += rhs.gradient;
        self.hessian += rhs.hessian;
        self.stochastic += rhs.stochastic;
    }
}

/// The identically zero loss; pads rounds with no adversarial cost.
#[derive(Clone, Debug)]
pub struct ZeroLoss {
    dim: usize,
    constants: Constants,
}

impl ZeroLoss {
    pub fn new(dim: usize) -> Self {
        ZeroLoss {
            dim,
            constants: Constants::ZERO,
        }
    }

    /// A zero loss reporting looser constants, so it can sit in a sequence
    /// whose members share uniform declared constants.
    pub fn with_constants(dim: usize, constants: Constants) -> Self {
        ZeroLoss { dim, constants }
    }
}

impl Loss for ZeroLoss {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &DVector<f64>) -> f64 {
        0.0
    }

    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.dim)
    }

    fn hessian(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(self.dim, self.dim))
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn constants(&self) -> Constants {
        self.constants
    }
}

type ValueFn = Box<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type GradientFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type HessianFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A loss assembled from closures, for user-defined objectives.
pub struct FnLoss {
    name: String,
    dim: usize,
    value: ValueFn,
    gradient: GradientFn,
    hessian: Option<HessianFn>,
    constants: Constants,
    domain: Domain,
}

impl FnLoss {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        constants: Constants,
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        FnLoss {
            name: name.into(),
            dim,
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian: None,
            constants,
            domain: Domain::Everywhere,
        }
    }

    pub fn with_hessian(
        mut self,
        hessian: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Box::new(hessian));
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn into_shared(self) -> LossFunction {
        Arc::new(self)
    }
}

impl fmt::Debug for FnLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnLoss")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

impl Loss for FnLoss {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.hessian.as_ref().map(|h| h(x))
    }

    fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn domain(&self) -> Domain {
        self.domain
    }
}

/// Checks that every loss has dimension `dim` and declares constants valid
/// on `body`.
pub fn check_sequence_on(losses: &[LossFunction], body: &ConvexBody) -> Result<()> {
    for (t, f) in losses.iter().enumerate() {
        Error::check_dim(body.dim(), f.dim())?;
        if !f.domain().covers(body) {
            return Err(Error::Precondition(format!(
                "loss {} ({f:?}) declares constants on {:?}, which does not cover the body",
                t + 1,
                f.domain()
            )));
        }
    }
    Ok(())
}
