//! Online non-convex optimization with local regret.
//!
//! The crate is organised around the quantities a learner is judged by:
//!
//! - [`geometry`]: convex decision sets, exact projections and the
//!   `(K, η)`-projected gradient.
//! - [`losses`]: loss oracles with declared regularity constants, the
//!   sliding-window average `F_{t,w}`, stochastic gradient oracles and a
//!   catalog of builtin test functions.
//! - [`minimizers`]: time-smoothed online gradient descent (exact and
//!   stochastic), the time-smoothed online Newton method, and the
//!   local-regret / Φ-potential bookkeeping.
//! - [`adversary`]: the randomized oblivious loss sequence that forces
//!   `Ω(T/w²)` local regret on any learner.
//! - [`games`]: k-player time-smoothed game simulation and the smoothed
//!   local equilibrium certificate.
//! - [`harness`]: configuration, seeded experiment runs, traces, summaries
//!   and the bound checker behind the `localregret` CLI.
//!
//! Monte-Carlo sweeps over seeds go through [`parallel::Execution`], which is
//! rayon-backed when the `parallel` feature is enabled (the default) and
//! falls back to a plain sequential loop otherwise.

pub mod adversary;
pub mod bounds;
pub mod error;
pub mod games;
pub mod geometry;
pub mod harness;
pub mod losses;
pub mod minimizers;
pub mod parallel;

pub use error::{Error, Result};
pub use geometry::{ConvexBody, Point, ProjectedGradient};
pub use losses::{Constants, Domain, Loss, LossFunction, WindowAverage};
