//! Convex decision sets and the `(K, η)`-projected gradient.
//!
//! For a closed convex body `K`, a step size `η > 0` and a differentiable
//! `f`, the projected gradient is
//!
//! ```text
//! ∇_{K,η} f(x) = (x − Π_K[x − η∇f(x)]) / η
//! ```
//!
//! so that `x − η∇_{K,η} f(x)` is exactly one projected gradient step. On
//! `K = Rⁿ` it coincides with `∇f(x)`; on the boundary it drops the
//! outward-pointing part of the gradient.
//!
//! Only bodies with closed-form projections are supported, so projection
//! error never leaks into bound checks.

use std::fmt;
use std::ops::Deref;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::Loss;

/// Tolerance for the `x ∈ K` precondition.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A finite point of `Rⁿ`; the learner's decision.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct Point(DVector<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("a point needs at least one coordinate"));
        }
        if let Some(bad) = v.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("point coordinate {bad}")));
        }
        Ok(Point(v))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(DVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }
}

impl Deref for Point {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Point").field(&self.0.as_slice()).finish()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Vec<f64> {
        p.to_vec()
    }
}

impl TryFrom<DVector<f64>> for Point {
    type Error = Error;

    fn try_from(v: DVector<f64>) -> Result<Self> {
        Point::from_vector(v)
    }
}

/// A closed convex set with an exact orthogonal projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexBody {
    Unconstrained {
        dim: usize,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
}

impl ConvexBody {
    pub fn unconstrained(dim: usize) -> Result<Self> {
        let body = ConvexBody::Unconstrained { dim };
        body.validate()?;
        Ok(body)
    }

    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let body = ConvexBody::Box { lower, upper };
        body.validate()?;
        Ok(body)
    }

    /// The cube `[−r, r]ⁿ`.
    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::new_box(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let body = ConvexBody::Ball { center, radius };
        body.validate()?;
        Ok(body)
    }

    /// Checks the structural invariants. Bodies built through serde skip the
    /// constructors, so the harness calls this after loading a config.
    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexBody::Unconstrained { dim } => {
                if *dim == 0 {
                    return Err(Error::invalid("body dimension must be at least 1"));
                }
            }
            ConvexBody::Box { lower, upper } => {
                if lower.is_empty() {
                    return Err(Error::invalid("box dimension must be at least 1"));
                }
                Error::check_dim(lower.len(), upper.len())?;
                for (i, (lo, hi)) in lower.iter().zip(upper).enumerate() {
                    if !lo.is_finite() || !hi.is_finite() {
                        return Err(Error::invalid(format!("box bound {i} is not finite")));
                    }
                    if lo > hi {
                        return Err(Error::invalid(format!(
                            "box requires lower <= upper, but coordinate {i} has {lo} > {hi}"
                        )));
                    }
                }
            }
            ConvexBody::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(Error::invalid("ball dimension must be at least 1"));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("ball center is not finite"));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::invalid(format!(
                        "ball radius must be positive and finite, got {radius}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Unconstrained { dim } => *dim,
            ConvexBody::Box { lower, .. } => lower.len(),
            ConvexBody::Ball { center, .. } => center.len(),
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        matches!(self, ConvexBody::Unconstrained { .. })
    }

    /// Largest sup-norm of a point in the body, `None` when unbounded.
    pub fn sup_extent(&self) -> Option<f64> {
        match self {
            ConvexBody::Unconstrained { .. } => None,
            ConvexBody::Box { lower, upper } => Some(
                lower
                    .iter()
                    .chain(upper)
                    .fold(0.0_f64, |acc, b| acc.max(b.abs())),
            ),
            ConvexBody::Ball { center, radius } => Some(
                center
                    .iter()
                    .fold(0.0_f64, |acc, c| acc.max(c.abs() + radius)),
            ),
        }
    }

    /// A canonical interior point: the origin, the box midpoint or the ball
    /// center.
    pub fn center(&self) -> Point {
        match self {
            ConvexBody::Unconstrained { dim } => Point::zeros(*dim),
            ConvexBody::Box { lower, upper } => Point(DVector::from_iterator(
                lower.len(),
                lower.iter().zip(upper).map(|(lo, hi)| 0.5 * (lo + hi)),
            )),
            ConvexBody::Ball { center, .. } => Point(DVector::from_column_slice(center)),
        }
    }

    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Error::check_dim(self.dim(), x.len())?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ConvexBody::Unconstrained { .. } => x.clone(),
            ConvexBody::Box { lower, upper } => DVector::from_iterator(
                x.len(),
                x.iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(xi, (lo, hi))| xi.clamp(*lo, *hi)),
            ),
            ConvexBody::Ball { center, radius } => {
                let c = DVector::from_column_slice(center);
                let offset = x - &c;
                let dist = offset.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    c + offset * (*radius / dist)
                }
            }
        }
    }

    /// Euclidean distance from `x` to the body.
    pub fn distance(&self, x: &DVector<f64>) -> Result<f64> {
        Ok((x - self.project(x)?).norm())
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim() && (x - self.project_unchecked(x)).norm() <= tol
    }
}

/// `∇_{K,η} f(x)` together with the step scale it was computed at.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedGradient {
    pub value: DVector<f64>,
    pub eta: f64,
}

impl ProjectedGradient {
    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.value.norm_squared()
    }
}

/// Computes `(x − Π_K[x − η·grad]) / η`, checking that `x` lies in the body.
pub fn projected_gradient(
    body: &ConvexBody,
    eta: f64,
    grad: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<ProjectedGradient> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    Error::check_dim(body.dim(), x.len())?;
    Error::check_dim(body.dim(), grad.len())?;
    let dist = body.distance(x)?;
    if dist > MEMBERSHIP_TOL {
        return Err(Error::Precondition(format!(
            "x lies outside the body (distance {dist:e})"
        )));
    }
    Ok(projected_gradient_unchecked(body, eta, grad, x))
}

/// Same as [`projected_gradient`] without the membership and dimension
/// checks; used inside the learners' inner loops.
pub(crate) fn projected_gradient_unchecked(
    body: &ConvexBody,
    eta: f64,
    grad: &DVector<f64>,
    x: &DVector<f64>,
) -> ProjectedGradient {
    let value = if body.is_unconstrained() {
        grad.clone()
    } else {
        let stepped = body.project_unchecked(&(x - grad * eta));
        (x - stepped) / eta
    };
    ProjectedGradient { value, eta }
}

/// Result of [`find_stationary_point`].
#[derive(Clone, Debug)]
pub enum StationarySearch {
    Converged {
        point: Point,
        pg_norm: f64,
        iterations: u64,
    },
    /// The iteration budget ran out; carries the iterate with the smallest
    /// projected-gradient norm seen.
    BudgetExhausted {
        best: Point,
        best_pg_norm: f64,
        iterations: u64,
    },
}

impl StationarySearch {
    pub fn point(&self) -> &Point {
        match self {
            StationarySearch::Converged { point, .. } => point,
            StationarySearch::BudgetExhausted { best, .. } => best,
        }
    }

    pub fn pg_norm(&self) -> f64 {
        match self {
            StationarySearch::Converged { pg_norm, .. } => *pg_norm,
            StationarySearch::BudgetExhausted { best_pg_norm, .. } => *best_pg_norm,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, StationarySearch::Converged { .. })
    }
}

pub const DEFAULT_STATIONARY_MAX_ITERS: u64 = 10_000_000;

/// Projected gradient descent from `start` until `‖∇_{K,η} f(x)‖ ≤ tol`.
///
/// With `η ≤ 1/β` every step decreases `f` by at least
/// `(η − βη²/2)‖∇_{K,η} f‖²`, so on a body where `f` is bounded the search
/// terminates; the budget guards against mis-declared constants.
pub fn find_stationary_point(
    body: &ConvexBody,
    f: &dyn Loss,
    start: &Point,
    eta: f64,
    tol: f64,
    max_iters: u64,
) -> Result<StationarySearch> {
    Error::check_dim(body.dim(), f.dim())?;
    Error::check_dim(body.dim(), start.dim())?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(format!("tol must be positive, got {tol}")));
    }
    let beta = f.constants().smoothness;
    if beta > 0.0 && eta > 1.0 / beta * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "eta = {eta} exceeds 1/beta = {}",
            1.0 / beta
        )));
    }
    let mut x = body.project(start)?;
    let mut best = x.clone();
    let mut best_norm = f64::INFINITY;
    for iterations in 0..=max_iters {
        let pg = projected_gradient(body, eta, &f.gradient(&x), &x)?;
        let norm = pg.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite("projected gradient norm".into()));
        }
        if norm < best_norm {
            best_norm = norm;
            best.copy_from(&x);
        }
        if norm <= tol {
            return Ok(StationarySearch::Converged {
                point: Point::from_vector(x)?,
                pg_norm: norm,
                iterations,
            });
        }
        if iterations == max_iters {
            break;
        }
        x = body.project_unchecked(&(&x - pg.value * eta));
    }
    Ok(StationarySearch::BudgetExhausted {
        best: Point::from_vector(best)?,
        best_pg_norm: best_norm,
        iterations: max_iters,
    })
}
