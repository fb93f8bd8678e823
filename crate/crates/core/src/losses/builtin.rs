//! Builtin test functions with analytically derived constants.
//!
//! Every builtin is evaluated on a declared cube `[−r, r]ⁿ` (or on all of
//! `Rⁿ` when its constants hold globally) and reports `M`, `L`, `β` and `L₂`
//! valid there.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{Constants, Domain, Loss, LossFunction};
use crate::error::{Error, Result};

/// `(name, parameter help, default cube half-width)`.
pub const BUILTINS: &[(&str, &str, f64)] = &[
    (
        "quadratic",
        "a‖x − c‖²; params [a=1] or [a, c] or [a, c_1..c_n]",
        1.0,
    ),
    (
        "negquadratic",
        "−a‖x − c‖²; params as quadratic",
        1.0,
    ),
    ("linear", "⟨c, x⟩; params [c=1] or [c_1..c_n]", 1.0),
    (
        "sine_mix",
        "Σ sin(k·x_i) + a·x_i²; params [k=3, a=0.5]; global constants when a = 0",
        2.0,
    ),
    (
        "rastrigin_smooth",
        "Σ x_i² + A(1 − cos(2πx_i)); params [A=0.1]",
        1.0,
    ),
    (
        "hidden_valley_demo",
        "s·Σx_i − d·exp(−‖x − c‖²/(2ρ²)), c = (r/2, …); params [s=0.2, d=1, ρ=0.1]",
        1.0,
    ),
];

/// max_s |s³ − 3s|·exp(−s²/2), rounded up.
const GAUSS_THIRD_DERIV_MAX: f64 = 1.3802;

#[derive(Clone, Debug, PartialEq)]
pub enum BuiltinKind {
    Quadratic { scale: f64, center: DVector<f64> },
    Linear { coef: DVector<f64> },
    SineMix { freq: f64, curvature: f64 },
    Rastrigin { amplitude: f64 },
    HiddenValley {
        slope: f64,
        depth: f64,
        width: f64,
        center: DVector<f64>,
    },
}

/// A builtin loss on `[−r, r]ⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Builtin {
    name: &'static str,
    kind: BuiltinKind,
    dim: usize,
    half_width: f64,
    constants: Constants,
    global: bool,
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn kind(&self) -> &BuiltinKind {
        &self.kind
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    fn build(name: &'static str, kind: BuiltinKind, dim: usize, r: f64) -> Self {
        let n = dim as f64;
        let (constants, global) = match &kind {
            BuiltinKind::Quadratic { scale, center } => {
                let reach = center
                    .iter()
                    .map(|c| (c.abs() + r).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let a = scale.abs();
                (
                    Constants::new(a * reach * reach, 2.0 * a * reach, 2.0 * a)
                        .with_hessian_lipschitz(0.0),
                    false,
                )
            }
            BuiltinKind::Linear { coef } => (
                Constants::new(r * coef.lp_norm(1), coef.norm(), 0.0).with_hessian_lipschitz(0.0),
                false,
            ),
            BuiltinKind::SineMix { freq, curvature } => {
                let k = freq.abs();
                let a = curvature.abs();
                let global = a == 0.0;
                let constants = if global {
                    Constants::new(n, k * n.sqrt(), k * k)
                } else {
                    Constants::new(
                        n * (1.0 + a * r * r),
                        n.sqrt() * (k + 2.0 * a * r),
                        k * k + 2.0 * a,
                    )
                };
                (constants.with_hessian_lipschitz(k.powi(3)), global)
            }
            BuiltinKind::Rastrigin { amplitude } => {
                let a = amplitude.abs();
                (
                    Constants::new(
                        n * (r * r + 2.0 * a),
                        n.sqrt() * (2.0 * r + 2.0 * PI * a),
                        2.0 + 4.0 * PI * PI * a,
                    )
                    .with_hessian_lipschitz(8.0 * PI.powi(3) * a),
                    false,
                )
            }
            BuiltinKind::HiddenValley {
                slope,
                depth,
                width,
                ..
            } => {
                let s = slope.abs();
                let d = depth.abs();
                (
                    Constants::new(
                        s * n * r + d,
                        s * n.sqrt() + d * (-0.5_f64).exp() / width,
                        d / (width * width),
                    )
                    .with_hessian_lipschitz(GAUSS_THIRD_DERIV_MAX * d / width.powi(3)),
                    false,
                )
            }
        };
        Builtin {
            name,
            kind,
            dim,
            half_width: r,
            constants,
            global,
        }
    }
}

fn canonical_name(name: &str) -> Option<&'static str> {
    BUILTINS.iter().map(|b| b.0).find(|b| *b == name)
}

/// Default cube half-width for a builtin.
pub fn default_half_width(name: &str) -> Result<f64> {
    BUILTINS
        .iter()
        .find(|b| b.0 == name)
        .map(|b| b.2)
        .ok_or_else(|| Error::UnknownBuiltin(name.to_string()))
}

/// Builtin `name` in dimension `n` on its default cube.
pub fn builtin_loss(name: &str, params: &[f64], n: usize) -> Result<LossFunction> {
    builtin_loss_on(name, params, n, default_half_width(name)?)
}

/// Builtin `name` in dimension `n` with constants declared on `[−r, r]ⁿ`.
pub fn builtin_loss_on(name: &str, params: &[f64], n: usize, r: f64) -> Result<LossFunction> {
    Ok(Arc::new(make_builtin(name, params, n, r)?))
}

/// Like [`builtin_loss_on`] but returns the concrete type.
pub fn make_builtin(name: &str, params: &[f64], n: usize, r: f64) -> Result<Builtin> {
    let canonical = canonical_name(name).ok_or_else(|| Error::UnknownBuiltin(name.to_string()))?;
    if n == 0 {
        return Err(Error::invalid("builtin dimension must be at least 1"));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(format!("cube half-width must be positive, got {r}")));
    }
    if let Some(p) = params.iter().find(|p| !p.is_finite()) {
        return Err(Error::invalid(format!("builtin parameter {p} is not finite")));
    }
    let vector_param = |rest: &[f64], default: f64| -> Result<DVector<f64>> {
        match rest.len() {
            0 => Ok(DVector::from_element(n, default)),
            1 => Ok(DVector::from_element(n, rest[0])),
            len if len == n => Ok(DVector::from_column_slice(rest)),
            len => Err(Error::invalid(format!(
                "{canonical}: expected 0, 1 or {n} vector parameters, got {len}"
            ))),
        }
    };
    let scalar = |i: usize, default: f64| params.get(i).copied().unwrap_or(default);
    let max_params = |count: usize| -> Result<()> {
        if params.len() > count {
            Err(Error::invalid(format!(
                "{canonical} takes at most {count} parameters, got {}",
                params.len()
            )))
        } else {
            Ok(())
        }
    };

    let kind = match canonical {
        "quadratic" | "negquadratic" => {
            let a = scalar(0, 1.0);
            let rest = params.get(1..).unwrap_or(&[]);
            let scale = if canonical == "quadratic" { a } else { -a };
            BuiltinKind::Quadratic {
                scale,
                center: vector_param(rest, 0.0)?,
            }
        }
        "linear" => BuiltinKind::Linear {
            coef: vector_param(params, 1.0)?,
        },
        "sine_mix" => {
            max_params(2)?;
            BuiltinKind::SineMix {
                freq: scalar(0, 3.0),
                curvature: scalar(1, 0.5),
            }
        }
        "rastrigin_smooth" => {
            max_params(1)?;
            BuiltinKind::Rastrigin {
                amplitude: scalar(0, 0.1),
            }
        }
        "hidden_valley_demo" => {
            max_params(3)?;
            let width = scalar(2, 0.1);
            if width <= 0.0 {
                return Err(Error::invalid("hidden_valley_demo width must be positive"));
            }
            BuiltinKind::HiddenValley {
                slope: scalar(0, 0.2),
                depth: scalar(1, 1.0),
                width,
                center: DVector::from_element(n, 0.5 * r),
            }
        }
        _ => unreachable!("canonical names are exhaustive"),
    };
    Ok(Builtin::build(canonical, kind, n, r))
}

impl Loss for Builtin {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        match &self.kind {
            BuiltinKind::Quadratic { scale, center } => scale * (x - center).norm_squared(),
            BuiltinKind::Linear { coef } => coef.dot(x),
            BuiltinKind::SineMix { freq, curvature } => x
                .iter()
                .map(|xi| (freq * xi).sin() + curvature * xi * xi)
                .sum(),
            BuiltinKind::Rastrigin { amplitude } => x
                .iter()
                .map(|xi| xi * xi + amplitude * (1.0 - (2.0 * PI * xi).cos()))
                .sum(),
            BuiltinKind::HiddenValley {
                slope,
                depth,
                width,
                center,
            } => {
                let q = (x - center).norm_squared() / (2.0 * width * width);
                slope * x.sum() - depth * (-q).exp()
            }
        }
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            BuiltinKind::Quadratic { scale, center } => (x - center) * (2.0 * scale),
            BuiltinKind::Linear { coef } => coef.clone(),
            BuiltinKind::SineMix { freq, curvature } => {
                x.map(|xi| freq * (freq * xi).cos() + 2.0 * curvature * xi)
            }
            BuiltinKind::Rastrigin { amplitude } => {
                x.map(|xi| 2.0 * xi + 2.0 * PI * amplitude * (2.0 * PI * xi).sin())
            }
            BuiltinKind::HiddenValley {
                slope,
                depth,
                width,
                center,
            } => {
                let offset = x - center;
                let w2 = width * width;
                let bump = depth * (-offset.norm_squared() / (2.0 * w2)).exp();
                DVector::from_element(x.len(), *slope) + offset * (bump / w2)
            }
        }
    }

    fn hessian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let n = x.len();
        Some(match &self.kind {
            BuiltinKind::Quadratic { scale, .. } => DMatrix::identity(n, n) * (2.0 * scale),
            BuiltinKind::Linear { .. } => DMatrix::zeros(n, n),
            BuiltinKind::SineMix { freq, curvature } => DMatrix::from_diagonal(
                &x.map(|xi| -freq * freq * (freq * xi).sin() + 2.0 * curvature),
            ),
            BuiltinKind::Rastrigin { amplitude } => DMatrix::from_diagonal(
                &x.map(|xi| 2.0 + 4.0 * PI * PI * amplitude * (2.0 * PI * xi).cos()),
            ),
            BuiltinKind::HiddenValley {
                depth,
                width,
                center,
                ..
            } => {
                let offset = x - center;
                let w2 = width * width;
                let bump = depth * (-offset.norm_squared() / (2.0 * w2)).exp();
                (DMatrix::identity(n, n) - &offset * offset.transpose() / w2) * (bump / w2)
            }
        })
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn domain(&self) -> Domain {
        if self.global {
            Domain::Everywhere
        } else {
            Domain::Cube {
                half_width: self.half_width,
            }
        }
    }
}

/// Draws `len` builtins uniformly from `pool` with randomized parameters.
///
/// Parameter ranges: quadratic / negquadratic scale in `[0.25, 1.5]` with a
/// center in the cube; linear coefficients in `[−1, 1]ⁿ`; sine_mix `k` in
/// `[0.5, 3]` and `a` in `[0, 0.5]`; rastrigin_smooth `A` in `[0, 0.2]`;
/// hidden_valley_demo slope in `[0, 0.5]`.
pub fn random_builtin_sequence<R: Rng + ?Sized>(
    pool: &[String],
    n: usize,
    r: f64,
    len: usize,
    rng: &mut R,
) -> Result<Vec<LossFunction>> {
    if pool.is_empty() {
        return Err(Error::invalid("random builtin pool is empty"));
    }
    for name in pool {
        if canonical_name(name).is_none() {
            return Err(Error::UnknownBuiltin(name.clone()));
        }
    }
    (0..len)
        .map(|_| {
            let name = pool[rng.random_range(0..pool.len())].as_str();
            let params: Vec<f64> = match name {
                "quadratic" | "negquadratic" => std::iter::once(rng.random_range(0.25..=1.5))
                    .chain((0..n).map(|_| rng.random_range(-r..=r)))
                    .collect(),
                "linear" => (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
                "sine_mix" => vec![rng.random_range(0.5..=3.0), rng.random_range(0.0..=0.5)],
                "rastrigin_smooth" => vec![rng.random_range(0.0..=0.2)],
                "hidden_valley_demo" => vec![rng.random_range(0.0..=0.5), 1.0, 0.1],
                _ => unreachable!(),
            };
            builtin_loss_on(name, &params, n, r)
        })
        .collect()
}
