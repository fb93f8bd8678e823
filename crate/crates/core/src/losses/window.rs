use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::{Constants, LossFunction, OracleCalls};
use crate::error::{Error, Result};

/// `F_{t,w}(x) = (1/w) Σ_{i=0}^{w−1} f_{t−i}(x)`, with `f_s ≡ 0` for `s ≤ 0`.
///
/// The buffer holds loss handles rather than samples so that past losses
/// can be queried at fresh iterates.
#[derive(Clone, Debug)]
pub struct WindowAverage {
    window: usize,
    dim: usize,
    round: usize,
    buffer: VecDeque<LossFunction>,
}

/// Value, gradient and (when every member has one) Hessian of `F_{t,w}`.
#[derive(Clone, Debug)]
pub struct WindowEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: Option<DMatrix<f64>>,
}

impl WindowAverage {
    pub fn new(window: usize, dim: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("window size must be at least 1"));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        Ok(WindowAverage {
            window,
            dim,
            round: 0,
            buffer: VecDeque::with_capacity(window),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The index `t` of the most recently pushed loss.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Number of non-padding losses in the window.
    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    /// Buffered losses, oldest first.
    pub fn losses(&self) -> impl Iterator<Item = &LossFunction> {
        self.buffer.iter()
    }

    /// Advances to round `t + 1` with loss `f`, evicting `f_{t+1−w}`.
    pub fn push(&mut self, f: LossFunction) -> Result<()> {
        Error::check_dim(self.dim, f.dim())?;
        if self.buffer.len() == self.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(f);
        self.round += 1;
        Ok(())
    }

    /// Constants valid for the average: the member maximum.
    pub fn constants(&self) -> Constants {
        Constants::uniform(self.buffer.iter())
    }

    pub fn has_hessian(&self) -> bool {
        self.buffer.iter().all(|f| f.has_hessian())
    }

    fn scale(&self) -> f64 {
        1.0 / self.window as f64
    }

    pub fn value(&self, x: &DVector<f64>, calls: &mut OracleCalls) -> Result<f64> {
        Error::check_dim(self.dim, x.len())?;
        calls.value += self.buffer.len() as u64;
        Ok(self.buffer.iter().map(|f| f.value(x)).sum::<f64>() * self.scale())
    }

    pub fn gradient(&self, x: &DVector<f64>, calls: &mut OracleCalls) -> Result<DVector<f64>> {
        Error::check_dim(self.dim, x.len())?;
        calls.gradient += self.buffer.len() as u64;
        let mut g = DVector::zeros(self.dim);
        for f in &self.buffer {
            g += f.gradient(x);
        }
        Ok(g * self.scale())
    }

    /// Value, gradient and Hessian in one pass; costs one call of each kind
    /// per buffered loss.
    pub fn evaluate(&self, x: &DVector<f64>, calls: &mut OracleCalls) -> Result<WindowEval> {
        let value = self.value(x, calls)?;
        let gradient = self.gradient(x, calls)?;
        let hessian = if self.has_hessian() {
            calls.hessian += self.buffer.len() as u64;
            let mut h = DMatrix::zeros(self.dim, self.dim);
            for f in &self.buffer {
                h += f.hessian(x).expect("has_hessian checked");
            }
            Some(h * self.scale())
        } else {
            None
        };
        Ok(WindowEval {
            value,
            gradient,
            hessian,
        })
    }
}

#[cfg(test)]
mod tests {

    use proptest::prelude::*;

    use super::*;
    use crate::losses::testing::fd_gradient;
    use crate::losses::{builtin_loss, FnLoss, Loss};

    fn constant(c: f64) -> LossFunction {
        FnLoss::new("const", 1, Constants::new(c.abs(), 0.0, 0.0), move |_| c, |_| {
            DVector::zeros(1)
        })
        .into_shared()
    }

    fn scaled_square(a: f64) -> LossFunction {
        builtin_loss("quadratic", &[a], 1).unwrap()
    }

    fn at(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    #[test]
    fn mean_of_constants() {
        let mut wa = WindowAverage::new(3, 1).unwrap();
        for c in [1.0, 2.0, 3.0] {
            wa.push(constant(c)).unwrap();
        }
        let mut calls = OracleCalls::default();
        assert_eq!(wa.value(&at(0.7), &mut calls).unwrap(), 2.0);
        assert_eq!(calls.value, 3);
    }

    #[test]
    fn early_rounds_are_zero_padded() {
        let mut wa = WindowAverage::new(3, 1).unwrap();
        wa.push(constant(3.0)).unwrap();
        assert_eq!(wa.round(), 1);
        assert_eq!(wa.value(&at(-0.2), &mut OracleCalls::default()).unwrap(), 1.0);
    }

    #[test]
    fn window_of_one_tracks_latest() {
        let mut wa = WindowAverage::new(1, 1).unwrap();
        for c in [5.0, -1.0, 4.0] {
            wa.push(constant(c)).unwrap();
            assert_eq!(wa.value(&at(0.0), &mut OracleCalls::default()).unwrap(), c);
        }
    }

    #[test]
    fn cancellation() {
        let mut wa = WindowAverage::new(2, 1).unwrap();
        wa.push(scaled_square(1.0)).unwrap();
        wa.push(builtin_loss("negquadratic", &[1.0], 1).unwrap())
            .unwrap();
        let mut calls = OracleCalls::default();
        for x in [-1.0, 0.3, 0.9] {
            let e = wa.evaluate(&at(x), &mut calls).unwrap();
            assert_eq!(e.value, 0.0);
            assert_eq!(e.gradient[0], 0.0);
        }
    }

    #[test]
    fn half_weight_for_a_lone_linear_loss() {
        let mut wa = WindowAverage::new(2, 1).unwrap();
        wa.push(builtin_loss("linear", &[2.0], 1).unwrap()).unwrap();
        let mut calls = OracleCalls::default();
        let x = at(0.4);
        let g = wa.gradient(&x, &mut calls).unwrap();
        assert_eq!(g[0], 1.0);
        // finite differences of (2x + 0)/2
        let h = 1e-6;
        let fd = (wa.value(&at(0.4 + h), &mut calls).unwrap()
            - wa.value(&at(0.4 - h), &mut calls).unwrap())
            / (2.0 * h);
        assert!((fd - 1.0).abs() < 1e-8);
    }

    #[test]
    fn single_quadratic_triple() {
        let mut wa = WindowAverage::new(1, 1).unwrap();
        wa.push(scaled_square(1.0)).unwrap();
        let mut calls = OracleCalls::default();
        let e = wa.evaluate(&at(3.0), &mut calls).unwrap();
        assert_eq!(e.value, 9.0);
        assert_eq!(e.gradient[0], 6.0);
        assert_eq!(e.hessian.unwrap()[(0, 0)], 2.0);
        assert_eq!(
            calls,
            OracleCalls {
                value: 1,
                gradient: 1,
                hessian: 1,
                stochastic: 0
            }
        );
    }

    #[test]
    fn hessian_only_when_all_members_have_one() {
        let mut wa = WindowAverage::new(2, 1).unwrap();
        wa.push(scaled_square(1.0)).unwrap();
        wa.push(constant(1.0)).unwrap();
        assert!(wa
            .evaluate(&at(0.0), &mut OracleCalls::default())
            .unwrap()
            .hessian
            .is_none());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut wa = WindowAverage::new(2, 1).unwrap();
        assert!(matches!(
            wa.push(builtin_loss("quadratic", &[1.0], 2).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(WindowAverage::new(0, 1).is_err());
    }

    proptest! {
        #[test]
        fn gradient_is_mean_of_member_gradients(
            scales in prop::collection::vec(-2.0f64..2.0, 1..12),
            w in 1usize..6,
            x in prop::collection::vec(-1.0f64..1.0, 2),
        ) {
            let x = DVector::from_vec(x);
            let mut wa = WindowAverage::new(w, 2).unwrap();
            let losses: Vec<LossFunction> = scales
                .iter()
                .map(|&k| builtin_loss("sine_mix", &[k, 0.1], 2).unwrap())
                .collect();
            for f in &losses {
                wa.push(f.clone()).unwrap();
            }
            let start = losses.len().saturating_sub(w);
            let mut expected = DVector::zeros(2);
            for f in &losses[start..] {
                expected += f.gradient(&x);
            }
            expected /= w as f64;
            let got = wa.gradient(&x, &mut OracleCalls::default()).unwrap();
            prop_assert!((got - expected).norm() <= 1e-12);
        }

        #[test]
        fn successive_windows_differ_by_the_boundary_terms(
            scales in prop::collection::vec(0.1f64..2.0, 1..15),
            w in 1usize..5,
            x0 in -1.0f64..1.0,
        ) {
            // F_{t,w} = F_{t−1,w} + (f_t − f_{t−w}) / w
            let x = at(x0);
            let losses: Vec<LossFunction> =
                scales.iter().map(|&a| scaled_square(a)).collect();
            let mut wa = WindowAverage::new(w, 1).unwrap();
            let mut calls = OracleCalls::default();
            let mut previous = 0.0;
            for (t, f) in losses.iter().enumerate() {
                wa.push(f.clone()).unwrap();
                let dropped = if t >= w { losses[t - w].value(&x) } else { 0.0 };
                let h = (f.value(&x) - dropped) / w as f64;
                let current = wa.value(&x, &mut calls).unwrap();
                prop_assert!((current - (previous + h)).abs() <= 1e-12);
                previous = current;
            }
        }
    }

    #[test]
    fn window_gradient_agrees_with_finite_differences() {
        let mut wa = WindowAverage::new(3, 2).unwrap();
        for k in [1.0, 2.0] {
            wa.push(builtin_loss("sine_mix", &[k, 0.2], 2).unwrap())
                .unwrap();
        }
        struct AsLoss<'a>(&'a WindowAverage);
        impl std::fmt::Debug for AsLoss<'_> {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("window")
            }
        }
        impl Loss for AsLoss<'_> {
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, x: &DVector<f64>) -> f64 {
                self.0.value(x, &mut OracleCalls::default()).unwrap()
            }
            fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
                self.0.gradient(x, &mut OracleCalls::default()).unwrap()
            }
            fn constants(&self) -> Constants {
                self.0.constants()
            }
        }
        let x = DVector::from_vec(vec![0.2, -0.6]);
        let view = AsLoss(&wa);
        let fd = fd_gradient(&view, &x, 1e-6);
        assert!((view.gradient(&x) - fd).norm() < 1e-8);
    }
}
