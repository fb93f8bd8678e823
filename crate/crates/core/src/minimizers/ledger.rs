use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::OracleCalls;

/// `Φ_t(x) = max{‖∇F_t(x)‖², −(4β/(3L₂²))·λ_min(∇²F_t(x))³}`.
///
/// Both terms are stored so a failing bound can be attributed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiPotential {
    pub grad_term: f64,
    pub eig_term: f64,
    pub min_eigenvalue: f64,
    pub value: f64,
}

impl PhiPotential {
    pub fn new(gradient: &DVector<f64>, min_eigenvalue: f64, smoothness: f64, l2: f64) -> Self {
        let grad_term = gradient.norm_squared();
        let eig_term = -(4.0 * smoothness / (3.0 * l2 * l2)) * min_eigenvalue.powi(3);
        PhiPotential {
            grad_term,
            eig_term,
            min_eigenvalue,
            value: grad_term.max(eig_term),
        }
    }
}

/// One round of bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundEntry {
    pub round: usize,
    /// `c_t = ‖∇_{K,η} F_{t,w}(x_t)‖²` at the played iterate.
    pub cost: f64,
    /// Inner-loop steps taken after observing `f_t`.
    pub steps: u64,
    /// `Φ_t(x_t)`, second-order learner only.
    pub phi: Option<PhiPotential>,
    /// Cumulative oracle calls at the end of the round.
    pub calls: OracleCalls,
}

/// Per-round costs, inner-step counts and oracle totals of one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    entries: Vec<RoundEntry>,
    calls: OracleCalls,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn record(
        &mut self,
        cost: f64,
        steps: u64,
        phi: Option<PhiPotential>,
        calls: OracleCalls,
    ) -> RoundEntry {
        self.calls += calls;
        let entry = RoundEntry {
            round: self.entries.len() + 1,
            cost,
            steps,
            phi,
            calls: self.calls,
        };
        self.entries.push(entry.clone());
        entry
    }

    pub fn entries(&self) -> &[RoundEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.cost).collect()
    }

    pub fn steps(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.steps).collect()
    }

    /// `R_w(T) = Σ_t c_t`, summed in ascending `t`.
    pub fn regret(&self) -> f64 {
        self.entries.iter().map(|e| e.cost).sum()
    }

    /// `Σ_t Φ_t(x_t)`; zero for first-order runs.
    pub fn phi_total(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|e| e.phi.map(|p| p.value))
            .sum()
    }

    pub fn total_steps(&self) -> u64 {
        self.entries.iter().map(|e| e.steps).sum()
    }

    pub fn calls(&self) -> OracleCalls {
        self.calls
    }
}

/// Local regret and the mean per-round cost `R_w(T)/T`, which bounds the
/// expected cost of a uniformly sampled iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalRegret {
    pub total: f64,
    pub mean: f64,
}

pub fn local_regret(costs: &[f64]) -> Result<LocalRegret> {
    if let Some(bad) = costs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::invalid(format!("costs must be finite and >= 0, got {bad}")));
    }
    let total: f64 = costs.iter().sum();
    let mean = if costs.is_empty() {
        0.0
    } else {
        total / costs.len() as f64
    };
    Ok(LocalRegret { total, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_regret_examples() {
        assert_eq!(local_regret(&[0.0, 0.0, 0.0]).unwrap().total, 0.0);
        let r = local_regret(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.total, r.mean), (6.0, 2.0));
        assert!(local_regret(&[1.0, -0.5]).is_err());
        assert_eq!(local_regret(&[]).unwrap().mean, 0.0);
    }

    #[test]
    fn ledger_accumulates_calls() {
        let mut ledger = RegretLedger::new();
        let calls = OracleCalls {
            gradient: 3,
            ..Default::default()
        };
        ledger.record(0.5, 2, None, calls);
        let e = ledger.record(0.25, 0, None, calls);
        assert_eq!(e.round, 2);
        assert_eq!(e.calls.gradient, 6);
        assert_eq!(ledger.regret(), 0.75);
        assert_eq!(ledger.total_steps(), 2);
    }

    #[test]
    fn phi_dominates_both_terms() {
        let g = DVector::from_vec(vec![0.1, 0.0]);
        let p = PhiPotential::new(&g, -2.0, 1.0, 1.0);
        assert!(p.value >= p.grad_term && p.value >= p.eig_term);
        assert!((p.eig_term - 4.0 / 3.0 * 8.0).abs() < 1e-12);
        let convex = PhiPotential::new(&g, 3.0, 1.0, 1.0);
        assert_eq!(convex.value, convex.grad_term);
    }
}
