//! Agnostic-to-realizable reductions: the pruned expert tree and the
//! explicit expert ensemble it marginalizes.

mod adept;
mod bdpss;
mod prefix;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{expert_count, log_sum_exp, ExactWeight};
use crate::learners::LearnerError;

pub use adept::{ActiveNode, Adept, AdeptConfig, PotentialRecord, Tentative};
pub use bdpss::{bdpss_run, BdpssEnsemble, BdpssRound, BdpssRun, BDPSS_MAX_BUDGET, BDPSS_MAX_HORIZON};
pub use prefix::{PrefixArena, PrefixView};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("round {round}: every candidate extension was pruned")]
    EmptyActiveSet { round: usize },
    #[error("round {round}: base learner reached an unrealizable prefix")]
    SinkReached { round: usize },
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("{0}")]
    Capability(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericMode {
    #[default]
    Log,
    Exact,
}

/// How the Hedge learning rate is chosen each round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaMode {
    Fixed(f64),
    /// `min(1/2, sqrt(log_n / (L* + 1)))` with `L*` the best active loss.
    Adaptive { log_n: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HedgeParams {
    pub horizon: usize,
    pub budget: usize,
    pub mode: EtaMode,
}

/// `sqrt(8 M' ln(e T / M') / T)` with `M'` clamped to `[1, T]`.
pub fn default_eta(horizon: usize, budget: usize) -> f64 {
    let t = horizon.max(1) as f64;
    let m = budget.clamp(1, horizon.max(1)) as f64;
    (8.0 * m * (std::f64::consts::E * t / m).ln() / t).sqrt()
}

pub fn adaptive_eta(l_star: u64, log_n: f64) -> f64 {
    (log_n / (l_star as f64 + 1.0)).sqrt().min(0.5)
}

impl HedgeParams {
    pub fn fixed(horizon: usize, budget: usize) -> Self {
        Self::with_eta(horizon, budget, default_eta(horizon, budget))
    }

    pub fn with_eta(horizon: usize, budget: usize, eta: f64) -> Self {
        assert!(eta > 0.0 && eta.is_finite(), "learning rate must be positive");
        HedgeParams {
            horizon,
            budget,
            mode: EtaMode::Fixed(eta),
        }
    }

    pub fn adaptive(horizon: usize, budget: usize) -> Self {
        let log_n = ExactWeight::from(expert_count(horizon, budget)).ln();
        HedgeParams {
            horizon,
            budget,
            mode: EtaMode::Adaptive { log_n },
        }
    }

    pub fn eta(&self, l_star: u64) -> f64 {
        match self.mode {
            EtaMode::Fixed(eta) => eta,
            EtaMode::Adaptive { log_n } => adaptive_eta(l_star, log_n),
        }
    }
}

/// `sum_j c_j q^j` with exact nonnegative coefficients, where `q = exp(-eta)`.
///
/// Hedge masses are polynomials in `q` whose coefficients count experts, so
/// two weightings agree for every learning rate iff their polynomials match.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct WeightPolynomial {
    coeffs: Vec<BigUint>,
}

impl WeightPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, exponent: usize, coeff: &BigUint) {
        if coeff.is_zero() {
            return;
        }
        if self.coeffs.len() <= exponent {
            self.coeffs.resize(exponent + 1, BigUint::zero());
        }
        self.coeffs[exponent] += coeff;
    }

    pub fn add(&mut self, other: &WeightPolynomial) {
        for (j, c) in other.coeffs.iter().enumerate() {
            self.add_term(j, c);
        }
    }

    pub fn coefficient(&self, exponent: usize) -> BigUint {
        self.coeffs.get(exponent).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Value at `q = 1`, i.e. the total expert count.
    pub fn total(&self) -> BigUint {
        self.coeffs.iter().sum()
    }

    /// `ln` of the value at `q = exp(-eta)`.
    pub fn ln_eval(&self, eta: f64) -> f64 {
        log_sum_exp(
            self.coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(j, c)| ExactWeight::from(c.clone()).ln() - eta * j as f64),
        )
    }

    /// Coefficient-wise `self <= other`, which implies `self(q) <= other(q)`
    /// for every `q >= 0`.
    pub fn dominated_by(&self, other: &WeightPolynomial) -> bool {
        (0..self.coeffs.len()).all(|j| self.coeffs[j] <= other.coefficient(j))
    }
}

/// Probability of label 1 given the Hedge masses of the label-1 experts and of
/// all experts.
pub fn ratio_from_polynomials(numerator: &WeightPolynomial, denominator: &WeightPolynomial, eta: f64) -> f64 {
    if numerator.is_zero() {
        return 0.0;
    }
    (numerator.ln_eval(eta) - denominator.ln_eval(eta)).exp().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_formula() {
        let eta = default_eta(2048, 2);
        let want = (16.0 * (std::f64::consts::E * 1024.0).ln() / 2048.0).sqrt();
        assert!((eta - want).abs() < 1e-15);
        // M = 0 is treated as M = 1
        assert_eq!(default_eta(100, 0), default_eta(100, 1));
        assert!(default_eta(0, 0).is_finite());
    }

    #[test]
    fn adaptive_eta_examples() {
        assert!((adaptive_eta(0, 0.04) - 0.2).abs() < 1e-15);
        assert_eq!(adaptive_eta(0, 100.0), 0.5);
        let big = adaptive_eta(1_000_000, 2.0);
        assert!((big - (2.0f64 / 1_000_001.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn polynomial_evaluation() {
        let mut p = WeightPolynomial::new();
        p.add_term(0, &BigUint::from(3u32));
        p.add_term(2, &BigUint::from(5u32));
        let eta: f64 = 0.7;
        let want = 3.0 + 5.0 * (-2.0 * eta).exp();
        assert!((p.ln_eval(eta).exp() - want).abs() < 1e-12);
        assert_eq!(p.total(), BigUint::from(8u32));
        let mut q = p.clone();
        q.add_term(1, &BigUint::from(1u32));
        assert!(p.dominated_by(&q));
        assert!(!q.dominated_by(&p));
        assert!((ratio_from_polynomials(&p, &q, eta) - want / (want + (-eta).exp())).abs() < 1e-12);
    }
}
