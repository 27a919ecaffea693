//! Stepsize, bandwidth and truncation sequences, and the recursion weights
//! they induce.
//!
//! With stepsizes `γ_1, γ_2, …` and zero initial values, `n` steps of the
//! recursion `θ_n = (1 - γ_n) θ_{n-1} + γ_n Z_n` give `θ_n = Σ_i w_{i,n} Z_i`
//! with
//!
//! ```text
//! w_{i,n} = γ_i · Π_{k=i+1..n} (1 - γ_k)
//! ```
//!
//! [`WeightLedger`] maintains these weights directly as products. It never
//! forms `π_n / π_i`, which is undefined as soon as some `γ_i = 1`.

use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Lower bound of the strict bandwidth-exponent interval.
const STRICT_C1_MIN: f64 = 0.2;
const STRICT_C2_MIN: f64 = 1.0 / 50.0;
const STRICT_C2_MAX: f64 = 1.0 / 25.0;

/// Parameters of the power-law sequences driving the recursion.
///
/// * `γ_n = gamma_scale / n`, clamped to `(0, 1]`
/// * `h_n = n^{-c1}`
/// * `b_n = min(epsilon_trunc, n^{-c2})`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequencePlan {
    pub gamma_scale: f64,
    /// Exponent of the stepsize power law. Only `1.0` is supported.
    pub gamma_exponent: f64,
    pub c1: f64,
    pub c2: f64,
    pub epsilon_trunc: f64,
    /// Enforce the open intervals `1/5 < c1 < 1/4 - 2·c2`, `1/50 < c2 < 1/25`.
    pub strict_assumptions: bool,
}

impl Default for SequencePlan {
    fn default() -> Self {
        Self {
            gamma_scale: 1.0,
            gamma_exponent: 1.0,
            c1: 0.2,
            c2: 0.03,
            epsilon_trunc: 0.05,
            strict_assumptions: false,
        }
    }
}

impl SequencePlan {
    /// Checks the plan. The permissive mode accepts `c1, c2 ∈ [0, 1)`; a zero
    /// exponent gives a constant sequence.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_scale.is_finite() && self.gamma_scale > 0.0) {
            return Err(invalid("gamma_scale must be positive and finite"));
        }
        if self.gamma_exponent != 1.0 {
            return Err(invalid("gamma_exponent must be 1"));
        }
        if !(self.epsilon_trunc.is_finite() && self.epsilon_trunc > 0.0) {
            return Err(invalid("epsilon_trunc must be positive and finite"));
        }
        if !(0.0..1.0).contains(&self.c1) {
            return Err(invalid("c1 must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.c2) {
            return Err(invalid("c2 must lie in [0, 1)"));
        }
        if self.strict_assumptions {
            if !(self.c2 > STRICT_C2_MIN && self.c2 < STRICT_C2_MAX) {
                return Err(invalid("strict mode requires 1/50 < c2 < 1/25"));
            }
            if !(self.c1 > STRICT_C1_MIN && self.c1 < 0.25 - 2.0 * self.c2) {
                return Err(invalid("strict mode requires 1/5 < c1 < 1/4 - 2*c2"));
            }
        }
        Ok(())
    }

    /// Stepsize `γ_n`.
    pub fn gamma(&self, n: usize) -> Result<f64> {
        check_index(n)?;
        Ok((self.gamma_scale / n as f64).min(1.0))
    }

    /// Bandwidth `h_n = n^{-c1}`.
    pub fn bandwidth(&self, n: usize) -> Result<f64> {
        check_index(n)?;
        Ok(libm::pow(n as f64, -self.c1))
    }

    /// Truncation level `b_n = min(ε, n^{-c2})`.
    pub fn truncation_level(&self, n: usize) -> Result<f64> {
        check_index(n)?;
        Ok(self.epsilon_trunc.min(libm::pow(n as f64, -self.c2)))
    }
}

fn check_index(n: usize) -> Result<()> {
    if n == 0 {
        Err(invalid("sequence index must be at least 1"))
    } else {
        Ok(())
    }
}

/// Weights `w_{i,n}` of the first `n` observations after `n` recursion steps,
/// together with `π_n = Π (1 - γ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightLedger {
    pi: f64,
    weights: Vec<f64>,
}

impl Default for WeightLedger {
    fn default() -> Self {
        Self::new()
    }
}

impl WeightLedger {
    pub fn new() -> Self {
        Self { pi: 1.0, weights: Vec::new() }
    }

    /// Rebuilds a ledger from stored parts, checking the invariants.
    pub fn from_parts(pi: f64, weights: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi) {
            return Err(invalid("pi must lie in [0, 1]"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        Ok(Self { pi, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Absorbs one more step with stepsize `gamma_next` in place.
    pub fn extend(&mut self, gamma_next: f64) -> Result<()> {
        if !(gamma_next > 0.0 && gamma_next <= 1.0) {
            return Err(invalid("stepsize must lie in (0, 1]"));
        }
        let decay = 1.0 - gamma_next;
        for w in &mut self.weights {
            *w *= decay;
        }
        self.weights.push(gamma_next);
        self.pi *= decay;
        Ok(())
    }

    /// Value-returning form of [`WeightLedger::extend`].
    pub fn extended(&self, gamma_next: f64) -> Result<Self> {
        let mut next = self.clone();
        next.extend(gamma_next)?;
        Ok(next)
    }

    /// Ledger after `n` steps of `plan`.
    pub fn from_plan(plan: &SequencePlan, n: usize) -> Result<Self> {
        let mut ledger = Self::new();
        for i in 1..=n {
            ledger.extend(plan.gamma(i)?)?;
        }
        Ok(ledger)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct evaluation of `γ_i Π_{k>i}(1-γ_k)` for every `i`.
    fn product_weights(gammas: &[f64]) -> (Vec<f64>, f64) {
        let n = gammas.len();
        let weights = (0..n).map(|i| gammas[i] * gammas[i + 1..].iter().map(|g| 1.0 - g).product::<f64>()).collect();
        let pi = gammas.iter().map(|g| 1.0 - g).product();
        (weights, pi)
    }

    #[test]
    fn gamma_values() {
        let plan = SequencePlan::default();
        assert_eq!(plan.gamma(1).unwrap(), 1.0);
        assert_eq!(plan.gamma(4).unwrap(), 0.25);
        let half = SequencePlan { gamma_scale: 0.5, ..plan };
        assert_eq!(half.gamma(2).unwrap(), 0.25);
        let big = SequencePlan { gamma_scale: 3.0, ..plan };
        assert_eq!(big.gamma(2).unwrap(), 1.0);
    }

    #[test]
    fn index_zero_rejected() {
        let plan = SequencePlan::default();
        assert!(plan.gamma(0).is_err());
        assert!(plan.bandwidth(0).is_err());
        assert!(plan.truncation_level(0).is_err());
    }

    #[test]
    fn bandwidth_values() {
        let plan = SequencePlan::default();
        assert_eq!(plan.bandwidth(1).unwrap(), 1.0);
        assert!((plan.bandwidth(32).unwrap() - 0.5).abs() < 1e-15);
        // 100^{-0.2} evaluated at 30 digits
        assert!((plan.bandwidth(100).unwrap() - 0.398_107_170_553_497_23).abs() < 1e-15);
    }

    #[test]
    fn truncation_values() {
        let plan = SequencePlan::default();
        assert_eq!(plan.truncation_level(1).unwrap(), 0.05);
        // 10^{-0.3} = 0.50118… is still above the cap
        assert_eq!(plan.truncation_level(10_000_000_000).unwrap(), 0.05);
        let loose = SequencePlan { epsilon_trunc: 10.0, ..plan };
        assert!((loose.truncation_level(10_000_000_000).unwrap() - 0.501_187_233_627_272_3).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for n in (1..100_000).step_by(97) {
            let b = loose.truncation_level(n).unwrap();
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn strict_mode_rejects_boundary_bandwidth() {
        let plan = SequencePlan { strict_assumptions: true, ..SequencePlan::default() };
        assert!(plan.validate().is_err());
        let ok = SequencePlan { c1: 0.205, c2: 0.021, ..plan };
        ok.validate().unwrap();
        let bad_c2 = SequencePlan { c2: 0.05, ..ok };
        assert!(bad_c2.validate().is_err());
        SequencePlan::default().validate().unwrap();
    }

    #[test]
    fn plan_validation_errors() {
        let base = SequencePlan::default();
        assert!(SequencePlan { gamma_scale: 0.0, ..base }.validate().is_err());
        assert!(SequencePlan { gamma_exponent: 0.5, ..base }.validate().is_err());
        assert!(SequencePlan { epsilon_trunc: -1.0, ..base }.validate().is_err());
        assert!(SequencePlan { c1: 1.0, ..base }.validate().is_err());
    }

    #[test]
    fn hand_ledger() {
        let mut ledger = WeightLedger::new();
        for g in [0.5, 0.25, 1.0 / 6.0] {
            ledger.extend(g).unwrap();
        }
        let expect = [5.0 / 16.0, 5.0 / 24.0, 1.0 / 6.0];
        for (w, e) in ledger.weights().iter().zip(expect) {
            assert!((w - e).abs() < 1e-15);
        }
        assert!((ledger.pi() - 5.0 / 16.0).abs() < 1e-15);
        let sum: f64 = ledger.weights().iter().sum();
        assert!((sum - 11.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_weights_are_uniform() {
        let ledger = WeightLedger::from_plan(&SequencePlan::default(), 5).unwrap();
        assert_eq!(ledger.pi(), 0.0);
        for w in ledger.weights() {
            assert!((w - 0.2).abs() < 1e-14);
        }
        let big = WeightLedger::from_plan(&SequencePlan::default(), 10_000).unwrap();
        for w in big.weights() {
            assert!((w - 1e-4).abs() < 1e-14);
        }
    }

    #[test]
    fn single_step_with_unit_gamma() {
        let ledger = WeightLedger::new().extended(1.0).unwrap();
        assert_eq!(ledger.weights(), &[1.0]);
        assert_eq!(ledger.pi(), 0.0);
    }

    #[test]
    fn extend_rejects_bad_stepsize() {
        let mut ledger = WeightLedger::new();
        assert!(ledger.extend(0.0).is_err());
        assert!(ledger.extend(1.5).is_err());
        assert!(ledger.extend(f64::NAN).is_err());
        assert!(ledger.is_empty());
    }

    #[test]
    fn weight_sum_identity_to_ten_thousand() {
        for scale in [1.0, 0.7, 0.3] {
            let plan = SequencePlan { gamma_scale: scale, ..SequencePlan::default() };
            let mut ledger = WeightLedger::new();
            for n in 1..=10_000 {
                ledger.extend(plan.gamma(n).unwrap()).unwrap();
                if n % 1000 == 0 || n < 20 {
                    let sum: f64 = ledger.weights().iter().sum();
                    assert!((sum - (1.0 - ledger.pi())).abs() < 1e-12, "n={n} scale={scale}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn incremental_matches_products(gammas in prop::collection::vec(1e-3f64..=1.0, 1..60)) {
            let mut ledger = WeightLedger::new();
            for g in &gammas {
                ledger.extend(*g).unwrap();
            }
            let (weights, pi) = product_weights(&gammas);
            prop_assert!((ledger.pi() - pi).abs() < 1e-12);
            for (a, b) in ledger.weights().iter().zip(&weights) {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!(*a >= 0.0);
            }
            let sum: f64 = ledger.weights().iter().sum();
            prop_assert!((sum - (1.0 - ledger.pi())).abs() < 1e-12);
        }
    }
}
