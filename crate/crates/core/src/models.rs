//! Rate functions and parameter sets for the three knowledge-dynamics models.
//!
//! Everything here is a pure right-hand side: given the current state, the
//! requirement level `u` and the lesson indicator `k`, the functions return
//! the instantaneous rate of change of each knowledge stock. Time stepping,
//! clamping and bookkeeping live in [`crate::engine`].
//!
//! Units are conventional: knowledge and requirement levels share one unit,
//! learning coefficients are 1/time per unit of gap, forgetting coefficients
//! are 1/time (the reciprocal of the e-folding retention time).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A parameter failed validation. The message names the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("parameter `{name}` = {value} is invalid: must be {requirement}")]
pub struct ParamError {
    pub name: &'static str,
    pub value: f64,
    pub requirement: &'static str,
}

fn require(ok: bool, name: &'static str, value: f64, requirement: &'static str) -> Result<(), ParamError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ParamError { name, value, requirement })
    }
}

/// One-component model: a single knowledge stock `z` driven by the gap `u - z`.
///
/// While the gap stays within the motivation cutoff `cutoff_c`, knowledge
/// grows at `k * alpha * z^b * (u - z)` and decays at `gamma * z`. Once the
/// requirement runs ahead by more than `cutoff_c` the learning term shuts
/// off entirely and only forgetting remains, regardless of `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneCompParams {
    /// Learning coefficient (1/time per unit of gap).
    pub alpha: f64,
    /// Forgetting coefficient (1/time); the reciprocal of the e-folding
    /// retention time.
    pub gamma: f64,
    /// Knowledge-leverage exponent: existing knowledge amplifies learning.
    #[serde(default)]
    pub b: f64,
    /// Motivation cutoff: the largest gap `u - z` the learner tolerates.
    pub cutoff_c: f64,
}

impl OneCompParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        require(self.alpha >= 0.0, "alpha", self.alpha, ">= 0")?;
        require(self.gamma >= 0.0, "gamma", self.gamma, ">= 0")?;
        require(self.b >= 0.0, "b", self.b, ">= 0")?;
        require(self.cutoff_c > 0.0, "cutoff_c", self.cutoff_c, "> 0")
    }

    /// True while the requirement is within reach (`u <= z + cutoff_c`).
    /// The boundary itself still motivates: the learning branch is inclusive.
    #[inline]
    pub fn gate_open(&self, z: f64, u: f64) -> bool {
        u <= z + self.cutoff_c
    }

    /// dz/dt under requirement `u` with lesson indicator `k`.
    #[inline]
    pub fn rate(&self, z: f64, u: f64, k: bool) -> f64 {
        let forgetting = self.gamma * z;
        if self.gate_open(z, u) {
            let kf = if k { 1.0 } else { 0.0 };
            kf * self.alpha * leverage(z, self.b) * (u - z) - forgetting
        } else {
            -forgetting
        }
    }
}

/// Two-component model, type 1: two knowledge categories taught and
/// forgotten independently, each against its own requirement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoCompT1Params {
    pub alpha1: f64,
    pub alpha2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(default)]
    pub b: f64,
}

impl TwoCompT1Params {
    pub fn validate(&self) -> Result<(), ParamError> {
        require(self.alpha1 >= 0.0, "alpha1", self.alpha1, ">= 0")?;
        require(self.alpha2 >= 0.0, "alpha2", self.alpha2, ">= 0")?;
        require(self.gamma1 >= 0.0, "gamma1", self.gamma1, ">= 0")?;
        require(self.gamma2 >= 0.0, "gamma2", self.gamma2, ">= 0")?;
        require(self.b >= 0.0, "b", self.b, ">= 0")
    }

    /// (dz1/dt, dz2/dt). The components are uncoupled; separate indicators
    /// `k1`, `k2` allow per-category gating (only the current class's
    /// material is taught in the school-years scenario).
    #[inline]
    pub fn rates(&self, z1: f64, z2: f64, u1: f64, u2: f64, k1: bool, k2: bool) -> (f64, f64) {
        let k1f = if k1 { 1.0 } else { 0.0 };
        let k2f = if k2 { 1.0 } else { 0.0 };
        (
            k1f * self.alpha1 * leverage(z1, self.b) * (u1 - z1) - self.gamma1 * z1,
            k2f * self.alpha2 * leverage(z2, self.b) * (u2 - z2) - self.gamma2 * z2,
        )
    }
}

/// Two-component model, type 2: weak knowledge `z1` is acquired from the gap
/// `u - (z1 + z2)` and consolidates into strong knowledge `z2` at rate
/// `alpha2` while a lesson is running. Each stock forgets at its own rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoCompT2Params {
    /// Acquisition coefficient (1/time).
    pub alpha1: f64,
    /// Consolidation coefficient: weak-to-strong transfer rate (1/time).
    pub alpha2: f64,
    /// Forgetting coefficient of weak knowledge.
    pub gamma1: f64,
    /// Forgetting coefficient of strong knowledge.
    pub gamma2: f64,
}

impl TwoCompT2Params {
    pub fn validate(&self) -> Result<(), ParamError> {
        require(self.alpha1 >= 0.0, "alpha1", self.alpha1, ">= 0")?;
        require(self.alpha2 >= 0.0, "alpha2", self.alpha2, ">= 0")?;
        require(self.gamma1 >= 0.0, "gamma1", self.gamma1, ">= 0")?;
        require(self.gamma2 >= 0.0, "gamma2", self.gamma2, ">= 0")
    }

    /// Soft checks that do not reject the parameters.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.gamma2 > self.gamma1 {
            w.push(format!(
                "gamma2 = {} exceeds gamma1 = {}: strong knowledge is usually forgotten slower than weak",
                self.gamma2, self.gamma1
            ));
        }
        w
    }

    /// (dz1/dt, dz2/dt). Both the acquisition and the consolidation term are
    /// active only while `k = 1`; forgetting never stops.
    #[inline]
    pub fn rates(&self, z1: f64, z2: f64, u: f64, k: bool) -> (f64, f64) {
        let kf = if k { 1.0 } else { 0.0 };
        let z = z1 + z2;
        let transfer = kf * self.alpha2 * z1;
        (
            kf * self.alpha1 * (u - z) - transfer - self.gamma1 * z1,
            transfer - self.gamma2 * z2,
        )
    }
}

/// `z^b`, with the convention `z^0 = 1` even at `z = 0` (no leverage means
/// the factor drops out). The exponentiation is skipped for the common
/// `b = 0` case, which also keeps the hot simulation loop cheap.
#[inline]
fn leverage(z: f64, b: f64) -> f64 {
    if b == 0.0 {
        1.0
    } else {
        z.powf(b)
    }
}

/// Fraction of total knowledge that is consolidated: `z2 / (z1 + z2)`.
/// Defined as 0 when there is no knowledge at all.
#[inline]
pub fn strength_coefficient(z1: f64, z2: f64) -> f64 {
    let z = z1 + z2;
    if z == 0.0 {
        0.0
    } else {
        z2 / z
    }
}

/// A model choice together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Model {
    OneComp(OneCompParams),
    TwoCompT1(TwoCompT1Params),
    TwoCompT2(TwoCompT2Params),
}

impl Model {
    pub fn validate(&self) -> Result<(), ParamError> {
        match self {
            Model::OneComp(p) => p.validate(),
            Model::TwoCompT1(p) => p.validate(),
            Model::TwoCompT2(p) => p.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::OneComp(_) => "one_comp",
            Model::TwoCompT1(_) => "two_comp_t1",
            Model::TwoCompT2(_) => "two_comp_t2",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one_comp(alpha: f64, gamma: f64, b: f64, cutoff_c: f64) -> OneCompParams {
        OneCompParams { alpha, gamma, b, cutoff_c }
    }

    #[test]
    fn one_comp_rate_from_zero_knowledge() {
        // 0.05 * (5 - 0) with b = 0 and no forgetting
        let p = one_comp(0.05, 0.0, 0.0, 10.0);
        assert_relative_eq!(p.rate(0.0, 5.0, true), 0.25);
    }

    #[test]
    fn one_comp_gate_trips_when_gap_exceeds_cutoff() {
        let p = one_comp(0.05, 0.01, 0.0, 10.0);
        // 20 > 0 + 10: learning suppressed, and gamma * 0 = 0
        assert!(!p.gate_open(0.0, 20.0));
        assert_eq!(p.rate(0.0, 20.0, true), 0.0);
    }

    #[test]
    fn one_comp_pure_forgetting_when_gap_closed() {
        let p = one_comp(0.05, 0.01, 0.0, 10.0);
        assert_relative_eq!(p.rate(10.0, 10.0, true), -0.1);
    }

    #[test]
    fn one_comp_gate_boundary_is_inclusive() {
        let p = one_comp(0.05, 0.0, 0.0, 10.0);
        // u = z + C still learns
        assert_relative_eq!(p.rate(5.0, 15.0, true), 0.05 * 10.0);
        assert!(p.gate_open(5.0, 15.0));
        assert!(!p.gate_open(5.0, 15.0 + 1e-9));
    }

    #[test]
    fn two_comp_t1_rates_match_hand_evaluation() {
        let p = TwoCompT1Params { alpha1: 0.01, alpha2: 0.01, gamma1: 0.002, gamma2: 0.01, b: 0.0 };
        let (r1, r2) = p.rates(10.0, 0.0, 50.0, 4.0, true, true);
        assert_relative_eq!(r1, 0.38); // 0.01*40 - 0.002*10
        assert_relative_eq!(r2, 0.04); // 0.01*4 - 0
    }

    #[test]
    fn two_comp_t1_idle_with_no_knowledge_is_zero() {
        let p = TwoCompT1Params { alpha1: 0.01, alpha2: 0.01, gamma1: 0.002, gamma2: 0.01, b: 0.0 };
        assert_eq!(p.rates(0.0, 0.0, 50.0, 4.0, false, false), (0.0, 0.0));
    }

    #[test]
    fn two_comp_t1_only_forgetting_at_requirement_level() {
        let p = TwoCompT1Params { alpha1: 0.01, alpha2: 0.01, gamma1: 0.002, gamma2: 0.01, b: 0.0 };
        let (r1, r2) = p.rates(50.0, 4.0, 50.0, 4.0, true, true);
        assert_relative_eq!(r1, -0.1);
        assert_relative_eq!(r2, -0.04);
    }

    fn consolidating() -> TwoCompT2Params {
        TwoCompT2Params { alpha1: 0.01, alpha2: 0.002, gamma1: 0.005, gamma2: 0.0001 }
    }

    #[test]
    fn two_comp_t2_rates_from_empty_state() {
        let (r1, r2) = consolidating().rates(0.0, 0.0, 30.0, true);
        assert_relative_eq!(r1, 0.3);
        assert_eq!(r2, 0.0);
    }

    #[test]
    fn two_comp_t2_rates_match_hand_evaluation() {
        let (r1, r2) = consolidating().rates(40.0, 0.0, 70.0, true);
        assert_relative_eq!(r1, 0.01 * 30.0 - 0.002 * 40.0 - 0.005 * 40.0);
        assert_relative_eq!(r2, 0.08);
    }

    #[test]
    fn two_comp_t2_pure_decay_outside_lessons() {
        let (r1, r2) = consolidating().rates(10.0, 50.0, 0.0, false);
        assert_relative_eq!(r1, -0.05);
        assert_relative_eq!(r2, -0.005);
    }

    #[test]
    fn two_comp_t2_consolidation_conserves_totals_without_forgetting() {
        let p = TwoCompT2Params { alpha1: 0.01, alpha2: 0.002, gamma1: 0.0, gamma2: 0.0 };
        for (z1, z2, u) in [(3.0, 7.0, 40.0), (0.0, 0.0, 30.0), (12.5, 0.25, 5.0)] {
            let (r1, r2) = p.rates(z1, z2, u, true);
            assert_relative_eq!(r1 + r2, p.alpha1 * (u - z1 - z2), max_relative = 1e-14);
        }
    }

    #[test]
    fn zero_knowledge_with_leverage_cannot_grow() {
        // z^b = 0 for b > 0: learning is stuck at zero knowledge
        let p = one_comp(0.5, 0.0, 0.7, 100.0);
        assert_eq!(p.rate(0.0, 50.0, true), 0.0);
        let t1 = TwoCompT1Params { alpha1: 0.5, alpha2: 0.5, gamma1: 0.0, gamma2: 0.0, b: 1.0 };
        assert_eq!(t1.rates(0.0, 0.0, 50.0, 50.0, true, true), (0.0, 0.0));
    }

    #[test]
    fn zero_knowledge_without_leverage_does_not_forget() {
        let p = one_comp(0.0, 0.3, 0.0, 1.0);
        assert_eq!(p.rate(0.0, 0.0, true), 0.0);
    }

    #[test]
    fn strength_coefficient_examples() {
        assert_relative_eq!(strength_coefficient(30.0, 70.0), 0.7);
        assert_eq!(strength_coefficient(0.0, 0.0), 0.0);
        assert_relative_eq!(strength_coefficient(42.0, 42.0), 0.5);
    }

    #[test]
    fn rates_are_deterministic() {
        let p = consolidating();
        assert_eq!(p.rates(1.25, 3.5, 17.0, true), p.rates(1.25, 3.5, 17.0, true));
    }

    #[test]
    fn validation_names_the_offending_field() {
        let bad = TwoCompT2Params { alpha1: 0.01, alpha2: 0.002, gamma1: -0.005, gamma2: 0.0001 };
        let err = bad.validate().unwrap_err();
        assert_eq!(err.name, "gamma1");
        assert!(one_comp(0.1, 0.0, 0.0, 0.0).validate().is_err()); // cutoff must be positive
    }

    #[test]
    fn slow_strong_forgetting_is_a_warning_not_an_error() {
        let odd = TwoCompT2Params { alpha1: 0.01, alpha2: 0.002, gamma1: 0.0001, gamma2: 0.01 };
        assert!(odd.validate().is_ok());
        assert_eq!(odd.warnings().len(), 1);
        assert!(consolidating().warnings().is_empty());
    }
}
