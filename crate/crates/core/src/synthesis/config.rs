use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetSplit {
    /// Each top-level plan node is reported against `error_budget / n_nodes`.
    #[default]
    EqualPerSegment,
}

fn default_exponent_cap() -> f64 {
    30.0
}

fn default_leaf_power() -> u32 {
    2
}

fn default_restarts() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Top-level small time before refinement.
    #[serde(rename = "delta0_s")]
    pub delta0: f64,
    pub delta_shrink: f64,
    pub max_refinements: usize,
    /// Accepted relative `H^s` error of the final state.
    pub error_budget: f64,
    #[serde(default)]
    pub budget_split: BudgetSplit,
    /// Plans must finish strictly before this time.
    #[serde(rename = "time_cap_s")]
    pub time_cap: f64,
    /// Largest `r1·δ^{−1/2}·max θ̃` tolerated in a conjugation.
    #[serde(default = "default_exponent_cap")]
    pub exponent_cap: f64,
    /// One recursion level down, `δ_child = δ_parent^leaf_power`.
    #[serde(default = "default_leaf_power")]
    pub leaf_power: u32,
    #[serde(default = "default_restarts")]
    pub decompose_restarts: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            delta0: 0.02,
            delta_shrink: 0.5,
            max_refinements: 6,
            error_budget: 0.1,
            budget_split: BudgetSplit::EqualPerSegment,
            time_cap: 1.0,
            exponent_cap: default_exponent_cap(),
            leaf_power: default_leaf_power(),
            decompose_restarts: default_restarts(),
            seed: 0,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta0", self.delta0),
            ("error_budget", self.error_budget),
            ("time_cap", self.time_cap),
            ("exponent_cap", self.exponent_cap),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.delta_shrink > 0.0 && self.delta_shrink < 1.0) {
            return Err(Error::Input(format!(
                "delta_shrink must lie in (0, 1), got {}",
                self.delta_shrink
            )));
        }
        if self.leaf_power < 1 {
            return Err(Error::Input("leaf_power must be at least 1".into()));
        }
        Ok(())
    }

    /// `delta0 · delta_shrink^refinement`.
    pub fn delta_at(&self, refinement: usize) -> f64 {
        self.delta0 * self.delta_shrink.powi(refinement as i32)
    }

    /// Small time at recursion depth `depth` below a top-level `delta`.
    pub fn delta_at_depth(&self, delta: f64, depth: usize) -> f64 {
        (0..depth).fold(delta, |d, _| d.powi(self.leaf_power as i32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_of_deltas() {
        let c = SynthesisConfig::default();
        assert!(c.validate().is_ok());
        assert!((c.delta_at(2) - 0.005).abs() < 1e-15);
        assert!((c.delta_at_depth(0.01, 1) - 1e-4).abs() < 1e-18);
        assert_eq!(c.delta_at_depth(0.01, 0), 0.01);
        let bad = SynthesisConfig { delta_shrink: 1.0, ..c };
        assert!(bad.validate().is_err());
    }
}
