//! Solver settings shared by the schemes.

use crate::error::{Error, Result};
use crate::gate::GateConfig;
use crate::pseudo_knapsack::DpConfig;
use crate::rational::format_rational;
use crate::rng::derive;
use num_rational::BigRational;
use num_traits::{One, Signed};

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub epsilon: BigRational,
    pub seed: u64,
    pub gate: GateConfig,
    pub dp: DpConfig,
    /// Largest number of combined candidates tried before giving up.
    pub combo_limit: u64,
    /// Largest number of candidate types enumerated by the hyper scheme.
    pub type_budget: u64,
    /// Replaces the computed hypercontractivity constant.
    pub c_override: Option<f64>,
    /// Largest common support size for the finite-support scheme.
    pub k_cap: usize,
}

impl SolverConfig {
    pub fn new(epsilon: BigRational, seed: u64) -> Self {
        SolverConfig {
            epsilon,
            seed,
            gate: GateConfig::default(),
            dp: DpConfig::default(),
            combo_limit: 1_000_000,
            type_budget: 100_000,
            c_override: None,
            k_cap: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_positive() || self.epsilon >= BigRational::one() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1), got {}",
                format_rational(&self.epsilon)
            )));
        }
        Ok(())
    }

    /// Gate settings with a seed specific to one subsystem.
    pub fn gate_for(&self, tag: u64) -> GateConfig {
        GateConfig {
            seed: derive(self.seed, &[tag]),
            ..self.gate.clone()
        }
    }
}
