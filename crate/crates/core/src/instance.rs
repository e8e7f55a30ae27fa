//! Problem instances, solutions and their JSON file forms.

use crate::distributions::SizeDistribution;
use crate::error::{Error, Result};
use crate::rational::{format_rational, serde_rational};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub dist: SizeDistribution,
    #[serde(with = "serde_rational")]
    pub profit: BigRational,
}

/// Items, capacity `C` and overflow budget `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub items: Vec<Item>,
    pub capacity: BigRational,
    pub budget: BigRational,
}

impl Instance {
    pub fn new(items: Vec<Item>, capacity: BigRational, budget: BigRational) -> Result<Self> {
        if budget.is_negative() || budget > BigRational::one() {
            return Err(Error::InvalidInstance(format!(
                "overflow budget {} is outside [0, 1]",
                format_rational(&budget)
            )));
        }
        for (i, item) in items.iter().enumerate() {
            item.dist
                .validate()
                .map_err(|e| Error::InvalidInstance(format!("item {i}: {e}")))?;
            if item.profit.is_negative() {
                return Err(Error::InvalidInstance(format!(
                    "item {i} has a negative profit"
                )));
            }
        }
        Ok(Instance {
            items,
            capacity,
            budget,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dists(&self) -> Vec<SizeDistribution> {
        self.items.iter().map(|i| i.dist.clone()).collect()
    }

    pub fn subset_dists(&self, subset: &[usize]) -> Vec<SizeDistribution> {
        subset.iter().map(|&i| self.items[i].dist.clone()).collect()
    }

    pub fn profit_of(&self, subset: &[usize]) -> BigRational {
        subset.iter().map(|&i| &self.items[i].profit).sum()
    }
}

/// Optional solver defaults carried by an instance file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "opt_rational"
    )]
    pub epsilon: Option<BigRational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
}

mod opt_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &Option<BigRational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(r) => serde_rational::serialize(r, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<BigRational>, D::Error> {
        serde_rational::deserialize(d).map(Some)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub items: Vec<Item>,
    #[serde(with = "serde_rational")]
    pub capacity: BigRational,
    #[serde(with = "serde_rational")]
    pub p: BigRational,
    #[serde(default)]
    pub defaults: Defaults,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.instance()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Validated instance. Profits in files must be positive.
    pub fn instance(&self) -> Result<Instance> {
        if let Some(i) = self.items.iter().position(|it| !it.profit.is_positive()) {
            return Err(Error::InvalidInstance(format!(
                "item {i} must have a positive profit"
            )));
        }
        Instance::new(self.items.clone(), self.capacity.clone(), self.p.clone())
    }

    pub fn from_instance(instance: &Instance, defaults: Defaults) -> Self {
        InstanceFile {
            items: instance.items.clone(),
            capacity: instance.capacity.clone(),
            p: instance.budget.clone(),
            defaults,
        }
    }
}

/// How an overflow probability was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverflowMethod {
    Convolution,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverflowReport {
    pub estimate: f64,
    /// Zero for exact convolution.
    pub half_width: f64,
    pub confidence: f64,
    pub samples: u64,
    pub method: OverflowMethod,
}

/// Randomness bookkeeping of one solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateStats {
    pub checks: u64,
    pub delta_per_check: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub selected: Vec<usize>,
    pub total_profit: BigRational,
    pub overflow: Option<OverflowReport>,
    pub scheme: String,
    pub epsilon: BigRational,
    pub seed: u64,
    pub gate: GateStats,
    pub warnings: Vec<String>,
}

impl Solution {
    pub fn empty(scheme: &str, epsilon: BigRational, seed: u64) -> Self {
        Solution {
            selected: Vec::new(),
            total_profit: BigRational::zero(),
            overflow: None,
            scheme: scheme.to_string(),
            epsilon,
            seed,
            gate: GateStats::default(),
            warnings: Vec::new(),
        }
    }

    pub fn to_file(&self, wall_time_ms: u64) -> SolutionFile {
        SolutionFile {
            selected: self.selected.clone(),
            total_profit: self.total_profit.clone(),
            overflow: self.overflow.clone(),
            scheme: self.scheme.clone(),
            epsilon: self.epsilon.clone(),
            seed: self.seed,
            gate: self.gate.clone(),
            warnings: self.warnings.clone(),
            wall_time_ms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub selected: Vec<usize>,
    #[serde(with = "serde_rational")]
    pub total_profit: BigRational,
    pub overflow: Option<OverflowReport>,
    pub scheme: String,
    #[serde(with = "serde_rational")]
    pub epsilon: BigRational,
    pub seed: u64,
    #[serde(default)]
    pub gate: GateStats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub wall_time_ms: u64,
}

impl SolutionFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        s
    }

    /// Checks indices and the stated profit against an instance.
    pub fn check_against(&self, instance: &Instance) -> Result<()> {
        let mut seen = self.selected.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.selected.len() || seen.iter().any(|&i| i >= instance.len()) {
            return Err(Error::InvalidInstance(
                "selected indices must be distinct and in range".into(),
            ));
        }
        if instance.profit_of(&self.selected) != self.total_profit {
            return Err(Error::InvalidInstance(
                "total profit does not match the selected items".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    const SAMPLE: &str = r#"{
        "items": [
            {"dist": {"type": "bernoulli", "p": 0.3}, "profit": "3/2"},
            {"dist": {"type": "gaussian", "mean": 1.0, "var": 0.5}, "profit": 2}
        ],
        "capacity": "1",
        "p": 0.1,
        "defaults": {"epsilon": "0.2", "seed": 7}
    }"#;

    #[test]
    fn parses_instance_files() {
        let f = InstanceFile::from_json(SAMPLE).unwrap();
        let inst = f.instance().unwrap();
        assert_eq!(inst.len(), 2);
        assert_eq!(inst.items[0].profit, ratio(3, 2));
        assert_eq!(inst.budget, ratio(1, 10));
        assert_eq!(f.defaults.epsilon, Some(ratio(1, 5)));
        assert_eq!(f.defaults.seed, Some(7));
    }

    #[test]
    fn round_trips_through_json() {
        let f = InstanceFile::from_json(SAMPLE).unwrap();
        let back = InstanceFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_bad_budgets_and_profits() {
        let bad_p = SAMPLE.replace("\"p\": 0.1", "\"p\": 1.5");
        assert!(InstanceFile::from_json(&bad_p).is_err());
        let zero_profit = SAMPLE.replace("\"profit\": 2", "\"profit\": 0");
        assert!(InstanceFile::from_json(&zero_profit).is_err());
    }

    #[test]
    fn solution_file_consistency() {
        let inst = InstanceFile::from_json(SAMPLE).unwrap().instance().unwrap();
        let mut sol = Solution::empty("hyper", ratio(1, 5), 1);
        sol.selected = vec![1, 0];
        sol.total_profit = ratio(7, 2);
        assert!(sol.to_file(0).check_against(&inst).is_ok());
        sol.total_profit = int(3);
        assert!(sol.to_file(0).check_against(&inst).is_err());
        sol.selected = vec![0, 0];
        assert!(sol.to_file(0).check_against(&inst).is_err());
    }
}
