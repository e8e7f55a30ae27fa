//! The overflow test applied to candidate sets.
//!
//! A gate answers "is `Pr[sum over S > C]` at most `q`, up to `tau`?" for
//! subsets of one instance. When every law is finite and the convolution stays
//! small it computes the probability exactly (a valid estimate for any `tau`);
//! otherwise it samples with a Hoeffding-sized Monte Carlo run. A global
//! failure budget `delta` is split evenly over at most `max_checks` sampled
//! evaluations.

use crate::distributions::{Sampler, SizeDistribution};
use crate::error::{Error, Result};
use crate::instance::{GateStats, Instance, OverflowMethod, OverflowReport};
use crate::oracles::{count_overflows, hoeffding_samples};
use crate::rational::{lcm_of_denominators, to_f64};
use crate::rng::{derive, hash_indices};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateMode {
    /// Exact convolution when possible, sampling otherwise.
    Auto,
    Convolution,
    MonteCarlo,
}

#[derive(Clone, Debug)]
pub struct GateConfig {
    pub mode: GateMode,
    /// Total failure probability allowed across all sampled checks.
    pub delta: f64,
    pub max_checks: u64,
    /// Support-size cap for exact convolution.
    pub atom_cap: usize,
    pub seed: u64,
    /// Sample count for the final reported estimate.
    pub report_samples: u64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            mode: GateMode::Auto,
            delta: 1e-6,
            max_checks: 1_000_000,
            atom_cap: 1 << 20,
            seed: 0,
            report_samples: 200_000,
        }
    }
}

/// Finite laws rescaled to integers by a common denominator.
struct IntegerLaws {
    laws: Vec<Vec<(i64, f64)>>,
    /// `floor(C * D)`: an integer sum overflows iff it exceeds this.
    cap: i64,
}

impl IntegerLaws {
    fn new(items: &[SizeDistribution], capacity: &BigRational) -> Option<Self> {
        let pmfs: Vec<_> = items
            .iter()
            .map(|d| d.exact_pmf().ok())
            .collect::<Option<_>>()?;
        let denom = lcm_of_denominators(pmfs.iter().flat_map(|p| p.atoms().iter().map(|a| &a.0)));
        let scale = BigRational::from_integer(denom);
        let mut headroom: i128 = 0;
        let mut laws = Vec::with_capacity(pmfs.len());
        for pmf in &pmfs {
            let mut law = Vec::with_capacity(pmf.len());
            let mut widest: i128 = 0;
            for (v, p) in pmf.atoms() {
                let x = (v * &scale).to_integer().to_i64()?;
                widest = widest.max((x as i128).abs());
                law.push((x, to_f64(p)));
            }
            headroom += widest;
            laws.push(law);
        }
        if headroom > i64::MAX as i128 / 2 {
            return None;
        }
        let cap = (capacity * &scale).floor().to_integer();
        let cap = cap.to_i64().unwrap_or(if cap > BigInt::from(0) {
            i64::MAX
        } else {
            i64::MIN
        });
        Some(IntegerLaws { laws, cap })
    }

    fn overflow(&self, subset: &[usize], atom_cap: usize) -> Option<f64> {
        if subset
            .iter()
            .all(|&i| self.laws[i].len() == 2 && self.laws[i][0].0 == 0 && self.laws[i][1].0 == 1)
        {
            return Some(self.bernoulli_overflow(subset));
        }
        let mut dist: HashMap<i64, f64> = HashMap::from([(0, 1.0)]);
        for &i in subset {
            let mut next: HashMap<i64, f64> =
                HashMap::with_capacity(dist.len() * self.laws[i].len());
            for (&a, &pa) in &dist {
                for &(b, pb) in &self.laws[i] {
                    *next.entry(a + b).or_insert(0.0) += pa * pb;
                }
            }
            if next.len() > atom_cap {
                return None;
            }
            dist = next;
        }
        Some(
            dist.iter()
                .filter(|(&k, _)| k > self.cap)
                .map(|(_, &p)| p)
                .sum::<f64>()
                .clamp(0.0, 1.0),
        )
    }

    /// Laws on {0, 1}: a count distribution.
    fn bernoulli_overflow(&self, subset: &[usize]) -> f64 {
        let mut pmf = vec![1.0];
        for &i in subset {
            let p = self.laws[i][1].1;
            let mut next = vec![0.0; pmf.len() + 1];
            for (k, &m) in pmf.iter().enumerate() {
                next[k] += m * (1.0 - p);
                next[k + 1] += m * p;
            }
            pmf = next;
        }
        pmf.iter()
            .enumerate()
            .filter(|(k, _)| *k as i64 > self.cap)
            .map(|(_, &m)| m)
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }
}

pub struct OverflowGate {
    samplers: Vec<Sampler>,
    exact: Option<IntegerLaws>,
    capacity: f64,
    cfg: GateConfig,
    cache: Mutex<HashMap<(Vec<usize>, u64), f64>>,
    sampled_checks: AtomicU64,
    exact_checks: AtomicU64,
}

impl OverflowGate {
    pub fn new(instance: &Instance, cfg: GateConfig) -> Result<Self> {
        let dists = instance.dists();
        let exact = match cfg.mode {
            GateMode::MonteCarlo => None,
            _ => IntegerLaws::new(&dists, &instance.capacity),
        };
        if cfg.mode == GateMode::Convolution && exact.is_none() {
            return Err(Error::Unsupported(
                "exact convolution needs finite laws on a common rational grid".into(),
            ));
        }
        if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must lie in (0, 1), got {}",
                cfg.delta
            )));
        }
        Ok(OverflowGate {
            samplers: dists.iter().map(|d| d.sampler()).collect(),
            exact,
            capacity: to_f64(&instance.capacity),
            cfg,
            cache: Mutex::new(HashMap::new()),
            sampled_checks: AtomicU64::new(0),
            exact_checks: AtomicU64::new(0),
        })
    }

    pub fn delta_per_check(&self) -> f64 {
        self.cfg.delta / self.cfg.max_checks as f64
    }

    pub fn stats(&self) -> GateStats {
        GateStats {
            checks: self.sampled_checks.load(Ordering::Relaxed),
            delta_per_check: self.delta_per_check(),
        }
    }

    /// Number of exact evaluations so far.
    pub fn exact_checks(&self) -> u64 {
        self.exact_checks.load(Ordering::Relaxed)
    }

    fn exact_value(&self, subset: &[usize]) -> Option<f64> {
        let laws = self.exact.as_ref()?;
        laws.overflow(subset, self.cfg.atom_cap)
    }

    /// Overflow probability of `subset` to within `tau`.
    pub fn probability(&self, subset: &[usize], tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must lie in (0, 1), got {tau}"
            )));
        }
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        let exact_key = (sorted, 0u64);
        let sampled_key = (exact_key.0.clone(), tau.to_bits());
        {
            let cache = self.cache.lock().expect("gate cache");
            if let Some(&v) = cache.get(&exact_key).or_else(|| cache.get(&sampled_key)) {
                return Ok(v);
            }
        }
        let value = match self.exact_value(&sampled_key.0) {
            Some(v) => {
                self.exact_checks.fetch_add(1, Ordering::Relaxed);
                self.cache.lock().expect("gate cache").insert(exact_key, v);
                return Ok(v);
            }
            None => {
                if self.cfg.mode == GateMode::Convolution {
                    return Err(Error::budget(
                        "exact convolution support",
                        format!("more than {} atoms", self.cfg.atom_cap),
                        self.cfg.atom_cap,
                        "use the Monte Carlo gate",
                    ));
                }
                let used = self.sampled_checks.fetch_add(1, Ordering::Relaxed) + 1;
                if used > self.cfg.max_checks {
                    return Err(Error::budget(
                        "sampled overflow checks",
                        used,
                        self.cfg.max_checks,
                        "raise the check budget or use a larger epsilon",
                    ));
                }
                let m = hoeffding_samples(tau, self.delta_per_check());
                let seed = derive(
                    self.cfg.seed,
                    &[0x6a7e, hash_indices(&sampled_key.0), tau.to_bits()],
                );
                let chosen: Vec<Sampler> = sampled_key
                    .0
                    .iter()
                    .map(|&i| self.samplers[i].clone())
                    .collect();
                if chosen.is_empty() {
                    if 0.0 > self.capacity {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    count_overflows(&chosen, self.capacity, m, seed) as f64 / m as f64
                }
            }
        };
        self.cache
            .lock()
            .expect("gate cache")
            .insert(sampled_key, value);
        Ok(value)
    }

    /// The relation `Pr <=_tau threshold`.
    pub fn leq(&self, subset: &[usize], threshold: f64, tau: f64) -> Result<bool> {
        Ok(self.probability(subset, tau)? <= threshold)
    }

    /// Estimate attached to a final answer.
    pub fn report(&self, subset: &[usize]) -> OverflowReport {
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        if let Some(v) = self.exact_value(&sorted) {
            return OverflowReport {
                estimate: v,
                half_width: 0.0,
                confidence: 1.0,
                samples: 0,
                method: OverflowMethod::Convolution,
            };
        }
        let m = self.cfg.report_samples.max(1);
        let chosen: Vec<Sampler> = sorted.iter().map(|&i| self.samplers[i].clone()).collect();
        let seed = derive(self.cfg.seed, &[0x7e9, hash_indices(&sorted)]);
        let estimate = if chosen.is_empty() {
            if 0.0 > self.capacity {
                1.0
            } else {
                0.0
            }
        } else {
            count_overflows(&chosen, self.capacity, m, seed) as f64 / m as f64
        };
        OverflowReport {
            estimate,
            half_width: ((2.0 / self.cfg.delta).ln() / (2.0 * m as f64)).sqrt(),
            confidence: 1.0 - self.cfg.delta,
            samples: m,
            method: OverflowMethod::MonteCarlo,
        }
    }
}
