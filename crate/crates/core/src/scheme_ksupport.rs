//! Scheme for items supported on a common small set `A = {a_1, ..., a_k}`.
//!
//! Items are grouped into buckets with nearly equal probability vectors and a
//! common most likely value. Inside a bucket, two subsets with the same mixed
//! moments of their probability vectors have nearly the same sum law, so a
//! reachable table over those moments (plus profit) is enough. Buckets are then
//! combined by descending total profit and gated.

use crate::config::SolverConfig;
use crate::distributions::SizeDistribution;
use crate::error::{Error, Result};
use crate::gate::OverflowGate;
use crate::instance::{Instance, Solution};
use crate::pseudo_knapsack::{build_reach_table, Candidate, DpItem, QuantizedVector};
use crate::rational::{ceil_log2, format_rational, int, ratio, round_to_grid, to_f64};
use crate::scheme_bernoulli::first_passing_combination;
use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Bucket of an item: its most likely support index and, per support value,
/// which of the `s` probability intervals its rounded probability falls in.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BucketKey {
    /// 0-based index into the support.
    pub argmax: usize,
    /// 1-based interval indices, one per support value.
    pub intervals: Vec<u64>,
}

/// `ceil(4 e k^3)`.
pub fn interval_count(k: usize) -> u64 {
    (4.0 * std::f64::consts::E * (k as f64).powi(3)).ceil() as u64
}

/// `ceil(log2(16 k s^k / eps))`, computed exactly.
pub fn moment_degree(k: usize, s: u64, epsilon: &BigRational) -> u32 {
    let sk = num_traits::pow(BigInt::from(s), k);
    let x = BigRational::from_integer(BigInt::from(16 * k as u64) * sk) / epsilon;
    ceil_log2(&x)
}

/// All exponent vectors of length `k` with entries summing to at most `w`,
/// by total degree then lexicographically.
pub fn moment_index_set(k: usize, w: u32) -> Vec<Vec<u32>> {
    fn fill(prefix: &mut Vec<u32>, k: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == k {
            if left == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            fill(prefix, k, left - a, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for degree in 0..=w {
        let mut level = Vec::new();
        fill(&mut Vec::with_capacity(k), k, degree, &mut level);
        level.sort();
        out.extend(level);
    }
    out
}

pub fn moment_index_count(k: usize, w: u32) -> BigInt {
    binomial(BigInt::from(w as u64 + k as u64), BigInt::from(k as u64))
}

/// `sum over l in items of prod_j probs[l][j]^alpha_j`.
pub fn moment_vector(probs: &[Vec<BigRational>], items: &[usize], alpha: &[u32]) -> BigRational {
    items
        .iter()
        .map(|&l| {
            probs[l]
                .iter()
                .zip(alpha)
                .map(|(q, &a)| num_traits::pow(q.clone(), a as usize))
                .fold(BigRational::one(), |acc, x| acc * x)
        })
        .sum()
}

/// Sorted union of the item supports.
pub fn common_support(instance: &Instance) -> Result<Vec<BigRational>> {
    let mut values = Vec::new();
    for (item, it) in instance.items.iter().enumerate() {
        let pmf = it.dist.exact_pmf().map_err(|_| Error::SchemeMismatch {
            item,
            reason: format!(
                "finite-support scheme needs a finite law, found {}",
                it.dist.family()
            ),
        })?;
        values.extend(pmf.atoms().iter().map(|a| a.0.clone()));
    }
    values.sort();
    values.dedup();
    Ok(values)
}

/// Probability vector of a law over `support`.
fn probability_vector(
    dist: &SizeDistribution,
    support: &[BigRational],
    item: usize,
) -> Result<Vec<BigRational>> {
    let pmf = dist.exact_pmf().map_err(|_| Error::SchemeMismatch {
        item,
        reason: format!(
            "finite-support scheme needs a finite law, found {}",
            dist.family()
        ),
    })?;
    let mut probs = vec![BigRational::zero(); support.len()];
    for (v, p) in pmf.atoms() {
        match support.binary_search(v) {
            Ok(j) => probs[j] = p.clone(),
            Err(_) => {
                return Err(Error::SchemeMismatch {
                    item,
                    reason: format!("value {} is outside the common support", format_rational(v)),
                })
            }
        }
    }
    Ok(probs)
}

#[derive(Clone, Debug)]
pub struct Bucketing {
    pub support: Vec<BigRational>,
    pub s: u64,
    /// Probabilities are rounded to multiples of `1/grid`, `grid = ceil(4nk/eps)`.
    pub grid: BigInt,
    /// Original probability vectors.
    pub probs: Vec<Vec<BigRational>>,
    /// Rounded probability vectors as integer multiples of `1/grid`.
    pub rounded: Vec<Vec<BigInt>>,
    pub keys: Vec<BucketKey>,
    pub buckets: BTreeMap<BucketKey, Vec<usize>>,
}

impl Bucketing {
    pub fn rounded_probs(&self) -> Vec<Vec<BigRational>> {
        self.rounded
            .iter()
            .map(|row| {
                row.iter()
                    .map(|m| BigRational::new(m.clone(), self.grid.clone()))
                    .collect()
            })
            .collect()
    }
}

/// Round probability vectors and assign bucket keys.
///
/// Every coordinate except the most likely one is rounded to the nearest grid
/// point; the most likely coordinate absorbs the difference so rows sum to one.
pub fn bucketize(
    instance: &Instance,
    support: &[BigRational],
    epsilon: &BigRational,
) -> Result<Bucketing> {
    let k = support.len();
    if k == 0 {
        return Err(Error::InvalidInstance("empty common support".into()));
    }
    let n = instance.len().max(1);
    let grid = (int((4 * n * k) as i64) / epsilon).ceil().to_integer();
    let s = interval_count(k);
    let mut probs = Vec::with_capacity(instance.len());
    let mut rounded = Vec::with_capacity(instance.len());
    let mut keys = Vec::with_capacity(instance.len());
    let mut buckets: BTreeMap<BucketKey, Vec<usize>> = BTreeMap::new();
    for (item, it) in instance.items.iter().enumerate() {
        let p = probability_vector(&it.dist, support, item)?;
        let argmax = (0..k).fold(0, |best, j| if p[j] > p[best] { j } else { best });
        let mut row: Vec<BigInt> = p.iter().map(|x| round_to_grid(x, &grid)).collect();
        let others: BigInt = row
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != argmax)
            .map(|(_, m)| m.clone())
            .sum();
        row[argmax] = &grid - others;
        let intervals = row
            .iter()
            .map(|m| {
                let t = (BigRational::new(m * BigInt::from(s), grid.clone()))
                    .ceil()
                    .to_integer();
                u64::try_from(t).unwrap_or(1).max(1)
            })
            .collect();
        let key = BucketKey { argmax, intervals };
        buckets.entry(key.clone()).or_default().push(item);
        probs.push(p);
        rounded.push(row);
        keys.push(key);
    }
    Ok(Bucketing {
        support: support.to_vec(),
        s,
        grid,
        probs,
        rounded,
        keys,
        buckets,
    })
}

pub fn solve_ksupport(instance: &Instance, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let eps = &cfg.epsilon;
    let support = common_support(instance)?;
    let k = support.len().max(1);
    if k > cfg.k_cap {
        return Err(Error::budget(
            "common support size",
            k,
            cfg.k_cap,
            "use a smaller support (fewer distinct size values)",
        ));
    }
    let mut solution = Solution::empty("ksupport", eps.clone(), cfg.seed);
    let gate = OverflowGate::new(instance, cfg.gate_for(0x4b))?;
    if instance.is_empty() {
        solution.overflow = Some(gate.report(&[]));
        return Ok(solution);
    }
    let bucketing = bucketize(instance, &support, eps)?;
    let w = moment_degree(k, bucketing.s, eps);
    let alphas = moment_index_set(k, w);
    let dims = alphas.len();
    if dims.saturating_mul(instance.len()) > cfg.dp.max_cells {
        return Err(Error::budget(
            "moment dimensions",
            format!("{dims} coordinates per item"),
            cfg.dp.max_cells,
            "use a smaller support or a larger epsilon",
        ));
    }
    let n = BigInt::from(instance.len());
    let grid_pows: Vec<BigInt> = (0..=w)
        .map(|d| num_traits::pow(bucketing.grid.clone(), d as usize))
        .collect();
    let g = BigRational::new(BigInt::one(), bucketing.grid.clone());
    let quanta: Arc<[BigRational]> = alphas
        .iter()
        .map(|a| num_traits::pow(g.clone(), a.iter().sum::<u32>() as usize))
        .collect::<Vec<_>>()
        .into();
    let caps: Vec<Option<BigInt>> = alphas
        .iter()
        .map(|a| Some(&n * &grid_pows[a.iter().sum::<u32>() as usize]))
        .collect();

    let coords_of = |item: usize| -> Vec<BigInt> {
        let row = &bucketing.rounded[item];
        let pows: Vec<Vec<BigInt>> = row
            .iter()
            .map(|m| {
                (0..=w)
                    .map(|e| num_traits::pow(m.clone(), e as usize))
                    .collect()
            })
            .collect();
        alphas
            .iter()
            .map(|a| {
                a.iter()
                    .enumerate()
                    .fold(BigInt::one(), |acc, (j, &e)| acc * &pows[j][e as usize])
            })
            .collect()
    };

    let groups: Vec<&Vec<usize>> = bucketing.buckets.values().collect();
    let lists: Vec<Vec<Candidate>> = groups
        .par_iter()
        .map(|members| {
            let items: Vec<DpItem> = members
                .iter()
                .map(|&i| DpItem {
                    size: QuantizedVector::new(coords_of(i), quanta.clone()).expect("non-negative"),
                    profit: instance.items[i].profit.clone(),
                    id: i,
                })
                .collect();
            let table = build_reach_table(&items, &caps, &cfg.dp).map_err(|e| match e {
                Error::Budget {
                    what,
                    required,
                    cap,
                    ..
                } => Error::Budget {
                    what,
                    required,
                    cap,
                    advice: "use a smaller support or a larger epsilon".into(),
                },
                other => other,
            })?;
            Ok(table.enumerate_candidates(|_| true).collect())
        })
        .collect::<Result<_>>()?;

    let threshold = to_f64(&(&instance.budget + eps * ratio(3, 4)));
    let tau = to_f64(&(eps / int(4)));
    match first_passing_combination(&lists, cfg.combo_limit, |subset| {
        gate.leq(subset, threshold, tau)
    })? {
        Some(c) => {
            solution.total_profit = instance.profit_of(&c.subset);
            solution.selected = c.subset;
        }
        None => {
            let msg = "no candidate passed the overflow gate; returning the empty set".to_string();
            log::warn!("{msg}");
            solution.warnings.push(msg);
        }
    }
    solution.overflow = Some(gate.report(&solution.selected));
    solution.gate = gate.stats();
    Ok(solution)
}
