//! Scheme for Bernoulli item sizes.
//!
//! Two sub-schemes cover the high-variance and low-variance regimes. Each
//! builds reachable tables over rounded success probabilities and walks
//! candidates by descending profit until one passes the overflow gate. The
//! driver runs both at `eps/8` and keeps the better survivor.

use crate::combine::DescendingTuples;
use crate::config::SolverConfig;
use crate::distributions::SizeDistribution;
use crate::error::{Error, Result};
use crate::gate::OverflowGate;
use crate::instance::{Instance, Solution};
use crate::pseudo_knapsack::{build_reach_table, Candidate, DpConfig, DpItem, QuantizedVector};
use crate::rational::{ceil_log2, int, ratio, round_to_grid, to_f64};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use std::sync::Arc;

/// Bernoulli instance with probabilities rounded to multiples of `1/grid`.
#[derive(Clone, Debug)]
pub struct BernoulliInstance {
    pub probs: Vec<BigRational>,
    pub rounded: Vec<BigRational>,
    pub profits: Vec<BigRational>,
    pub capacity: BigRational,
    pub budget: BigRational,
    pub epsilon: BigRational,
    /// `ceil(4n/eps)`; rounded probabilities are multiples of its inverse.
    pub grid: BigInt,
}

impl BernoulliInstance {
    pub fn from_instance(instance: &Instance, epsilon: &BigRational) -> Result<Self> {
        let mut probs = Vec::with_capacity(instance.len());
        for (item, it) in instance.items.iter().enumerate() {
            match &it.dist {
                SizeDistribution::Bernoulli { p } => probs.push(p.clone()),
                other => {
                    return Err(Error::SchemeMismatch {
                        item,
                        reason: format!(
                            "bernoulli scheme needs Bernoulli sizes, found {}",
                            other.family()
                        ),
                    })
                }
            }
        }
        let n = instance.len().max(1) as i64;
        let grid = (int(4 * n) / epsilon).ceil().to_integer();
        let rounded = probs.iter().map(|p| round_on(p, &grid)).collect();
        Ok(BernoulliInstance {
            probs,
            rounded,
            profits: instance.items.iter().map(|i| i.profit.clone()).collect(),
            capacity: instance.capacity.clone(),
            budget: instance.budget.clone(),
            epsilon: epsilon.clone(),
            grid,
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn round_on(p: &BigRational, grid: &BigInt) -> BigRational {
    BigRational::new(round_to_grid(p, grid), grid.clone())
}

/// Items split by success probability. Boundary values go to the
/// lower-numbered bucket.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BucketPartition {
    pub b1: Vec<usize>,
    pub b2: Vec<usize>,
    pub b3: Vec<usize>,
    pub b4: Vec<usize>,
}

impl BucketPartition {
    pub fn new(probs: &[BigRational], epsilon: &BigRational) -> Self {
        let low = epsilon / int(100);
        let high = BigRational::one() - &low;
        let half = ratio(1, 2);
        let mut parts = BucketPartition::default();
        for (i, p) in probs.iter().enumerate() {
            if p <= &low {
                parts.b1.push(i);
            } else if p >= &high {
                parts.b2.push(i);
            } else if p <= &half {
                parts.b3.push(i);
            } else {
                parts.b4.push(i);
            }
        }
        parts
    }
}

/// `ceil(4 log2(1/eps))`, computed exactly as the least `t` with `2^t >= eps^-4`.
pub fn t0(epsilon: &BigRational) -> u32 {
    let inv = BigRational::one() / epsilon;
    ceil_log2(&(&inv * &inv * &inv * &inv))
}

fn warn_large_epsilon(epsilon: &BigRational) {
    if epsilon > &ratio(1, 8) {
        log::warn!("epsilon above 1/8: the sub-scheme guarantees assume a small epsilon");
    }
}

fn dp_item(
    id: usize,
    coords: Vec<BigInt>,
    quanta: &Arc<[BigRational]>,
    profit: &BigRational,
) -> DpItem {
    DpItem {
        size: QuantizedVector::new(coords, quanta.clone()).expect("non-negative coordinates"),
        profit: profit.clone(),
        id,
    }
}

fn gate_threshold(inst: &BernoulliInstance) -> (f64, f64) {
    // "<=_{eps/2} p + 3.5 eps"
    let threshold = to_f64(&(&inst.budget + &inst.epsilon * ratio(7, 2)));
    let tau = to_f64(&(&inst.epsilon / int(2)));
    (threshold, tau)
}

/// High-variance sub-scheme: one table over `(sum q, sum q^2)`.
pub fn sk_bernoulli_large(
    inst: &BernoulliInstance,
    gate: &OverflowGate,
    dp: &DpConfig,
) -> Result<Option<Candidate>> {
    warn_large_epsilon(&inst.epsilon);
    let g = BigRational::new(BigInt::one(), inst.grid.clone());
    let quanta: Arc<[BigRational]> = vec![g.clone(), &g * &g].into();
    let items: Vec<DpItem> = inst
        .rounded
        .iter()
        .enumerate()
        .map(|(id, q)| {
            let m = (q * BigRational::from_integer(inst.grid.clone())).to_integer();
            dp_item(id, vec![m.clone(), &m * &m], &quanta, &inst.profits[id])
        })
        .collect();
    let table = build_reach_table(&items, &[None, None], dp)?;
    let (threshold, tau) = gate_threshold(inst);
    for candidate in table.enumerate_candidates(|_| true) {
        if gate.leq(&candidate.subset, threshold, tau)? {
            return Ok(Some(candidate));
        }
    }
    Ok(None)
}

/// Low-variance sub-scheme: separate tables for the four probability buckets,
/// combined by descending total profit.
pub fn sk_bernoulli_small(
    inst: &BernoulliInstance,
    gate: &OverflowGate,
    dp: &DpConfig,
    combo_limit: u64,
) -> Result<Option<Candidate>> {
    warn_large_epsilon(&inst.epsilon);
    let eps = &inst.epsilon;
    let n = inst.len() as i64;
    let parts = BucketPartition::new(&inst.probs, eps);
    let t0 = t0(eps) as usize;
    let fine = (int(1000) / (eps * eps * eps * eps)).ceil().to_integer();
    let fine_q: Vec<BigInt> = inst.probs.iter().map(|p| round_to_grid(p, &fine)).collect();
    let coarse = &inst.grid;
    let coarse_q: Vec<BigInt> = inst
        .rounded
        .iter()
        .map(|q| (q * BigRational::from_integer(coarse.clone())).to_integer())
        .collect();
    let moment_cap = (int(2) / (eps * eps)).floor().to_integer();
    let nn = BigInt::from(n);

    let g = BigRational::new(BigInt::one(), coarse.clone());
    let gf = BigRational::new(BigInt::one(), fine.clone());
    let fine_pows: Vec<BigRational> = (1..=t0).map(|j| num_traits::pow(gf.clone(), j)).collect();
    let fine_scale: Vec<BigInt> = (1..=t0).map(|j| num_traits::pow(fine.clone(), j)).collect();

    // B1: (sum q).
    let q1: Arc<[BigRational]> = vec![g.clone()].into();
    let b1: Vec<DpItem> = parts
        .b1
        .iter()
        .map(|&i| dp_item(i, vec![coarse_q[i].clone()], &q1, &inst.profits[i]))
        .collect();
    let caps1 = vec![Some(&nn * coarse)];

    // B2: (count, sum (1 - q)).
    let q2: Arc<[BigRational]> = vec![int(1), g.clone()].into();
    let b2: Vec<DpItem> = parts
        .b2
        .iter()
        .map(|&i| {
            dp_item(
                i,
                vec![BigInt::one(), coarse - &coarse_q[i]],
                &q2,
                &inst.profits[i],
            )
        })
        .collect();
    let caps2 = vec![Some(nn.clone()), Some(&nn * coarse)];

    // B3: (sum q^j) for j = 1..=t0.
    let q3: Arc<[BigRational]> = fine_pows.clone().into();
    let b3: Vec<DpItem> = parts
        .b3
        .iter()
        .map(|&i| {
            let coords = (1..=t0)
                .map(|j| num_traits::pow(fine_q[i].clone(), j))
                .collect();
            dp_item(i, coords, &q3, &inst.profits[i])
        })
        .collect();
    let caps3: Vec<Option<BigInt>> = fine_scale.iter().map(|s| Some(&moment_cap * s)).collect();

    // B4: (count, sum (1 - q)^j) for j = 1..=t0.
    let mut q4v = vec![int(1)];
    q4v.extend(fine_pows.iter().cloned());
    let q4: Arc<[BigRational]> = q4v.into();
    let b4: Vec<DpItem> = parts
        .b4
        .iter()
        .map(|&i| {
            let complement = &fine - &fine_q[i];
            let mut coords = vec![BigInt::one()];
            coords.extend((1..=t0).map(|j| num_traits::pow(complement.clone(), j)));
            dp_item(i, coords, &q4, &inst.profits[i])
        })
        .collect();
    let mut caps4 = vec![Some(nn.clone())];
    caps4.extend(caps3.iter().cloned());

    let groups = [(b1, caps1), (b2, caps2), (b3, caps3), (b4, caps4)];
    let mut lists: Vec<Vec<Candidate>> = Vec::with_capacity(4);
    for (items, caps) in &groups {
        let table = build_reach_table(items, caps, dp)?;
        lists.push(table.enumerate_candidates(|_| true).collect());
    }
    first_passing_combination(&lists, combo_limit, |subset| {
        let (threshold, tau) = gate_threshold(inst);
        gate.leq(subset, threshold, tau)
    })
}

/// Walk one-candidate-per-group combinations by descending total profit and
/// return the first whose union passes `accept`.
pub fn first_passing_combination(
    lists: &[Vec<Candidate>],
    combo_limit: u64,
    mut accept: impl FnMut(&[usize]) -> Result<bool>,
) -> Result<Option<Candidate>> {
    let profits: Vec<Vec<BigRational>> = lists
        .iter()
        .map(|l| l.iter().map(|c| c.profit.clone()).collect())
        .collect();
    for (tried, (tuple, total)) in DescendingTuples::new(&profits).enumerate() {
        if tried as u64 >= combo_limit {
            return Err(Error::budget(
                "combined candidates",
                format!("more than {combo_limit}"),
                combo_limit,
                "use a larger epsilon or fewer items",
            ));
        }
        let mut subset: Vec<usize> = tuple
            .iter()
            .enumerate()
            .flat_map(|(g, &i)| lists[g][i].subset.iter().copied())
            .collect();
        subset.sort_unstable();
        if accept(&subset)? {
            let key = tuple
                .iter()
                .enumerate()
                .flat_map(|(g, &i)| lists[g][i].key.iter().cloned())
                .collect();
            return Ok(Some(Candidate {
                key,
                profit: total,
                subset,
            }));
        }
    }
    Ok(None)
}

/// Pick the best subset among survivors: highest profit, then the
/// lexicographically smallest index list.
pub fn best_survivor(
    survivors: Vec<(Vec<usize>, BigRational)>,
) -> Option<(Vec<usize>, BigRational)> {
    survivors.into_iter().reduce(|best, next| {
        if next.1 > best.1 || (next.1 == best.1 && next.0 < best.0) {
            next
        } else {
            best
        }
    })
}

pub fn solve_bernoulli(instance: &Instance, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let eps = &cfg.epsilon;
    let sub_eps = eps / int(8);
    let inst = BernoulliInstance::from_instance(instance, &sub_eps)?;
    let gate = OverflowGate::new(instance, cfg.gate_for(0xbe))?;
    let (large, small) = rayon::join(
        || sk_bernoulli_large(&inst, &gate, &cfg.dp),
        || sk_bernoulli_small(&inst, &gate, &cfg.dp, cfg.combo_limit),
    );
    let threshold = to_f64(&(&instance.budget + eps * ratio(3, 4)));
    let tau = to_f64(&(eps / int(4)));
    let mut survivors = Vec::new();
    for candidate in [large?, small?].into_iter().flatten() {
        if gate.leq(&candidate.subset, threshold, tau)? {
            let profit = instance.profit_of(&candidate.subset);
            survivors.push((candidate.subset, profit));
        }
    }
    let mut solution = Solution::empty("bernoulli", eps.clone(), cfg.seed);
    match best_survivor(survivors) {
        Some((subset, profit)) => {
            solution.selected = subset;
            solution.total_profit = profit;
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
