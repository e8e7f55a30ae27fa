//! Scheme for item sizes with bounded kurtosis.
//!
//! Every candidate set is summarized by the prefix of its largest-variance
//! items up to the critical index (its "type"). Given a type and a target
//! profit, the rest of the set is found by a two-coordinate DP over
//! (profit, rounded variance) that minimizes the total mean. Integer profits
//! are scanned from the top; rational profits are first scaled down to
//! integers.

use crate::config::SolverConfig;
use crate::distributions::SizeDistribution;
use crate::error::{Error, Result};
use crate::gate::OverflowGate;
use crate::instance::{Instance, Item, Solution};
use crate::pseudo_knapsack::{build_reach_table, DpConfig, DpItem, QuantizedVector};
use crate::rational::{from_f64, int, ratio, to_f64};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Critical index of a non-increasing variance sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CriticalIndex {
    /// 1-based index, `None` for infinity.
    pub index: Option<usize>,
    /// Set when the index was reached through an all-zero tail (0/0 read as 0).
    pub zero_tail: bool,
}

/// Smallest `i` (1-based) with `var_i / sum_{j >= i} var_j <= threshold`.
pub fn critical_index(variances: &[BigRational], threshold: &BigRational) -> CriticalIndex {
    let mut tails = vec![BigRational::zero(); variances.len() + 1];
    for i in (0..variances.len()).rev() {
        tails[i] = &tails[i + 1] + &variances[i];
    }
    for (i, v) in variances.iter().enumerate() {
        if tails[i].is_zero() {
            log::debug!(
                "critical index reached on an all-zero variance tail at position {}",
                i + 1
            );
            return CriticalIndex {
                index: Some(i + 1),
                zero_tail: true,
            };
        }
        if &(v / &tails[i]) <= threshold {
            return CriticalIndex {
                index: Some(i + 1),
                zero_tail: false,
            };
        }
    }
    CriticalIndex {
        index: None,
        zero_tail: false,
    }
}

/// `ceil((c^4 / eps^2) log2(1/eps))`.
pub fn type_cap(c4: &BigRational, epsilon: &BigRational) -> u64 {
    let floor = 2f64.powi(-20);
    let mut eps = to_f64(epsilon);
    if eps < floor {
        log::warn!("epsilon below 2^-20 clamped when sizing the type cap");
        eps = floor;
    }
    let l = to_f64(c4) / (eps * eps) * (1.0 / eps).log2();
    l.ceil().max(0.0) as u64
}

/// Prefix of a candidate set's largest-variance items, in variance order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EpsilonType {
    pub prefix: Vec<usize>,
}

impl EpsilonType {
    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }
}

fn binomial_sum(n: usize, max_t: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for t in 0..=max_t.min(n) {
        if t > 0 {
            c = c * (n - t + 1) as u128 / t as u128;
        }
        total = total.saturating_add(c);
    }
    total
}

/// All variance-ordered prefixes of length at most `l` over `order`, shortest
/// first, each length in lexicographic order of positions.
pub fn enumerate_types(order: &[usize], l: u64, budget: u64) -> Result<Vec<EpsilonType>> {
    let n = order.len();
    let max_t = usize::try_from(l).unwrap_or(usize::MAX).min(n);
    let count = binomial_sum(n, max_t);
    if count > budget as u128 {
        return Err(Error::budget(
            "candidate types",
            count,
            budget,
            "use a larger epsilon, a smaller hypercontractivity constant or fewer items",
        ));
    }
    let mut out = Vec::with_capacity(count as usize);
    for t in 0..=max_t {
        let mut idx: Vec<usize> = (0..t).collect();
        loop {
            out.push(EpsilonType {
                prefix: idx.iter().map(|&i| order[i]).collect(),
            });
            // Advance to the next t-combination of positions.
            let mut i = t;
            while i > 0 && idx[i - 1] == n - t + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..t {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Ok(out)
}

/// Variance quantum for the large case: `var * eps^2 / (2 n^2)`.
pub fn rho_large(anchor_var: &BigRational, n: usize, epsilon: &BigRational) -> BigRational {
    anchor_var * epsilon * epsilon / int(2 * (n * n) as i64)
}

/// Variance quantum for the small case: `var * eps^4 / (2 n^4)`.
pub fn rho_small(anchor_var: &BigRational, n: usize, epsilon: &BigRational) -> BigRational {
    let e2 = epsilon * epsilon;
    anchor_var * &e2 * &e2 / int(2 * (n as i64).pow(4))
}

/// Which routine a table serves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Routine {
    Large,
    Small,
}

/// Candidates of one DP run, grouped by profit coordinate, each group by
/// descending DP profit (that is, ascending total mean).
struct AnchorTable {
    by_value: HashMap<u64, Vec<Vec<usize>>>,
}

/// `None` when the variance window is empty.
type SharedTable = Arc<Option<AnchorTable>>;

/// Shared state of one run at a fixed error parameter.
pub struct HyperContext<'a> {
    instance: &'a Instance,
    pub epsilon: BigRational,
    pub c4: BigRational,
    pub l: usize,
    pub order: Vec<usize>,
    rank: Vec<usize>,
    variances: Vec<BigRational>,
    means: Vec<BigRational>,
    values: Vec<u64>,
    gate: &'a OverflowGate,
    dp: DpConfig,
    tables: Mutex<HashMap<(Routine, usize), SharedTable>>,
}

/// Items by variance descending, ties by index.
pub fn variance_order(variances: &[BigRational]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..variances.len()).collect();
    order.sort_by(|&a, &b| variances[b].cmp(&variances[a]).then(a.cmp(&b)));
    order
}

/// Largest kurtosis over items with positive variance (1 if there are none).
pub fn max_kurtosis(dists: &[SizeDistribution]) -> BigRational {
    let mut worst = BigRational::one();
    for d in dists {
        let k = match d.exact_moments() {
            Some(m) => m.kurtosis(),
            None => d.moments().kurtosis.and_then(|k| from_f64(k).ok()),
        };
        if let Some(k) = k {
            if k > worst {
                worst = k;
            }
        }
    }
    worst
}

fn integer_profits(instance: &Instance) -> Result<Vec<u64>> {
    instance
        .items
        .iter()
        .enumerate()
        .map(|(i, it)| {
            if !it.profit.is_integer() || it.profit.is_negative() {
                return Err(Error::InvalidInstance(format!(
                    "item {i}: integer profits required"
                )));
            }
            it.profit
                .to_integer()
                .to_u64()
                .ok_or_else(|| Error::InvalidInstance(format!("item {i}: profit too large")))
        })
        .collect()
}

impl<'a> HyperContext<'a> {
    pub fn new(
        instance: &'a Instance,
        epsilon: BigRational,
        c4: BigRational,
        l: usize,
        gate: &'a OverflowGate,
        dp: DpConfig,
    ) -> Result<Self> {
        let values = integer_profits(instance)?;
        let variances: Vec<BigRational> = instance
            .items
            .iter()
            .map(|i| i.dist.variance_rational())
            .collect();
        let means = instance
            .items
            .iter()
            .map(|i| i.dist.mean_rational())
            .collect();
        let order = variance_order(&variances);
        let mut rank = vec![0; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        Ok(HyperContext {
            instance,
            epsilon,
            c4,
            l,
            order,
            rank,
            variances,
            means,
            values,
            gate,
            dp,
            tables: Mutex::new(HashMap::new()),
        })
    }

    pub fn threshold(&self) -> BigRational {
        &self.epsilon * &self.epsilon / &self.c4
    }

    fn value_of(&self, items: &[usize]) -> u64 {
        items.iter().map(|&i| self.values[i]).sum()
    }

    fn sub_gate(&self, subset: &[usize]) -> Result<bool> {
        // "<=_{eps/4} p + 3 eps / 4"
        let threshold = to_f64(&(&self.instance.budget + &self.epsilon * ratio(3, 4)));
        self.gate
            .leq(subset, threshold, to_f64(&(&self.epsilon / int(4))))
    }

    /// Items after `anchor` in variance order; `inclusive` keeps the anchor.
    pub fn gamma(&self, anchor: usize, inclusive: bool) -> Vec<usize> {
        let start = self.rank[anchor] + usize::from(!inclusive);
        self.order[start..].to_vec()
    }

    fn table(&self, routine: Routine, anchor: usize) -> Result<SharedTable> {
        if let Some(t) = self
            .tables
            .lock()
            .expect("table cache")
            .get(&(routine, anchor))
        {
            return Ok(t.clone());
        }
        let built = Arc::new(self.build_table(routine, anchor)?);
        self.tables
            .lock()
            .expect("table cache")
            .insert((routine, anchor), built.clone());
        Ok(built)
    }

    fn build_table(&self, routine: Routine, anchor: usize) -> Result<Option<AnchorTable>> {
        let n = self.instance.len();
        let eps = &self.epsilon;
        let anchor_var = &self.variances[anchor];
        let gamma = match routine {
            Routine::Large if self.l >= 2 => self.gamma(anchor, false),
            _ => self.gamma(anchor, true),
        };
        // Range of admissible variance coordinates, in units of rho.
        let (rho, lo, hi) = if anchor_var.is_zero() {
            (None, BigInt::zero(), BigInt::zero())
        } else {
            let nn = int(n as i64);
            let e2 = eps * eps;
            let e4 = &e2 * &e2;
            match routine {
                Routine::Large => {
                    let hi = (int(2) * &self.c4 * &nn * &nn / &e4).floor().to_integer();
                    (Some(rho_large(anchor_var, n, eps)), BigInt::zero(), hi)
                }
                Routine::Small => {
                    let n4 = &nn * &nn * &nn * &nn;
                    let lo = (&self.c4 * &n4 / (&e4 * &e2) - &nn)
                        .ceil()
                        .to_integer()
                        .max(BigInt::zero());
                    let hi = (int(2) * &n4 * &nn / &e4).floor().to_integer();
                    (Some(rho_small(anchor_var, n, eps)), lo, hi)
                }
            }
        };
        if rho.is_some() && lo > hi {
            return Ok(None);
        }
        let quanta: Arc<[BigRational]> = match &rho {
            Some(r) => vec![int(1), r.clone()].into(),
            None => vec![int(1)].into(),
        };
        let mut caps = vec![None];
        if rho.is_some() {
            caps.push(Some(hi.clone()));
        }
        let items: Vec<DpItem> = gamma
            .iter()
            .map(|&i| {
                let mut coords = vec![BigInt::from(self.values[i])];
                if let Some(r) = &rho {
                    coords.push((&self.variances[i] / r).floor().to_integer());
                }
                DpItem {
                    size: QuantizedVector::new(coords, quanta.clone()).expect("non-negative"),
                    profit: -self.means[i].clone(),
                    id: i,
                }
            })
            .collect();
        let table = build_reach_table(&items, &caps, &self.dp)?;
        let mut by_value: HashMap<u64, Vec<Vec<usize>>> = HashMap::new();
        for c in table.enumerate_candidates(|key| key.len() < 2 || key[1] >= lo) {
            let v = c.key[0].to_u64().expect("profit sum fits");
            by_value.entry(v).or_default().push(c.subset);
        }
        Ok(Some(AnchorTable { by_value }))
    }

    fn complete(
        &self,
        routine: Routine,
        anchor: usize,
        prefix: &[usize],
        v: u64,
    ) -> Result<Option<Vec<usize>>> {
        let prefix_value = self.value_of(prefix);
        if prefix_value > v {
            return Ok(None);
        }
        let table = self.table(routine, anchor)?;
        let Some(table) = table.as_ref() else {
            return Ok(None);
        };
        let Some(candidates) = table.by_value.get(&(v - prefix_value)) else {
            return Ok(None);
        };
        for rest in candidates {
            let mut s: Vec<usize> = prefix.iter().chain(rest).copied().collect();
            s.sort_unstable();
            if self.sub_gate(&s)? {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }

    /// Large case: the type has exactly `L` entries.
    pub fn sk_hyper_large(&self, t: &EpsilonType, v: u64) -> Result<Option<Vec<usize>>> {
        let b = &t.prefix;
        if b.len() != self.l || b.is_empty() {
            return Ok(None);
        }
        let (anchor, prefix) = if self.l >= 2 {
            (b[self.l - 2], &b[..self.l - 1])
        } else {
            (b[0], &b[..0])
        };
        self.complete(Routine::Large, anchor, prefix, v)
    }

    /// Small case: the type has fewer than `L` entries.
    pub fn sk_hyper_small(&self, t: &EpsilonType, v: u64) -> Result<Option<Vec<usize>>> {
        let b = &t.prefix;
        if b.is_empty() || b.len() >= self.l {
            return Ok(None);
        }
        let tlen = b.len();
        self.complete(Routine::Small, b[tlen - 1], &b[..tlen - 1], v)
    }

    /// True when the type's own items have no critical index, so the type is
    /// the whole set it describes.
    pub fn is_saturated(&self, t: &EpsilonType) -> bool {
        let vars: Vec<BigRational> = t
            .prefix
            .iter()
            .map(|&i| self.variances[i].clone())
            .collect();
        t.len() < self.l && critical_index(&vars, &self.threshold()).index.is_none()
    }

    /// Dispatch on the type length.
    pub fn sk_hyper(&self, t: &EpsilonType, v: u64) -> Result<Option<Vec<usize>>> {
        if t.is_empty() {
            return Ok(if v == 0 && self.sub_gate(&[])? {
                Some(Vec::new())
            } else {
                None
            });
        }
        if t.len() == self.l {
            return self.sk_hyper_large(t, v);
        }
        if let Some(s) = self.sk_hyper_small(t, v)? {
            return Ok(Some(s));
        }
        if self.value_of(&t.prefix) == v && self.is_saturated(t) {
            let mut s = t.prefix.clone();
            s.sort_unstable();
            if self.sub_gate(&s)? {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }
}

/// Hypercontractivity constant setup for a run.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperSetup {
    pub c: f64,
    pub c4: BigRational,
    pub l: u64,
}

pub fn hyper_setup(
    instance: &Instance,
    epsilon: &BigRational,
    c_override: Option<f64>,
) -> Result<HyperSetup> {
    let c4 = match c_override {
        Some(c) if c.is_finite() && c >= 1.0 => from_f64(c.powi(4))?,
        Some(c) => {
            return Err(Error::InvalidArgument(format!(
                "hypercontractivity constant must be >= 1, got {c}"
            )))
        }
        None => max_kurtosis(&instance.dists()),
    };
    let l = type_cap(&c4, epsilon);
    Ok(HyperSetup {
        c: to_f64(&c4).powf(0.25),
        c4,
        l,
    })
}

/// Integer-profit driver: scan target profits from the top and return the
/// first set that a type completes and the outer gate accepts.
pub fn solve_hyper_bounded(instance: &Instance, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let eps = &cfg.epsilon;
    let delta = eps / int(8);
    let setup = hyper_setup(instance, &delta, cfg.c_override)?;
    let gate = OverflowGate::new(instance, cfg.gate_for(0x48))?;
    let l = usize::try_from(setup.l).unwrap_or(usize::MAX);
    let ctx = HyperContext::new(
        instance,
        delta.clone(),
        setup.c4.clone(),
        l,
        &gate,
        cfg.dp.clone(),
    )?;
    let types = enumerate_types(&ctx.order, setup.l, cfg.type_budget)?;
    let n = instance.len() as u64;
    let m = ctx.values.iter().copied().max().unwrap_or(0);
    let v_max = (n * m).min(ctx.values.iter().sum());
    // "<=_{2 delta} p + 6 delta"
    let outer = to_f64(&(&instance.budget + &delta * int(6)));
    let outer_tau = to_f64(&(&delta * int(2)));

    let mut solution = Solution::empty("hyper", eps.clone(), cfg.seed);
    let mut found = None;
    'scan: for v in (0..=v_max).rev() {
        for t in &types {
            if let Some(s) = ctx.sk_hyper(t, v)? {
                if gate.leq(&s, outer, outer_tau)? {
                    found = Some(s);
                    break 'scan;
                }
            }
        }
    }
    match found {
        Some(s) => {
            solution.total_profit = instance.profit_of(&s);
            solution.selected = s;
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

/// How rational profits were mapped to integers.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfitScaling {
    /// Original indices of the kept items, in original order.
    pub kept: Vec<usize>,
    /// Scale `K`: integer profit is `floor(v / K)`.
    pub scale: Option<BigRational>,
    /// Bound `M = ceil(n / eps)` on the integer profits.
    pub bound: u64,
    /// Original index of the most profitable item that fits alone.
    pub anchor: Option<usize>,
}

/// Drop items that cannot fit alone and scale the remaining profits to
/// integers in `0..=ceil(n/eps)`.
pub fn reduce_profits(
    instance: &Instance,
    epsilon: &BigRational,
) -> Result<(Instance, ProfitScaling)> {
    if let Some(i) = instance
        .items
        .iter()
        .position(|it| !it.profit.is_positive())
    {
        return Err(Error::InvalidInstance(format!(
            "item {i} must have a positive profit"
        )));
    }
    let n = instance.len();
    let bound = (int(n as i64) / epsilon)
        .ceil()
        .to_integer()
        .to_u64()
        .unwrap_or(u64::MAX);
    let mut sorted: Vec<usize> = (0..n).collect();
    sorted.sort_by(|&a, &b| {
        instance.items[a]
            .profit
            .cmp(&instance.items[b].profit)
            .then(a.cmp(&b))
    });
    let budget = to_f64(&instance.budget);
    let pos = sorted
        .iter()
        .rposition(|&i| instance.items[i].dist.tail_prob(&instance.capacity) <= budget);
    let Some(pos) = pos else {
        let empty = Instance::new(
            Vec::new(),
            instance.capacity.clone(),
            instance.budget.clone(),
        )?;
        return Ok((
            empty,
            ProfitScaling {
                kept: Vec::new(),
                scale: None,
                bound,
                anchor: None,
            },
        ));
    };
    let anchor = sorted[pos];
    let scale = epsilon * &instance.items[anchor].profit / int(n as i64);
    let mut kept: Vec<usize> = sorted[..=pos].to_vec();
    kept.sort_unstable();
    let items = kept
        .iter()
        .map(|&i| Item {
            dist: instance.items[i].dist.clone(),
            profit: BigRational::from_integer(
                (&instance.items[i].profit / &scale).floor().to_integer(),
            ),
        })
        .collect();
    let reduced = Instance::new(items, instance.capacity.clone(), instance.budget.clone())?;
    Ok((
        reduced,
        ProfitScaling {
            kept,
            scale: Some(scale),
            bound,
            anchor: Some(anchor),
        },
    ))
}

/// Full scheme for rational profits.
pub fn solve_hyper(instance: &Instance, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    if let Some(i) = instance
        .items
        .iter()
        .position(|it| it.dist.can_be_negative())
    {
        let msg = format!("item {i} can take negative sizes; sizes are treated as real-valued");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let (reduced, scaling) = reduce_profits(instance, &cfg.epsilon)?;
    let mut solution = if reduced.is_empty() {
        let mut s = Solution::empty("hyper", cfg.epsilon.clone(), cfg.seed);
        s.warnings
            .push("no item fits alone; returning the empty set".into());
        s
    } else {
        let mut s = solve_hyper_bounded(&reduced, cfg)?;
        s.selected = s.selected.iter().map(|&i| scaling.kept[i]).collect();
        s.total_profit = instance.profit_of(&s.selected);
        s
    };
    let gate = OverflowGate::new(instance, cfg.gate_for(0x48))?;
    solution.overflow = Some(gate.report(&solution.selected));
    warnings.append(&mut solution.warnings);
    solution.warnings = warnings;
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateConfig;

    fn vars(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn critical_index_examples() {
        let v = vars(&[8, 4, 2, 1]);
        assert_eq!(critical_index(&v, &ratio(3, 5)).index, Some(1));
        assert_eq!(critical_index(&v, &ratio(3, 10)).index, None);
        assert_eq!(critical_index(&vars(&[5; 6]), &ratio(1, 6)).index, Some(1));
        let zero = critical_index(&vars(&[0, 0]), &ratio(1, 100));
        assert_eq!(
            zero,
            CriticalIndex {
                index: Some(1),
                zero_tail: true
            }
        );
        let mixed = critical_index(&vars(&[3, 2, 0]), &ratio(1, 100));
        assert_eq!(
            mixed,
            CriticalIndex {
                index: Some(3),
                zero_tail: true
            }
        );
    }

    #[test]
    fn type_enumeration() {
        let types = enumerate_types(&[0, 1, 2], 1, 100).unwrap();
        let prefixes: Vec<Vec<usize>> = types.into_iter().map(|t| t.prefix).collect();
        assert_eq!(prefixes, vec![vec![], vec![0], vec![1], vec![2]]);
        assert_eq!(
            enumerate_types(&[0, 1, 2], 0, 100).unwrap(),
            vec![EpsilonType { prefix: vec![] }]
        );
        // Order [1, 0]: only the variance-consistent order appears.
        let two = enumerate_types(&[1, 0], 2, 100).unwrap();
        assert_eq!(two.last().unwrap().prefix, vec![1, 0]);
        assert_eq!(two.len(), 4);
        let err = enumerate_types(&(0..20).collect::<Vec<_>>(), 20, 1000).unwrap_err();
        assert!(err.is_budget());
        assert!(err.to_string().contains("1048576"));
    }

    #[test]
    fn equal_variances_order_by_index() {
        assert_eq!(variance_order(&vars(&[1, 3, 1, 3])), vec![1, 3, 0, 2]);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_large(&int(1), 4, &ratio(1, 2)), ratio(1, 128));
        assert_eq!(rho_small(&int(1), 4, &ratio(1, 2)), ratio(1, 8192));
    }

    #[test]
    fn type_cap_values() {
        // c^4 = 3, eps = 1/2: 3 * 4 * 1 = 12.
        assert_eq!(type_cap(&int(3), &ratio(1, 2)), 12);
        assert_eq!(type_cap(&int(1), &ratio(1, 4)), 32);
    }

    fn items(specs: Vec<(SizeDistribution, i64)>) -> Vec<Item> {
        specs
            .into_iter()
            .map(|(dist, v)| Item {
                dist,
                profit: int(v),
            })
            .collect()
    }

    #[test]
    fn reduce_profits_example() {
        let inst = Instance::new(
            vec![
                Item {
                    dist: SizeDistribution::point(int(1)),
                    profit: int(1),
                },
                Item {
                    dist: SizeDistribution::point(int(1)),
                    profit: ratio(5, 2),
                },
                Item {
                    dist: SizeDistribution::point(int(1)),
                    profit: int(4),
                },
            ],
            int(1),
            int(0),
        )
        .unwrap();
        let (reduced, scaling) = reduce_profits(&inst, &ratio(1, 2)).unwrap();
        assert_eq!(scaling.scale, Some(ratio(2, 3)));
        let w: Vec<BigRational> = reduced.items.iter().map(|i| i.profit.clone()).collect();
        assert_eq!(w, vec![int(1), int(3), int(6)]);
        assert_eq!(scaling.bound, 6);
    }

    #[test]
    fn reduce_profits_edge_cases() {
        let eps = ratio(1, 4);
        let same = Instance::new(
            items(vec![(SizeDistribution::point(int(1)), 7); 3]),
            int(5),
            int(0),
        )
        .unwrap();
        let (r, _) = reduce_profits(&same, &eps).unwrap();
        assert!(r.items.iter().all(|i| i.profit == int(12)));
        let one = Instance::new(
            items(vec![(SizeDistribution::point(int(1)), 7)]),
            int(5),
            int(0),
        )
        .unwrap();
        assert_eq!(
            reduce_profits(&one, &eps).unwrap().0.items[0].profit,
            int(4)
        );
        // Items that cannot fit alone are dropped.
        let big = Instance::new(
            items(vec![
                (SizeDistribution::point(int(9)), 50),
                (SizeDistribution::point(int(1)), 1),
            ]),
            int(5),
            int(0),
        )
        .unwrap();
        let (r, s) = reduce_profits(&big, &eps).unwrap();
        assert_eq!(s.kept, vec![1]);
        assert_eq!(r.len(), 1);
        let none = Instance::new(
            items(vec![(SizeDistribution::point(int(9)), 5)]),
            int(5),
            int(0),
        )
        .unwrap();
        assert!(reduce_profits(&none, &eps).unwrap().0.is_empty());
    }

    #[test]
    fn deterministic_example() {
        let inst = Instance::new(
            vec![
                Item {
                    dist: SizeDistribution::point(int(1)),
                    profit: ratio(33, 10),
                },
                Item {
                    dist: SizeDistribution::point(int(1)),
                    profit: ratio(11, 10),
                },
            ],
            int(1),
            int(0),
        )
        .unwrap();
        let sol = solve_hyper(&inst, &SolverConfig::new(ratio(1, 10), 0)).unwrap();
        assert_eq!(sol.selected, vec![0]);
    }

    #[test]
    fn single_item_matches_brute_force() {
        let inst = Instance::new(
            items(vec![(SizeDistribution::Exponential { rate: 1.0 }, 3)]),
            int(2),
            ratio(1, 5),
        )
        .unwrap();
        // Pr[Exp(1) > 2] = e^-2 = .135 <= .2
        let sol = solve_hyper_bounded(&inst, &SolverConfig::new(ratio(1, 4), 0)).unwrap();
        assert_eq!(sol.selected, vec![0]);
        let tight = Instance::new(
            items(vec![(SizeDistribution::Exponential { rate: 1.0 }, 3)]),
            int(2),
            ratio(1, 20),
        )
        .unwrap();
        let sol = solve_hyper_bounded(&tight, &SolverConfig::new(ratio(1, 4), 0)).unwrap();
        assert!(sol.selected.is_empty());
    }

    #[test]
    fn full_budget_takes_everything() {
        let inst = Instance::new(
            items(vec![
                (
                    SizeDistribution::Gaussian {
                        mean: 3.0,
                        var: 1.0,
                    },
                    2,
                ),
                (SizeDistribution::Exponential { rate: 0.5 }, 5),
                (
                    SizeDistribution::Laplace {
                        location: 1.0,
                        scale: 2.0,
                    },
                    1,
                ),
            ]),
            int(0),
            int(1),
        )
        .unwrap();
        let sol = solve_hyper(&inst, &SolverConfig::new(ratio(1, 4), 0)).unwrap();
        assert_eq!(sol.selected, vec![0, 1, 2]);
        assert!(!sol.warnings.is_empty());
    }

    fn context_instance() -> Instance {
        let specs: Vec<(SizeDistribution, i64)> = (1..=6)
            .map(|i| {
                (
                    SizeDistribution::Gaussian {
                        mean: 1.0,
                        var: (7 - i) as f64,
                    },
                    1 + (i % 3),
                )
            })
            .collect();
        Instance::new(items(specs), int(12), ratio(1, 2)).unwrap()
    }

    #[test]
    fn large_case_keeps_the_prefix_and_draws_from_gamma() {
        let inst = context_instance();
        let gate = OverflowGate::new(&inst, GateConfig::default()).unwrap();
        let ctx =
            HyperContext::new(&inst, ratio(1, 2), int(3), 3, &gate, DpConfig::default()).unwrap();
        let types = enumerate_types(&ctx.order, 3, 1000).unwrap();
        let mut hits = 0;
        for t in types.iter().filter(|t| t.len() == 3) {
            let anchor = t.prefix[1];
            let gamma = ctx.gamma(anchor, false);
            for v in 0..=12 {
                if let Some(s) = ctx.sk_hyper_large(t, v).unwrap() {
                    hits += 1;
                    assert!(t.prefix[..2].iter().all(|i| s.contains(i)));
                    assert!(s
                        .iter()
                        .all(|i| t.prefix[..2].contains(i) || gamma.contains(i)));
                    assert_eq!(ctx.value_of(&s), v);
                }
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn beta_rounding_stays_below_rho() {
        let inst = context_instance();
        let gate = OverflowGate::new(&inst, GateConfig::default()).unwrap();
        let ctx =
            HyperContext::new(&inst, ratio(1, 2), int(3), 3, &gate, DpConfig::default()).unwrap();
        for &anchor in &ctx.order {
            let rho = rho_large(&ctx.variances[anchor], inst.len(), &ctx.epsilon);
            for i in ctx.gamma(anchor, false) {
                let beta = (&ctx.variances[i] / &rho).floor() * &rho;
                let gap = &ctx.variances[i] - beta;
                assert!(!gap.is_negative() && gap < rho);
            }
        }
    }

    #[test]
    fn critical_index_is_monotone_in_epsilon() {
        let v = vars(&[50, 30, 20, 10, 9, 5, 1]);
        let mut last = usize::MAX;
        for k in 1..40 {
            let t = ratio(k, 40);
            let idx = critical_index(&v, &t).index.unwrap_or(usize::MAX);
            assert!(idx <= last);
            last = idx;
        }
    }
}
