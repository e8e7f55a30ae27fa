//! Multidimensional exact-target knapsack DP over quantized size vectors.
//!
//! One pass over the items builds a table of every reachable size vector (each
//! coordinate an integer multiple of its quantum) with the best profit among
//! subsets that hit it exactly. Candidates are then read off in descending
//! profit order.

use crate::error::{Error, Result};
use crate::rational::format_rational;
use indexmap::IndexMap;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;
use std::sync::Arc;

/// Integer coordinates with per-coordinate rational quanta.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedVector {
    coords: Vec<BigInt>,
    quanta: Arc<[BigRational]>,
}

impl QuantizedVector {
    pub fn new(coords: Vec<BigInt>, quanta: Arc<[BigRational]>) -> Result<Self> {
        if coords.len() != quanta.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates but {} quanta",
                coords.len(),
                quanta.len()
            )));
        }
        if coords.iter().any(|c| c.is_negative()) {
            return Err(Error::InvalidArgument(
                "quantized coordinates must be non-negative".into(),
            ));
        }
        if quanta.iter().any(|q| !q.is_positive()) {
            return Err(Error::InvalidArgument("quanta must be positive".into()));
        }
        Ok(QuantizedVector { coords, quanta })
    }

    /// Fails unless every value is an exact non-negative multiple of its quantum.
    pub fn from_values(values: &[BigRational], quanta: Arc<[BigRational]>) -> Result<Self> {
        let mut coords = Vec::with_capacity(values.len());
        for (v, q) in values.iter().zip(quanta.iter()) {
            let c = v / q;
            if !c.is_integer() {
                return Err(Error::InvalidArgument(format!(
                    "{} is not a multiple of {}",
                    format_rational(v),
                    format_rational(q)
                )));
            }
            coords.push(c.to_integer());
        }
        Self::new(coords, quanta)
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    pub fn quanta(&self) -> &Arc<[BigRational]> {
        &self.quanta
    }

    pub fn values(&self) -> Vec<BigRational> {
        self.coords
            .iter()
            .zip(self.quanta.iter())
            .map(|(c, q)| BigRational::from_integer(c.clone()) * q)
            .collect()
    }

    pub fn dims(&self) -> usize {
        self.coords.len()
    }
}

#[derive(Clone, Debug)]
pub struct DpItem {
    pub size: QuantizedVector,
    pub profit: BigRational,
    pub id: usize,
}

#[derive(Clone, Debug)]
pub struct DpConfig {
    /// Largest number of table entries.
    pub max_entries: usize,
    /// Largest value of entries times dimensions.
    pub max_cells: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            max_entries: 2_000_000,
            max_cells: 20_000_000,
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    profit: BigRational,
    item: Option<usize>,
    prev: Option<usize>,
}

/// Reachable size vectors with best profits and back-links.
#[derive(Clone, Debug)]
pub struct ReachTable {
    dims: usize,
    quanta: Option<Arc<[BigRational]>>,
    index: IndexMap<Vec<BigInt>, usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub key: Vec<BigInt>,
    pub profit: BigRational,
    /// Item ids, ascending.
    pub subset: Vec<usize>,
}

fn cap_product(caps: &[Option<BigInt>]) -> String {
    let mut product = BigInt::from(1);
    for c in caps {
        match c {
            Some(c) => product *= c + 1,
            None => return "unbounded".into(),
        }
    }
    product.to_string()
}

/// Build the table of all vectors reachable by subsets of `items`, keeping only
/// vectors whose coordinates stay within `caps` (`None` = no cap).
pub fn build_reach_table(
    items: &[DpItem],
    caps: &[Option<BigInt>],
    cfg: &DpConfig,
) -> Result<ReachTable> {
    let dims = caps.len();
    let quanta = items.first().map(|it| it.size.quanta().clone());
    for it in items {
        if it.size.dims() != dims {
            return Err(Error::InvalidArgument(format!(
                "item {} has {} coordinates, caps have {dims}",
                it.id,
                it.size.dims()
            )));
        }
        let q = quanta.as_ref().expect("non-empty");
        if !Arc::ptr_eq(it.size.quanta(), q) && it.size.quanta()[..] != q[..] {
            return Err(Error::InvalidArgument(format!(
                "item {} uses different quanta",
                it.id
            )));
        }
    }
    let mut table = ReachTable {
        dims,
        quanta,
        index: IndexMap::new(),
        nodes: vec![Node {
            profit: BigRational::zero(),
            item: None,
            prev: None,
        }],
    };
    table.index.insert(vec![BigInt::zero(); dims], 0);

    for it in items {
        // Entries present before this item; their nodes must not see it.
        let before: Vec<usize> = table.index.values().copied().collect();
        for (slot, &node) in before.iter().enumerate() {
            let (key, _) = table.index.get_index(slot).expect("slot exists");
            let mut next = Vec::with_capacity(dims);
            let mut fits = true;
            for ((k, s), cap) in key.iter().zip(it.size.coords()).zip(caps) {
                let v = k + s;
                if cap.as_ref().is_some_and(|c| &v > c) {
                    fits = false;
                    break;
                }
                next.push(v);
            }
            if !fits {
                continue;
            }
            let profit = &table.nodes[node].profit + &it.profit;
            let better = match table.index.get(&next) {
                Some(&existing) => profit > table.nodes[existing].profit,
                None => true,
            };
            if better {
                table.nodes.push(Node {
                    profit,
                    item: Some(it.id),
                    prev: Some(node),
                });
                let id = table.nodes.len() - 1;
                table.index.insert(next, id);
                let entries = table.index.len();
                if entries > cfg.max_entries || entries.saturating_mul(dims.max(1)) > cfg.max_cells
                {
                    return Err(Error::budget(
                        "reachable table",
                        format!(
                            "over {entries} entries of {dims} coordinates (cap product {})",
                            cap_product(caps)
                        ),
                        format!("{} entries / {} cells", cfg.max_entries, cfg.max_cells),
                        "use a larger epsilon or fewer items",
                    ));
                }
            }
        }
    }
    Ok(table)
}

impl ReachTable {
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn quanta(&self) -> Option<&Arc<[BigRational]>> {
        self.quanta.as_ref()
    }

    pub fn keys(&self) -> impl Iterator<Item = &Vec<BigInt>> {
        self.index.keys()
    }

    fn subset_of(&self, mut node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        loop {
            let n = &self.nodes[node];
            match (n.item, n.prev) {
                (Some(item), Some(prev)) => {
                    out.push(item);
                    node = prev;
                }
                _ => break,
            }
        }
        out.sort_unstable();
        out
    }

    pub fn get(&self, key: &[BigInt]) -> Option<(BigRational, Vec<usize>)> {
        let &node = self.index.get(key)?;
        Some((self.nodes[node].profit.clone(), self.subset_of(node)))
    }

    pub fn best_profit(&self, key: &[BigInt]) -> Option<&BigRational> {
        self.index.get(key).map(|&n| &self.nodes[n].profit)
    }

    /// Entries passing `filter`, by profit descending then key ascending.
    pub fn enumerate_candidates<'a, F>(&'a self, filter: F) -> impl Iterator<Item = Candidate> + 'a
    where
        F: Fn(&[BigInt]) -> bool,
    {
        let mut chosen: Vec<(&Vec<BigInt>, usize)> = self
            .index
            .iter()
            .filter(|(k, _)| filter(k))
            .map(|(k, &n)| (k, n))
            .collect();
        chosen.sort_by(|a, b| {
            self.nodes[b.1]
                .profit
                .cmp(&self.nodes[a.1].profit)
                .then_with(|| a.0.cmp(b.0))
        });
        chosen.into_iter().map(move |(key, node)| Candidate {
            key: key.clone(),
            profit: self.nodes[node].profit.clone(),
            subset: self.subset_of(node),
        })
    }

    /// JSON dump for debugging: one object per entry.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Entry {
            key: Vec<String>,
            profit: String,
            subset: Vec<usize>,
        }
        let entries: Vec<Entry> = self
            .enumerate_candidates(|_| true)
            .map(|c| Entry {
                key: c.key.iter().map(|k| k.to_string()).collect(),
                profit: format_rational(&c.profit),
                subset: c.subset,
            })
            .collect();
        serde_json::json!({
            "dims": self.dims,
            "quanta": self.quanta.as_ref().map(|q| q.iter().map(format_rational).collect::<Vec<_>>()),
            "entries": entries,
        })
    }
}

pub fn enumerate_candidates<'a, F>(
    table: &'a ReachTable,
    filter: F,
) -> impl Iterator<Item = Candidate> + 'a
where
    F: Fn(&[BigInt]) -> bool,
{
    table.enumerate_candidates(filter)
}

/// Best subset hitting `target` exactly, if any.
pub fn solve_target(
    items: &[DpItem],
    target: &QuantizedVector,
    caps: &[Option<BigInt>],
    cfg: &DpConfig,
) -> Result<Option<(Vec<usize>, BigRational)>> {
    let table = build_reach_table(items, caps, cfg)?;
    Ok(table
        .get(target.coords())
        .map(|(profit, subset)| (subset, profit)))
}
