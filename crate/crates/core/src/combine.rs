//! Walk tuples of per-group candidates in descending total profit.
//!
//! Each group offers a list sorted by profit descending. Tuples pick one entry
//! per group and come out ordered by total profit descending, then by index
//! tuple ascending. Every tuple has exactly one parent (decrement its last
//! non-zero position), so a heap over children never produces duplicates.

use num_rational::BigRational;
use num_traits::Zero;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, PartialEq, Eq)]
struct Entry {
    total: BigRational,
    tuple: Vec<usize>,
    /// Positions at or after this one may still be advanced.
    from: usize,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total
            .cmp(&other.total)
            .then_with(|| other.tuple.cmp(&self.tuple))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub struct DescendingTuples<'a> {
    lists: &'a [Vec<BigRational>],
    heap: BinaryHeap<Entry>,
}

impl<'a> DescendingTuples<'a> {
    /// `lists[g]` must be sorted descending. Empty groups yield no tuples.
    pub fn new(lists: &'a [Vec<BigRational>]) -> Self {
        debug_assert!(lists.iter().all(|l| l.windows(2).all(|w| w[0] >= w[1])));
        let mut heap = BinaryHeap::new();
        if lists.iter().all(|l| !l.is_empty()) {
            let total = lists
                .iter()
                .map(|l| &l[0])
                .fold(BigRational::zero(), |a, b| a + b);
            heap.push(Entry {
                total,
                tuple: vec![0; lists.len()],
                from: 0,
            });
        }
        DescendingTuples { lists, heap }
    }
}

impl Iterator for DescendingTuples<'_> {
    type Item = (Vec<usize>, BigRational);

    fn next(&mut self) -> Option<Self::Item> {
        let Entry { total, tuple, from } = self.heap.pop()?;
        for g in from..tuple.len() {
            let i = tuple[g];
            if i + 1 < self.lists[g].len() {
                let mut child = tuple.clone();
                child[g] += 1;
                let child_total = &total - &self.lists[g][i] + &self.lists[g][i + 1];
                self.heap.push(Entry {
                    total: child_total,
                    tuple: child,
                    from: g,
                });
            }
        }
        Some((tuple, total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use itertools::Itertools;
    use proptest::prelude::*;

    fn lists(raw: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
        raw.iter()
            .map(|l| {
                let mut l: Vec<BigRational> = l.iter().map(|&x| int(x)).collect();
                l.sort_by(|a, b| b.cmp(a));
                l
            })
            .collect()
    }

    #[test]
    fn small_example() {
        let l = lists(&[vec![5, 1], vec![3, 2]]);
        let out: Vec<_> = DescendingTuples::new(&l).collect();
        assert_eq!(
            out,
            vec![
                (vec![0, 0], int(8)),
                (vec![0, 1], int(7)),
                (vec![1, 0], int(4)),
                (vec![1, 1], int(3)),
            ]
        );
    }

    #[test]
    fn empty_group_gives_nothing() {
        let l = lists(&[vec![1], vec![]]);
        assert_eq!(DescendingTuples::new(&l).count(), 0);
        let none: Vec<Vec<BigRational>> = vec![];
        assert_eq!(
            DescendingTuples::new(&none).collect::<Vec<_>>(),
            vec![(vec![], int(0))]
        );
    }

    proptest! {
        #[test]
        fn matches_sorted_cartesian_product(raw in prop::collection::vec(prop::collection::vec(-5i64..6, 1..5), 1..4)) {
            let l = lists(&raw);
            let got: Vec<_> = DescendingTuples::new(&l).collect();
            let mut want: Vec<(Vec<usize>, BigRational)> = l
                .iter()
                .map(|g| 0..g.len())
                .multi_cartesian_product()
                .map(|t| {
                    let total = t.iter().enumerate().map(|(g, &i)| l[g][i].clone()).sum();
                    (t, total)
                })
                .collect();
            want.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            prop_assert_eq!(got, want);
        }
    }
}
