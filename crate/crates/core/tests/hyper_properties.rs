//! Properties of the bounded-kurtosis scheme's building blocks.

use num_rational::BigRational;
use proptest::prelude::*;
use rand::Rng;
use sknap::distributions::SizeDistribution;
use sknap::instance::{Instance, Item};
use sknap::rational::{int, ratio, to_f64};
use sknap::rng::stream;
use sknap::scheme_hyper::{
    critical_index, enumerate_types, reduce_profits, type_cap, variance_order,
};
use sknap::SolverConfig;

/// Two-sample Kolmogorov distance.
fn ks_distance(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut worst) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    worst
}

#[test]
fn replacing_the_tail_by_its_mean_barely_moves_the_cdf() {
    // Halving variances: each head holds half of what remains, so the
    // sequence has no critical index at eps = 1/2 and c^4 = 3.
    let eps = ratio(1, 2);
    let c4 = int(3);
    let l = type_cap(&c4, &eps) as usize;
    let vars: Vec<f64> = (0..20).map(|i| 0.5f64.powi(i)).collect();
    let exact: Vec<BigRational> = (0..20)
        .map(|i| BigRational::new(1.into(), num_traits::pow(2.into(), i)))
        .collect();
    assert_eq!(critical_index(&exact, &(&eps * &eps / &c4)).index, None);
    assert!(l < vars.len());

    let m = 100_000;
    let mut rng = stream(3, &[]);
    let normals: Vec<rand_distr::Normal<f64>> = vars
        .iter()
        .map(|v| rand_distr::Normal::new(1.0, v.sqrt()).unwrap())
        .collect();
    let mut full = Vec::with_capacity(m);
    let mut truncated = Vec::with_capacity(m);
    for _ in 0..m {
        let draws: Vec<f64> = normals.iter().map(|d| rng.sample(d)).collect();
        full.push(draws.iter().sum());
        truncated.push(draws[..l].iter().sum::<f64>() + (vars.len() - l) as f64);
    }
    let d = ks_distance(full, truncated);
    // Two one-sample DKW radii at confidence 1 - 1e-6.
    let mc_slack = 2.0 * ((2.0f64 / 1e-6).ln() / (2.0 * m as f64)).sqrt();
    assert!(d <= to_f64(&eps) / 8.0 + mc_slack, "distance {d}");
}

proptest! {
    #[test]
    fn types_are_variance_consistent(vars in prop::collection::vec(0u32..20, 1..8), l in 0u64..5) {
        let vars: Vec<BigRational> = vars.into_iter().map(|v| int(v as i64)).collect();
        let order = variance_order(&vars);
        let types = enumerate_types(&order, l, 1 << 20).unwrap();
        let n = vars.len();
        let expected: usize = (0..=(l as usize).min(n)).map(|t| binom(n, t)).sum();
        prop_assert_eq!(types.len(), expected);
        for t in &types {
            let ranks: Vec<usize> = t.prefix.iter().map(|i| order.iter().position(|j| j == i).unwrap()).collect();
            prop_assert!(ranks.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(t.prefix.windows(2).all(|w| vars[w[0]] >= vars[w[1]]));
        }
    }

    #[test]
    fn critical_index_shrinks_as_threshold_grows(vars in prop::collection::vec(1u32..50, 1..10), a in 1i64..100, b in 1i64..100) {
        let mut vars: Vec<BigRational> = vars.into_iter().map(|v| int(v as i64)).collect();
        vars.sort_by(|x, y| y.cmp(x));
        let (lo, hi) = (a.min(b), a.max(b));
        let k_lo = critical_index(&vars, &ratio(lo, 100)).index.unwrap_or(usize::MAX);
        let k_hi = critical_index(&vars, &ratio(hi, 100)).index.unwrap_or(usize::MAX);
        prop_assert!(k_hi <= k_lo);
    }

    #[test]
    fn reduced_profits_are_bounded(profits in prop::collection::vec(1i64..1000, 1..10), e in 1i64..10) {
        let eps = ratio(e, 10);
        let items: Vec<Item> = profits
            .iter()
            .map(|&p| Item { dist: SizeDistribution::point(int(1)), profit: ratio(p, 7) })
            .collect();
        let inst = Instance::new(items, int(1), int(0)).unwrap();
        let (reduced, scaling) = reduce_profits(&inst, &eps).unwrap();
        prop_assert_eq!(reduced.len(), profits.len());
        for it in &reduced.items {
            prop_assert!(it.profit >= int(0) && it.profit <= int(scaling.bound as i64));
        }
        // Rounding loses at most K per item.
        let k = scaling.scale.unwrap();
        for (orig, red) in inst.items.iter().zip(&reduced.items) {
            let back = &red.profit * &k;
            prop_assert!(back <= orig.profit && &orig.profit - &back < k);
        }
    }
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn zero_variance_items_are_handled() {
    let items = vec![
        Item {
            dist: SizeDistribution::point(int(2)),
            profit: int(3),
        },
        Item {
            dist: SizeDistribution::Gaussian {
                mean: 1.0,
                var: 0.25,
            },
            profit: int(2),
        },
        Item {
            dist: SizeDistribution::point(int(1)),
            profit: int(1),
        },
    ];
    let inst = Instance::new(items, int(4), ratio(1, 10)).unwrap();
    let sol = sknap::scheme_hyper::solve_hyper(&inst, &SolverConfig::new(ratio(1, 4), 0)).unwrap();
    // {0, 1} overflows with probability Pr[N(1, 1/4) > 2] = 0.023 and is the best set.
    assert_eq!(sol.selected, vec![0, 1]);
}
