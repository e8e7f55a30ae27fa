//! Seeded random instances of a few named families.

use crate::distributions::SizeDistribution;
use crate::error::{Error, Result};
use crate::instance::{Defaults, Instance, InstanceFile, Item};
use crate::rational::{int, ratio};
use crate::rng::stream;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Bernoulli sizes, including some near 0 and near 1.
    Bernoulli,
    /// Finite laws on one shared support of size `k`.
    Ksupport,
    /// Mixed Gaussian, exponential, Laplace, uniform and finite sizes.
    Hyper,
    /// Point masses with integer sizes; the budget is 0.
    Deterministic,
    /// Finite laws with independent small supports.
    Finite,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(Family::Bernoulli),
            "ksupport" => Ok(Family::Ksupport),
            "hyper" => Ok(Family::Hyper),
            "deterministic" => Ok(Family::Deterministic),
            "finite" => Ok(Family::Finite),
            _ => Err(Error::InvalidArgument(format!(
                "unknown family {s:?}; expected bernoulli, ksupport, hyper, deterministic or finite"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GenOptions {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    /// Support size for the `ksupport` family.
    pub k: usize,
    /// Give every item profit 1.
    pub unit_profits: bool,
}

impl GenOptions {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        GenOptions {
            family,
            n,
            seed,
            k: 2,
            unit_profits: false,
        }
    }
}

fn profit(rng: &mut ChaCha8Rng, opts: &GenOptions, max: i64) -> BigRational {
    if opts.unit_profits {
        int(1)
    } else {
        int(rng.random_range(1..=max))
    }
}

/// Probabilities `a_i / den` with every `a_i >= 1` summing to `den`.
fn random_probs(rng: &mut ChaCha8Rng, k: usize, den: i64) -> Vec<BigRational> {
    let mut cuts: Vec<i64> = (1..den).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<i64> = cuts[..k - 1].to_vec();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut out = Vec::with_capacity(k);
    for c in cuts.into_iter().chain(std::iter::once(den)) {
        out.push(ratio(c - prev, den));
        prev = c;
    }
    out
}

fn quarter(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> f64 {
    rng.random_range(lo..=hi) as f64 / 4.0
}

/// Random instance of the requested family. Equal options give equal files.
pub fn generate(opts: &GenOptions) -> Result<InstanceFile> {
    if opts.n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut rng = stream(
        opts.seed,
        &[0x6e, opts.family as u64, opts.n as u64, opts.k as u64],
    );
    let n = opts.n;
    let mut items = Vec::with_capacity(n);
    let (capacity, budget) = match opts.family {
        Family::Bernoulli => {
            for _ in 0..n {
                let p = match rng.random_range(0..10) {
                    0 => ratio(1, 1000),
                    1 => ratio(999, 1000),
                    _ => ratio(rng.random_range(1..100), 100),
                };
                items.push(Item {
                    dist: SizeDistribution::bernoulli(p)?,
                    profit: profit(&mut rng, opts, 20),
                });
            }
            let cap = rng.random_range(1..=(n as i64 / 2).max(1));
            (int(cap), ratio(rng.random_range(1..=10), 20))
        }
        Family::Ksupport => {
            if !(2..=6).contains(&opts.k) {
                return Err(Error::InvalidArgument(format!(
                    "k must lie in 2..=6, got {}",
                    opts.k
                )));
            }
            let mut values: Vec<i64> = (1..=6).collect();
            values.shuffle(&mut rng);
            let mut support: Vec<i64> = std::iter::once(0)
                .chain(values[..opts.k - 1].iter().copied())
                .collect();
            support.sort_unstable();
            let support: Vec<BigRational> = support.into_iter().map(int).collect();
            // A few prototype laws shared by many items.
            let prototypes: Vec<Vec<BigRational>> =
                (0..3).map(|_| random_probs(&mut rng, opts.k, 20)).collect();
            let mut mean_total = BigRational::from_integer(0.into());
            for _ in 0..n {
                let probs = prototypes[rng.random_range(0..prototypes.len())].clone();
                let dist = SizeDistribution::finite(support.clone(), probs)?;
                mean_total += dist.mean_rational();
                items.push(Item {
                    dist,
                    profit: profit(&mut rng, opts, 20),
                });
            }
            let cap = (mean_total * ratio(rng.random_range(4..=8), 10)).round();
            (cap, ratio(rng.random_range(1..=8), 20))
        }
        Family::Hyper => {
            let mut mean_total = 0.0;
            for _ in 0..n {
                let dist = match rng.random_range(0..5) {
                    0 => SizeDistribution::Gaussian {
                        mean: quarter(&mut rng, 4, 20),
                        var: quarter(&mut rng, 1, 16),
                    },
                    1 => SizeDistribution::Exponential {
                        rate: quarter(&mut rng, 2, 8),
                    },
                    2 => SizeDistribution::Laplace {
                        location: quarter(&mut rng, 4, 16),
                        scale: quarter(&mut rng, 1, 4),
                    },
                    3 => {
                        let a = quarter(&mut rng, 0, 8);
                        SizeDistribution::Uniform {
                            a,
                            b: a + quarter(&mut rng, 2, 12),
                        }
                    }
                    _ => {
                        let mut values: Vec<i64> = (0..=8).collect();
                        values.shuffle(&mut rng);
                        let mut support: Vec<i64> = values[..3].to_vec();
                        support.sort_unstable();
                        SizeDistribution::finite(
                            support.into_iter().map(int).collect(),
                            random_probs(&mut rng, 3, 20),
                        )?
                    }
                };
                mean_total += dist.moments().mean;
                items.push(Item {
                    dist,
                    profit: profit(&mut rng, opts, 20),
                });
            }
            let cap = (mean_total * rng.random_range(4..=8) as f64 / 10.0).round() as i64;
            (int(cap.max(1)), ratio(rng.random_range(1..=6), 20))
        }
        Family::Deterministic => {
            let mut total = 0;
            for _ in 0..n {
                let size = rng.random_range(1..=20);
                total += size;
                items.push(Item {
                    dist: SizeDistribution::point(int(size)),
                    profit: profit(&mut rng, opts, 50),
                });
            }
            (int((total * rng.random_range(3..=7) / 10).max(1)), int(0))
        }
        Family::Finite => {
            let mut mean_total = BigRational::from_integer(0.into());
            for _ in 0..n {
                let k = rng.random_range(2..=4);
                let mut values: Vec<i64> = (0..=10).collect();
                values.shuffle(&mut rng);
                let mut support: Vec<i64> = values[..k].to_vec();
                support.sort_unstable();
                let dist = SizeDistribution::finite(
                    support.into_iter().map(int).collect(),
                    random_probs(&mut rng, k, 20),
                )?;
                mean_total += dist.mean_rational();
                items.push(Item {
                    dist,
                    profit: profit(&mut rng, opts, 20),
                });
            }
            let cap = (mean_total * ratio(rng.random_range(4..=8), 10)).round();
            (cap, ratio(rng.random_range(1..=6), 20))
        }
    };
    let instance = Instance::new(items, capacity, budget)?;
    Ok(InstanceFile::from_instance(
        &instance,
        Defaults {
            seed: Some(opts.seed),
            ..Defaults::default()
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme_ksupport::common_support;

    const FAMILIES: [Family; 5] = [
        Family::Bernoulli,
        Family::Ksupport,
        Family::Hyper,
        Family::Deterministic,
        Family::Finite,
    ];

    #[test]
    fn same_seed_same_file() {
        for f in FAMILIES {
            let a = generate(&GenOptions::new(f, 10, 7)).unwrap().to_json();
            let b = generate(&GenOptions::new(f, 10, 7)).unwrap().to_json();
            assert_eq!(a, b);
            let c = generate(&GenOptions::new(f, 10, 8)).unwrap().to_json();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn files_round_trip() {
        for f in FAMILIES {
            for seed in 0..20 {
                let file = generate(&GenOptions::new(f, 9, seed)).unwrap();
                let back = InstanceFile::from_json(&file.to_json()).unwrap();
                assert_eq!(back, file);
                assert_eq!(back.instance().unwrap().len(), 9);
            }
        }
    }

    #[test]
    fn ksupport_items_share_support() {
        for k in 2..=4 {
            let mut opts = GenOptions::new(Family::Ksupport, 8, 3);
            opts.k = k;
            let inst = generate(&opts).unwrap().instance().unwrap();
            assert_eq!(common_support(&inst).unwrap().len(), k);
        }
    }

    #[test]
    fn unit_profits() {
        let mut opts = GenOptions::new(Family::Bernoulli, 6, 1);
        opts.unit_profits = true;
        let inst = generate(&opts).unwrap().instance().unwrap();
        assert!(inst.items.iter().all(|i| i.profit == int(1)));
    }

    #[test]
    fn family_names_parse() {
        assert_eq!("hyper".parse::<Family>().unwrap(), Family::Hyper);
        assert!("gaussian".parse::<Family>().is_err());
    }
}
