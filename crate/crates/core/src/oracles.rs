//! Overflow-probability estimators, distance measures, reference laws and a
//! brute-force optimum for small instances.

use crate::distributions::{Sampler, SizeDistribution};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::pmf::{ApproxPmf, Pmf};
use crate::rational::{int, to_f64};
use crate::rng::{derive, stream};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default intermediate support cap for exact convolution.
pub const DEFAULT_ATOM_CAP: usize = 10_000_000;

const CHUNK: u64 = 16_384;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverflowEstimate {
    pub point_estimate: f64,
    pub half_width: f64,
    /// `1 - delta`.
    pub confidence: f64,
    pub samples_used: u64,
}

/// `ceil(ln(2/delta) / (2 tau^2))`.
pub fn hoeffding_samples(tau: f64, delta: f64) -> u64 {
    ((2.0 / delta).ln() / (2.0 * tau * tau)).ceil() as u64
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must lie in (0, 1), got {x}"
        )))
    }
}

/// Count how many of `samples` joint draws have a sum strictly above
/// `capacity`. Draws are split into fixed chunks with their own streams, so the
/// count does not depend on the thread count.
pub fn count_overflows(samplers: &[Sampler], capacity: f64, samples: u64, seed: u64) -> u64 {
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, &[c]);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut hits = 0u64;
            for _ in 0..len {
                let sum: f64 = samplers.iter().map(|s| s.sample(&mut rng)).sum();
                if sum > capacity {
                    hits += 1;
                }
            }
            hits
        })
        .sum()
}

/// Monte Carlo estimate of `Pr[sum > capacity]` with Hoeffding sample size.
pub fn mc_overflow<R: RngCore + ?Sized>(
    items: &[SizeDistribution],
    capacity: f64,
    tau: f64,
    delta: f64,
    rng: &mut R,
) -> Result<OverflowEstimate> {
    check_unit("tau", tau)?;
    check_unit("delta", delta)?;
    let m = hoeffding_samples(tau, delta);
    Ok(mc_overflow_with_samples(items, capacity, m, delta, rng))
}

/// Monte Carlo estimate with an explicit sample count; the half width is the
/// Hoeffding radius for that count at confidence `1 - delta`.
pub fn mc_overflow_with_samples<R: RngCore + ?Sized>(
    items: &[SizeDistribution],
    capacity: f64,
    samples: u64,
    delta: f64,
    rng: &mut R,
) -> OverflowEstimate {
    let samples = samples.max(1);
    let half_width = ((2.0 / delta).ln() / (2.0 * samples as f64)).sqrt();
    let seed = rng.next_u64();
    let point_estimate = if items.is_empty() {
        if 0.0 > capacity {
            1.0
        } else {
            0.0
        }
    } else {
        let samplers: Vec<Sampler> = items.iter().map(|d| d.sampler()).collect();
        count_overflows(&samplers, capacity, samples, seed) as f64 / samples as f64
    };
    OverflowEstimate {
        point_estimate,
        half_width,
        confidence: 1.0 - delta,
        samples_used: samples,
    }
}

/// The relation "overflow probability is at most `q` up to `tau`".
pub fn leq_check<R: RngCore + ?Sized>(
    items: &[SizeDistribution],
    capacity: f64,
    q: f64,
    tau: f64,
    delta: f64,
    rng: &mut R,
) -> Result<bool> {
    Ok(mc_overflow(items, capacity, tau, delta, rng)?.point_estimate <= q)
}

pub fn exact_sum_pmf(items: &[SizeDistribution]) -> Result<Pmf> {
    exact_sum_pmf_capped(items, DEFAULT_ATOM_CAP)
}

pub fn exact_sum_pmf_capped(items: &[SizeDistribution], atom_cap: usize) -> Result<Pmf> {
    let mut acc = Pmf::point(BigRational::zero());
    for d in items {
        acc = acc.convolve(&d.exact_pmf()?, atom_cap)?;
    }
    Ok(acc)
}

/// Exact `Pr[sum > capacity]` for finite laws.
pub fn exact_overflow(items: &[SizeDistribution], capacity: &BigRational) -> Result<BigRational> {
    Ok(exact_sum_pmf(items)?.tail_above(capacity))
}

/// Law of a sum of independent Bernoulli variables, in floating point.
pub fn pbd_pmf(probs: &[f64]) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for &p in probs {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &m) in pmf.iter().enumerate() {
            next[k] += m * (1.0 - p);
            next[k + 1] += m * p;
        }
        pmf = next;
    }
    pmf
}

pub fn pbd_approx_pmf(probs: &[f64]) -> ApproxPmf {
    let atoms = pbd_pmf(probs)
        .into_iter()
        .enumerate()
        .map(|(k, m)| (int(k as i64), m))
        .collect();
    ApproxPmf::new(atoms, 0.0)
}

/// Read access shared by exact and float pmfs.
pub trait PmfView {
    fn float_atoms(&self) -> Vec<(BigRational, f64)>;
    fn omitted(&self) -> f64;
}

impl PmfView for Pmf {
    fn float_atoms(&self) -> Vec<(BigRational, f64)> {
        self.atoms()
            .iter()
            .map(|(v, p)| (v.clone(), to_f64(p)))
            .collect()
    }
    fn omitted(&self) -> f64 {
        0.0
    }
}

impl PmfView for ApproxPmf {
    fn float_atoms(&self) -> Vec<(BigRational, f64)> {
        self.atoms.clone()
    }
    fn omitted(&self) -> f64 {
        self.omitted_mass
    }
}

fn union_grid(a: &impl PmfView, b: &impl PmfView) -> BTreeMap<BigRational, (f64, f64)> {
    let mut grid: BTreeMap<BigRational, (f64, f64)> = BTreeMap::new();
    for (v, p) in a.float_atoms() {
        grid.entry(v).or_default().0 += p;
    }
    for (v, p) in b.float_atoms() {
        grid.entry(v).or_default().1 += p;
    }
    grid
}

/// Half the l1 distance over the union grid. Omitted tail mass counts as
/// disagreement, so the value never understates the true distance.
pub fn tv_distance(a: &impl PmfView, b: &impl PmfView) -> f64 {
    let l1: f64 = union_grid(a, b).values().map(|(x, y)| (x - y).abs()).sum();
    (0.5 * (l1 + a.omitted() + b.omitted())).min(1.0)
}

pub fn tv_distance_exact(a: &Pmf, b: &Pmf) -> BigRational {
    let mut grid: BTreeMap<&BigRational, BigRational> = BTreeMap::new();
    for (v, p) in a.atoms() {
        *grid.entry(v).or_insert_with(BigRational::zero) += p;
    }
    for (v, p) in b.atoms() {
        *grid.entry(v).or_insert_with(BigRational::zero) -= p;
    }
    grid.values().map(|d| d.abs()).sum::<BigRational>() / int(2)
}

/// Largest cdf gap over the union grid.
pub fn cdf_distance(a: &impl PmfView, b: &impl PmfView) -> f64 {
    let (mut fa, mut fb, mut worst) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in union_grid(a, b).values() {
        fa += x;
        fb += y;
        worst = worst.max((fa - fb).abs());
    }
    worst
}

/// Largest gap between a step cdf and a continuous cdf. The supremum is
/// attained at an atom, from the left or the right.
pub fn cdf_distance_to(a: &impl PmfView, cdf: impl Fn(f64) -> f64) -> f64 {
    let mut f = 0.0f64;
    let mut worst = 0.0f64;
    for (v, p) in a.float_atoms() {
        let g = cdf(to_f64(&v));
        worst = worst.max((f - g).abs());
        f += p;
        worst = worst.max((f - g).abs());
    }
    worst
}

fn ln_poisson(k: u64, lambda: f64) -> f64 {
    k as f64 * lambda.ln() - lambda - statrs::function::gamma::ln_gamma(k as f64 + 1.0)
}

/// `Poi(lambda)` truncated to a window whose complement has mass at most
/// `tail_cut`.
pub fn poisson_pmf(lambda: f64, tail_cut: f64) -> Result<ApproxPmf> {
    check_unit("tail_cut", tail_cut)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(ApproxPmf::new(vec![(int(0), 1.0)], 0.0));
    }
    // Grow a window around the mode until the kept mass is large enough.
    let mode = lambda.floor() as u64;
    let mass = |k: u64| ln_poisson(k, lambda).exp();
    let mut lo = mode;
    let mut hi = mode;
    let mut kept = mass(mode);
    while 1.0 - kept > tail_cut {
        let left = if lo > 0 { mass(lo - 1) } else { 0.0 };
        let right = mass(hi + 1);
        if lo > 0 && left >= right {
            lo -= 1;
            kept += left;
        } else {
            hi += 1;
            kept += right;
        }
        if right == 0.0 && (lo == 0 || left == 0.0) {
            break;
        }
    }
    let atoms = (lo..=hi).map(|k| (int(k as i64), mass(k))).collect();
    Ok(ApproxPmf::new(atoms, (1.0 - kept).max(0.0)).renormalize())
}

/// Shift and rate of the translated Poisson law with mean `mu` and variance
/// `sigma2`.
pub fn translated_poisson_params(mu: f64, sigma2: f64) -> (i64, f64) {
    let shift = (mu - sigma2).floor() as i64;
    (shift, mu - shift as f64)
}

pub fn translated_poisson_pmf(mu: f64, sigma2: f64, tail_cut: f64) -> Result<ApproxPmf> {
    if sigma2.is_nan() || sigma2 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    let (shift, lambda) = translated_poisson_params(mu, sigma2);
    let base = poisson_pmf(lambda, tail_cut)?;
    let shift = int(shift);
    Ok(ApproxPmf {
        atoms: base
            .atoms
            .into_iter()
            .map(|(v, p)| (v + &shift, p))
            .collect(),
        ..base
    })
}

/// Largest fraction of sorted samples inside a closed window of width `t`.
pub fn levy_concentration_of_samples(mut xs: Vec<f64>, t: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let mut best = 0usize;
    let mut lo = 0usize;
    for hi in 0..xs.len() {
        while xs[hi] - xs[lo] > t {
            lo += 1;
        }
        best = best.max(hi - lo + 1);
    }
    best as f64 / xs.len() as f64
}

/// Monte Carlo estimate of `sup_a Pr[a <= sum <= a + t]`.
pub fn levy_concentration<R: Rng + ?Sized>(
    items: &[SizeDistribution],
    t: f64,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "window width must be positive, got {t}"
        )));
    }
    let samplers: Vec<Sampler> = items.iter().map(|d| d.sampler()).collect();
    let xs = (0..samples)
        .map(|_| samplers.iter().map(|s| s.sample(rng)).sum())
        .collect();
    Ok(levy_concentration_of_samples(xs, t))
}

#[derive(Clone, Debug)]
pub struct BruteConfig {
    pub max_items: usize,
    /// Estimator slack when some law is continuous.
    pub tau: f64,
    pub delta: f64,
    pub seed: u64,
}

impl Default for BruteConfig {
    fn default() -> Self {
        BruteConfig {
            max_items: 20,
            tau: 0.01,
            delta: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OverflowValue {
    Exact(BigRational),
    Estimate(OverflowEstimate),
}

impl OverflowValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            OverflowValue::Exact(r) => to_f64(r),
            OverflowValue::Estimate(e) => e.point_estimate,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteOptimum {
    pub subset: Vec<usize>,
    pub profit: BigRational,
    pub overflow: OverflowValue,
}

/// Subsets of `0..n` ordered by profit descending, then by sorted index list.
pub fn subsets_by_profit(profits: &[BigRational]) -> Vec<u32> {
    let n = profits.len();
    let denom = crate::rational::lcm_of_denominators(profits);
    let scaled: Vec<BigInt> = profits
        .iter()
        .map(|p| (p * BigRational::from_integer(denom.clone())).to_integer())
        .collect();
    let mut sums: Vec<BigInt> = vec![BigInt::zero(); 1 << n];
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = &sums[mask & (mask - 1)] + &scaled[low];
    }
    let mut order: Vec<u32> = (0..(1u32 << n)).collect();
    order.sort_by(|&a, &b| {
        sums[b as usize]
            .cmp(&sums[a as usize])
            .then_with(|| lex_cmp_masks(a, b))
    });
    order
}

/// Compare the sorted index lists of two bit masks lexicographically.
fn lex_cmp_masks(a: u32, b: u32) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    let (mut a, mut b) = (a, b);
    loop {
        match (a == 0, b == 0) {
            (true, true) => return Equal,
            (true, false) => return Less,
            (false, true) => return Greater,
            _ => {}
        }
        let (ia, ib) = (a.trailing_zeros(), b.trailing_zeros());
        if ia != ib {
            return ia.cmp(&ib);
        }
        a &= a - 1;
        b &= b - 1;
    }
}

fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

/// Max-profit subset with overflow probability at most `p`, by enumeration.
///
/// Exact when every law is finite; otherwise one shared sample matrix scores
/// every subset, with `tau` and `delta` fixing its size.
pub fn brute_force_opt(instance: &Instance, cfg: &BruteConfig) -> Result<Option<BruteOptimum>> {
    let n = instance.items.len();
    if n > cfg.max_items || n > 30 {
        return Err(Error::budget(
            "brute force item count",
            n,
            cfg.max_items.min(30),
            "use a smaller instance",
        ));
    }
    let profits: Vec<BigRational> = instance.items.iter().map(|i| i.profit.clone()).collect();
    let order = subsets_by_profit(&profits);
    let dists: Vec<SizeDistribution> = instance.items.iter().map(|i| i.dist.clone()).collect();
    let profit_of = |mask: u32| {
        mask_indices(mask)
            .iter()
            .map(|&i| profits[i].clone())
            .sum::<BigRational>()
    };

    if dists.iter().all(|d| d.is_finite_support()) {
        let pmfs: Vec<Pmf> = dists.iter().map(|d| d.exact_pmf()).collect::<Result<_>>()?;
        for mask in order {
            let mut acc = Pmf::point(BigRational::zero());
            for i in mask_indices(mask) {
                acc = acc.convolve(&pmfs[i], DEFAULT_ATOM_CAP)?;
            }
            let overflow = acc.tail_above(&instance.capacity);
            if overflow <= instance.budget {
                return Ok(Some(BruteOptimum {
                    subset: mask_indices(mask),
                    profit: profit_of(mask),
                    overflow: OverflowValue::Exact(overflow),
                }));
            }
        }
        return Ok(None);
    }

    check_unit("tau", cfg.tau)?;
    check_unit("delta", cfg.delta)?;
    let m = hoeffding_samples(cfg.tau, cfg.delta) as usize;
    let samplers: Vec<Sampler> = dists.iter().map(|d| d.sampler()).collect();
    // Row-major: draw j of item i at [j * n + i].
    let draws: Vec<f64> = (0..m.div_ceil(CHUNK as usize))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream(derive(cfg.seed, &[0xb7u64]), &[c as u64]);
            let len = (CHUNK as usize).min(m - c * CHUNK as usize);
            let mut out = Vec::with_capacity(len * n);
            for _ in 0..len {
                for s in &samplers {
                    out.push(s.sample(&mut rng));
                }
            }
            out
        })
        .collect();
    let capacity = to_f64(&instance.capacity);
    let budget = to_f64(&instance.budget);
    let half_width = ((2.0 / cfg.delta).ln() / (2.0 * m as f64)).sqrt();
    for mask in order {
        let idx = mask_indices(mask);
        let hits = draws
            .par_chunks(n.max(1))
            .filter(|row| idx.iter().map(|&i| row[i]).sum::<f64>() > capacity)
            .count();
        let est = hits as f64 / m as f64;
        if est <= budget {
            return Ok(Some(BruteOptimum {
                subset: idx,
                profit: profit_of(mask),
                overflow: OverflowValue::Estimate(OverflowEstimate {
                    point_estimate: est,
                    half_width,
                    confidence: 1.0 - cfg.delta,
                    samples_used: m as u64,
                }),
            }));
        }
    }
    Ok(None)
}
