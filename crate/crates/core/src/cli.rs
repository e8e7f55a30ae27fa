//! Command-line front end: instance I/O, scheme dispatch, baselines and
//! diagnostics. Every command returns the text it would print.

use crate::config::SolverConfig;
use crate::distributions::SizeDistribution;
use crate::error::{Error, Result};
use crate::generate::{generate, Family, GenOptions};
use crate::instance::{
    Instance, InstanceFile, OverflowMethod, OverflowReport, Solution, SolutionFile,
};
use crate::oracles::{
    brute_force_opt, exact_overflow, hoeffding_samples, mc_overflow_with_samples, BruteConfig,
    OverflowValue,
};
use crate::rational::{format_rational, parse_rational, ratio, to_f64};
use crate::rng::stream;
use crate::scheme_bernoulli::solve_bernoulli;
use crate::scheme_hyper::solve_hyper;
use crate::scheme_ksupport::{common_support, solve_ksupport};
use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(
    name = "sknap",
    version,
    about = "Chance-constrained stochastic knapsack solver"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeChoice {
    Bernoulli,
    Ksupport,
    Hyper,
    Auto,
}

#[derive(clap::Args, Debug, Clone)]
pub struct CommonArgs {
    /// Instance file (JSON).
    #[arg(long)]
    pub instance: PathBuf,
    /// Seed for all randomness; defaults to the file's value, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Failure probability of sampled checks; defaults to the file's value.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run an approximation scheme.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Error parameter in (0, 1), as a decimal or fraction.
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, value_enum, default_value = "auto")]
        scheme: SchemeChoice,
        /// Largest number of candidate types for the hyper scheme.
        #[arg(long)]
        type_budget: Option<u64>,
        /// Override the hypercontractivity constant.
        #[arg(long)]
        hyper_c: Option<f64>,
        /// Samples behind the reported overflow estimate.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Exhaustive search for the best feasible set.
    Brute {
        #[command(flatten)]
        common: CommonArgs,
        /// Largest item count accepted.
        #[arg(long, default_value_t = 20)]
        brute_cap: usize,
        /// Additive accuracy of sampled overflow estimates.
        #[arg(long, default_value_t = 0.01)]
        tau: f64,
    },
    /// Overflow probability of one subset.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated item indices; empty for the empty set.
        #[arg(long, default_value = "")]
        subset: String,
        /// Number of samples; defaults to the file's value, then enough for +-0.01.
        #[arg(long)]
        samples: Option<u64>,
        /// Compute the exact value for finite laws instead of sampling.
        #[arg(long)]
        exact: bool,
    },
    /// Report per-item kurtosis and the hypercontractivity constant.
    CheckHyper {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Emit a seeded random instance.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Support size for the ksupport family.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Give every item profit 1.
        #[arg(long)]
        unit_profits: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve small generated instances and compare against brute force.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

const DEFAULT_EPSILON: (i64, i64) = (1, 10);
const DEFAULT_DELTA: f64 = 1e-6;

fn load(common: &CommonArgs) -> Result<InstanceFile> {
    InstanceFile::load(&common.instance)
}

fn seed_of(common: &CommonArgs, file: &InstanceFile) -> u64 {
    common.seed.or(file.defaults.seed).unwrap_or(0)
}

fn delta_of(common: &CommonArgs, file: &InstanceFile, fallback: f64) -> f64 {
    common.delta.or(file.defaults.delta).unwrap_or(fallback)
}

fn emit(text: String, output: Option<&Path>) -> Result<String> {
    match output {
        Some(path) => {
            std::fs::write(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

/// Scheme picked by `--scheme auto`.
pub fn auto_scheme(instance: &Instance, k_cap: usize) -> SchemeChoice {
    let dists = instance.dists();
    if dists
        .iter()
        .all(|d| matches!(d, SizeDistribution::Bernoulli { .. }))
    {
        return SchemeChoice::Bernoulli;
    }
    if dists.iter().all(|d| d.is_finite_support()) {
        if let Ok(support) = common_support(instance) {
            if support.len() <= k_cap {
                return SchemeChoice::Ksupport;
            }
        }
    }
    SchemeChoice::Hyper
}

pub fn solve_with(
    instance: &Instance,
    scheme: SchemeChoice,
    cfg: &SolverConfig,
) -> Result<Solution> {
    match scheme {
        SchemeChoice::Bernoulli => solve_bernoulli(instance, cfg),
        SchemeChoice::Ksupport => solve_ksupport(instance, cfg),
        SchemeChoice::Hyper => solve_hyper(instance, cfg),
        SchemeChoice::Auto => solve_with(instance, auto_scheme(instance, cfg.k_cap), cfg),
    }
}

fn parse_subset(text: &str, n: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let i: usize = part
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad item index {part:?} in subset")))?;
        if i >= n {
            return Err(Error::InvalidArgument(format!(
                "item index {i} out of range for {n} items"
            )));
        }
        out.push(i);
    }
    let mut sorted = out.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != out.len() {
        return Err(Error::InvalidArgument(
            "subset indices must be distinct".into(),
        ));
    }
    Ok(sorted)
}

#[derive(Serialize)]
struct KurtosisRow {
    index: usize,
    family: &'static str,
    mean: f64,
    variance: f64,
    kurtosis: Option<f64>,
    reference_kurtosis: Option<f64>,
}

#[derive(Serialize)]
struct HyperReport {
    c: f64,
    items: Vec<KurtosisRow>,
}

/// Brute-force result in the solution format.
fn brute_solution(instance: &Instance, cfg: &BruteConfig, seed: u64) -> Result<Solution> {
    let mut sol = Solution::empty("brute", BigRational::from_integer(0.into()), seed);
    match brute_force_opt(instance, cfg)? {
        Some(best) => {
            sol.selected = best.subset;
            sol.total_profit = best.profit;
            sol.overflow = Some(match best.overflow {
                OverflowValue::Exact(v) => OverflowReport {
                    estimate: to_f64(&v),
                    half_width: 0.0,
                    confidence: 1.0,
                    samples: 0,
                    method: OverflowMethod::Convolution,
                },
                OverflowValue::Estimate(e) => OverflowReport {
                    estimate: e.point_estimate,
                    half_width: e.half_width,
                    confidence: e.confidence,
                    samples: e.samples_used,
                    method: OverflowMethod::MonteCarlo,
                },
            });
        }
        None => sol
            .warnings
            .push("no feasible set, not even the empty one".into()),
    }
    Ok(sol)
}

fn selftest(seed: u64) -> Result<String> {
    let mut out = String::new();
    let mut failures = Vec::new();
    let cases = [
        (Family::Bernoulli, SchemeChoice::Bernoulli, 7),
        (Family::Ksupport, SchemeChoice::Ksupport, 6),
        (Family::Deterministic, SchemeChoice::Hyper, 6),
    ];
    for (family, scheme, n) in cases {
        let inst = generate(&GenOptions::new(family, n, seed))?.instance()?;
        let eps = ratio(1, 5);
        let sol = solve_with(&inst, scheme, &SolverConfig::new(eps.clone(), seed))?;
        let opt = brute_force_opt(&inst, &BruteConfig::default())?;
        let overflow = exact_overflow(&inst.subset_dists(&sol.selected), &inst.capacity)?;
        let opt_profit = opt
            .map(|o| o.profit)
            .unwrap_or_else(|| BigRational::from_integer(0.into()));
        let ok = overflow <= &inst.budget + &eps && sol.total_profit >= opt_profit;
        let line = format!(
            "{} {:?} n={n}: profit {} (best {}), overflow {}\n",
            if ok { "ok  " } else { "FAIL" },
            family,
            format_rational(&sol.total_profit),
            format_rational(&opt_profit),
            format_rational(&overflow),
        );
        if !ok {
            failures.push(line.clone());
        }
        out.push_str(&line);
    }
    let laplace = SizeDistribution::Laplace {
        location: 0.0,
        scale: 1.0,
    }
    .moments()
    .kurtosis;
    let ok = laplace.is_some_and(|k| (k - 6.0).abs() < 1e-9);
    out.push_str(&format!(
        "{} laplace kurtosis {:?}\n",
        if ok { "ok  " } else { "FAIL" },
        laplace
    ));
    if !ok {
        failures.push("laplace kurtosis".into());
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        Err(Error::InvalidArgument(format!("selftest failed:\n{out}")))
    }
}

/// Run one parsed command and return its standard output.
pub fn execute(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Solve {
            common,
            epsilon,
            scheme,
            type_budget,
            hyper_c,
            samples,
        } => {
            let file = load(&common)?;
            let instance = file.instance()?;
            let epsilon = match epsilon {
                Some(text) => parse_rational(&text)?,
                None => file
                    .defaults
                    .epsilon
                    .clone()
                    .unwrap_or_else(|| ratio(DEFAULT_EPSILON.0, DEFAULT_EPSILON.1)),
            };
            let mut cfg = SolverConfig::new(epsilon, seed_of(&common, &file));
            cfg.gate.delta = delta_of(&common, &file, DEFAULT_DELTA);
            if let Some(b) = type_budget {
                cfg.type_budget = b;
            }
            cfg.c_override = hyper_c;
            if let Some(m) = samples.or(file.defaults.samples) {
                cfg.gate.report_samples = m;
            }
            cfg.validate()?;
            let chosen = match scheme {
                SchemeChoice::Auto => auto_scheme(&instance, cfg.k_cap),
                s => s,
            };
            log::info!(
                "solving {} items with the {:?} scheme",
                instance.len(),
                chosen
            );
            let start = Instant::now();
            let solution = solve_with(&instance, chosen, &cfg)?;
            let file_out = solution.to_file(start.elapsed().as_millis() as u64);
            emit(file_out.to_json(), common.output.as_deref())
        }
        Command::Brute {
            common,
            brute_cap,
            tau,
        } => {
            let file = load(&common)?;
            let instance = file.instance()?;
            let seed = seed_of(&common, &file);
            let cfg = BruteConfig {
                max_items: brute_cap,
                tau,
                delta: delta_of(&common, &file, 1e-4),
                seed,
            };
            let start = Instant::now();
            let solution = brute_solution(&instance, &cfg, seed)?;
            emit(
                solution
                    .to_file(start.elapsed().as_millis() as u64)
                    .to_json(),
                common.output.as_deref(),
            )
        }
        Command::Estimate {
            common,
            subset,
            samples,
            exact,
        } => {
            let file = load(&common)?;
            let instance = file.instance()?;
            let subset = parse_subset(&subset, instance.len())?;
            let dists = instance.subset_dists(&subset);
            let estimate = if exact {
                let v = to_f64(&exact_overflow(&dists, &instance.capacity)?);
                crate::oracles::OverflowEstimate {
                    point_estimate: v,
                    half_width: 0.0,
                    confidence: 1.0,
                    samples_used: 0,
                }
            } else {
                let delta = delta_of(&common, &file, 1e-3);
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "delta must lie in (0, 1), got {delta}"
                    )));
                }
                let m = samples
                    .or(file.defaults.samples)
                    .unwrap_or_else(|| hoeffding_samples(0.01, delta));
                let mut rng = stream(seed_of(&common, &file), &[0xe5]);
                mc_overflow_with_samples(&dists, to_f64(&instance.capacity), m, delta, &mut rng)
            };
            emit(to_json_line(&estimate), common.output.as_deref())
        }
        Command::CheckHyper { common } => {
            let file = load(&common)?;
            let instance = file.instance()?;
            let items: Vec<KurtosisRow> = instance
                .items
                .iter()
                .enumerate()
                .map(|(index, it)| {
                    let m = it.dist.moments();
                    KurtosisRow {
                        index,
                        family: it.dist.family(),
                        mean: m.mean,
                        variance: m.var,
                        kurtosis: m.kurtosis,
                        reference_kurtosis: it.dist.reference_kurtosis(),
                    }
                })
                .collect();
            let c = items
                .iter()
                .filter_map(|r| r.kurtosis)
                .fold(1.0f64, f64::max)
                .powf(0.25);
            emit(
                to_json_line(&HyperReport { c, items }),
                common.output.as_deref(),
            )
        }
        Command::Gen {
            family,
            n,
            seed,
            k,
            unit_profits,
            output,
        } => {
            let opts = GenOptions {
                family: family.parse()?,
                n,
                seed,
                k,
                unit_profits,
            };
            emit(generate(&opts)?.to_json(), output.as_deref())
        }
        Command::Selftest { seed } => selftest(seed),
    }
}

/// Parse arguments (including the program name) and run.
pub fn run<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                Ok(e.to_string())
            }
            _ => Err(Error::InvalidArgument(e.to_string())),
        },
    }
}

/// Parse a saved solution and check it against an instance.
pub fn check_solution(instance: &Instance, text: &str) -> Result<SolutionFile> {
    let file: SolutionFile = serde_json::from_str(text)?;
    file.check_against(instance)?;
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Item;
    use crate::rational::int;

    fn gaussian_instance() -> Instance {
        Instance::new(
            vec![Item {
                dist: SizeDistribution::Gaussian {
                    mean: 1.0,
                    var: 1.0,
                },
                profit: int(1),
            }],
            int(3),
            ratio(1, 10),
        )
        .unwrap()
    }

    #[test]
    fn auto_dispatch() {
        let bern = generate(&GenOptions::new(Family::Bernoulli, 5, 0))
            .unwrap()
            .instance()
            .unwrap();
        assert_eq!(auto_scheme(&bern, 4), SchemeChoice::Bernoulli);
        let ks = generate(&GenOptions::new(Family::Ksupport, 5, 0))
            .unwrap()
            .instance()
            .unwrap();
        assert_eq!(auto_scheme(&ks, 4), SchemeChoice::Ksupport);
        assert_eq!(auto_scheme(&gaussian_instance(), 4), SchemeChoice::Hyper);
    }

    #[test]
    fn bernoulli_scheme_rejects_gaussian() {
        let err = solve_with(
            &gaussian_instance(),
            SchemeChoice::Bernoulli,
            &SolverConfig::new(ratio(1, 5), 0),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("item 0"));
    }

    #[test]
    fn subsets_parse() {
        assert_eq!(parse_subset("", 3).unwrap(), Vec::<usize>::new());
        assert_eq!(parse_subset("2, 0", 3).unwrap(), vec![0, 2]);
        assert!(parse_subset("3", 3).is_err());
        assert!(parse_subset("1,1", 3).is_err());
        assert!(parse_subset("x", 3).is_err());
    }

    #[test]
    fn selftest_passes() {
        let out = selftest(1).unwrap();
        assert!(!out.contains("FAIL"));
    }
}
