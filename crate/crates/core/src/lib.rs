//! Approximation schemes for chance-constrained stochastic knapsack.
//!
//! Items have random sizes and fixed profits. A set is feasible when its total
//! size exceeds the capacity with probability at most `p`. The schemes return a
//! set that overflows with probability at most `p + eps` and whose profit
//! matches (or nearly matches) the best feasible set.
//!
//! ```
//! use sknap::cli::{solve_with, SchemeChoice};
//! use sknap::generate::{generate, Family, GenOptions};
//! use sknap::rational::ratio;
//! use sknap::SolverConfig;
//!
//! let inst = generate(&GenOptions::new(Family::Bernoulli, 8, 1))?.instance()?;
//! let sol = solve_with(&inst, SchemeChoice::Auto, &SolverConfig::new(ratio(1, 5), 1))?;
//! assert!(sol.overflow.unwrap().estimate <= 0.2 + sknap::rational::to_f64(&inst.budget));
//! # Ok::<(), sknap::Error>(())
//! ```

pub mod cli;
pub mod combine;
pub mod config;
pub mod distributions;
pub mod error;
pub mod gate;
pub mod generate;
pub mod instance;
pub mod oracles;
pub mod pmf;
pub mod pseudo_knapsack;
pub mod rational;
pub mod rng;
pub mod scheme_bernoulli;
pub mod scheme_hyper;
pub mod scheme_ksupport;

pub use config::SolverConfig;
pub use error::{Error, Result};
pub use instance::{Instance, Item, Solution};
