//! Item-size laws: moments, sampling, exact pmfs and kurtosis constants.

use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::rational::{format_rational, from_f64, serde_rational, serde_rational_vec, to_f64};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{
    Beta as BetaLaw, ContinuousCDF, DiscreteCDF, Gamma as GammaLaw, Normal,
};
use std::f64::consts::PI;

/// Law of one item's size.
///
/// Exact families carry rational parameters; continuous families carry
/// floats. Deserialization validates the parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", remote = "Self")]
pub enum SizeDistribution {
    Bernoulli {
        #[serde(with = "serde_rational")]
        p: BigRational,
    },
    Finite {
        #[serde(with = "serde_rational_vec")]
        support: Vec<BigRational>,
        #[serde(with = "serde_rational_vec")]
        probs: Vec<BigRational>,
    },
    Gaussian {
        mean: f64,
        var: f64,
    },
    Poisson {
        lambda: f64,
    },
    Exponential {
        rate: f64,
    },
    Laplace {
        location: f64,
        scale: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    MaxwellBoltzmann {
        scale: f64,
    },
}

impl Serialize for SizeDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SizeDistribution::serialize(self, s)
    }
}

impl<'de> Deserialize<'de> for SizeDistribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let dist = SizeDistribution::deserialize(d)?;
        dist.validate().map_err(serde::de::Error::custom)?;
        Ok(dist)
    }
}

/// Mean, second and fourth central moments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSummary {
    pub mean: f64,
    pub var: f64,
    pub mu4: f64,
    /// `mu4 / var^2`, `None` for a point mass.
    pub kurtosis: Option<f64>,
}

impl MomentSummary {
    fn new(mean: f64, var: f64, mu4: f64) -> Self {
        let kurtosis = (var > 0.0).then(|| mu4 / (var * var));
        MomentSummary {
            mean,
            var,
            mu4,
            kurtosis,
        }
    }
}

/// Moments of a finite law in exact arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMoments {
    pub mean: BigRational,
    pub var: BigRational,
    pub mu4: BigRational,
}

impl ExactMoments {
    pub fn kurtosis(&self) -> Option<BigRational> {
        (!self.var.is_zero()).then(|| &self.mu4 / (&self.var * &self.var))
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "{name} must be a positive finite number, got {x}"
        )))
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "{name} must be finite, got {x}"
        )))
    }
}

fn probability(p: &BigRational) -> Result<()> {
    if p.is_negative() || p > &BigRational::one() {
        Err(Error::InvalidDistribution(format!(
            "probability {} is outside [0, 1]",
            format_rational(p)
        )))
    } else {
        Ok(())
    }
}

/// Central moments 2 and 4 from the first four raw moments.
fn central_from_raw(m1: f64, m2: f64, m3: f64, m4: f64) -> (f64, f64) {
    let var = m2 - m1 * m1;
    let mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    (var, mu4)
}

impl SizeDistribution {
    pub fn bernoulli(p: BigRational) -> Result<Self> {
        let d = SizeDistribution::Bernoulli { p };
        d.validate()?;
        Ok(d)
    }

    pub fn finite(support: Vec<BigRational>, probs: Vec<BigRational>) -> Result<Self> {
        let d = SizeDistribution::Finite { support, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn point(value: BigRational) -> Self {
        SizeDistribution::Finite {
            support: vec![value],
            probs: vec![BigRational::one()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        use SizeDistribution::*;
        match self {
            Bernoulli { p } => probability(p),
            Finite { support, probs } => {
                if support.is_empty() || support.len() != probs.len() {
                    return Err(Error::InvalidDistribution(format!(
                        "finite law needs matching non-empty support and probs (got {} and {})",
                        support.len(),
                        probs.len()
                    )));
                }
                probs.iter().try_for_each(probability)?;
                let total: BigRational = probs.iter().sum();
                if !total.is_one() {
                    return Err(Error::InvalidDistribution(format!(
                        "finite probs sum to {}, not 1",
                        format_rational(&total)
                    )));
                }
                let mut sorted: Vec<&BigRational> = support.iter().collect();
                sorted.sort();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidDistribution(
                        "finite support values must be distinct".into(),
                    ));
                }
                Ok(())
            }
            Gaussian { mean, var } => finite("mean", *mean).and(positive("var", *var)),
            Poisson { lambda } => positive("lambda", *lambda),
            Exponential { rate } => positive("rate", *rate),
            Laplace { location, scale } => {
                finite("location", *location).and(positive("scale", *scale))
            }
            Uniform { a, b } => {
                finite("a", *a)?;
                finite("b", *b)?;
                if a < b {
                    Ok(())
                } else {
                    Err(Error::InvalidDistribution(format!(
                        "uniform needs a < b, got a={a}, b={b}"
                    )))
                }
            }
            Gamma { shape, scale } => positive("shape", *shape).and(positive("scale", *scale)),
            Beta { alpha, beta } => positive("alpha", *alpha).and(positive("beta", *beta)),
            MaxwellBoltzmann { scale } => positive("scale", *scale),
        }
    }

    pub fn family(&self) -> &'static str {
        use SizeDistribution::*;
        match self {
            Bernoulli { .. } => "bernoulli",
            Finite { .. } => "finite",
            Gaussian { .. } => "gaussian",
            Poisson { .. } => "poisson",
            Exponential { .. } => "exponential",
            Laplace { .. } => "laplace",
            Uniform { .. } => "uniform",
            Gamma { .. } => "gamma",
            Beta { .. } => "beta",
            MaxwellBoltzmann { .. } => "maxwell_boltzmann",
        }
    }

    /// Bernoulli and finite laws.
    pub fn is_finite_support(&self) -> bool {
        matches!(
            self,
            SizeDistribution::Bernoulli { .. } | SizeDistribution::Finite { .. }
        )
    }

    /// True when the law puts mass on negative values.
    pub fn can_be_negative(&self) -> bool {
        use SizeDistribution::*;
        match self {
            Finite { support, probs } => support
                .iter()
                .zip(probs)
                .any(|(v, p)| v.is_negative() && !p.is_zero()),
            Gaussian { .. } | Laplace { .. } => true,
            Uniform { a, .. } => *a < 0.0,
            _ => false,
        }
    }

    pub fn exact_pmf(&self) -> Result<Pmf> {
        match self {
            SizeDistribution::Bernoulli { p } => Pmf::from_atoms(vec![
                (BigRational::zero(), BigRational::one() - p),
                (BigRational::one(), p.clone()),
            ]),
            SizeDistribution::Finite { support, probs } => {
                Pmf::from_atoms(support.iter().cloned().zip(probs.iter().cloned()))
            }
            other => Err(Error::Unsupported(format!(
                "{} is a continuous law; exact pmf needs a Bernoulli or finite law",
                other.family()
            ))),
        }
    }

    pub fn exact_moments(&self) -> Option<ExactMoments> {
        let pmf = self.exact_pmf().ok()?;
        Some(ExactMoments {
            mean: pmf.mean(),
            var: pmf.central_moment(2),
            mu4: pmf.central_moment(4),
        })
    }

    pub fn moments(&self) -> MomentSummary {
        use SizeDistribution::*;
        match self {
            Bernoulli { .. } | Finite { .. } => {
                let m = self.exact_moments().expect("finite law");
                MomentSummary::new(to_f64(&m.mean), to_f64(&m.var), to_f64(&m.mu4))
            }
            Gaussian { mean, var } => MomentSummary::new(*mean, *var, 3.0 * var * var),
            Poisson { lambda } => {
                MomentSummary::new(*lambda, *lambda, lambda * (1.0 + 3.0 * lambda))
            }
            Exponential { rate } => {
                MomentSummary::new(1.0 / rate, 1.0 / (rate * rate), 9.0 / rate.powi(4))
            }
            Laplace { location, scale } => {
                MomentSummary::new(*location, 2.0 * scale * scale, 24.0 * scale.powi(4))
            }
            Uniform { a, b } => {
                let w = b - a;
                MomentSummary::new((a + b) / 2.0, w * w / 12.0, w.powi(4) / 80.0)
            }
            Gamma { shape: k, scale: t } => {
                let raw = |j: i32| (0..j).map(|i| k + i as f64).product::<f64>() * t.powi(j);
                let (var, mu4) = central_from_raw(raw(1), raw(2), raw(3), raw(4));
                MomentSummary::new(raw(1), var, mu4)
            }
            Beta { alpha, beta } => {
                let raw = |j: i32| {
                    (0..j)
                        .map(|i| (alpha + i as f64) / (alpha + beta + i as f64))
                        .product::<f64>()
                };
                let (var, mu4) = central_from_raw(raw(1), raw(2), raw(3), raw(4));
                MomentSummary::new(raw(1), var, mu4)
            }
            MaxwellBoltzmann { scale: a } => {
                let r = (2.0 / PI).sqrt();
                let (m1, m2, m3, m4) = (
                    2.0 * a * r,
                    3.0 * a * a,
                    8.0 * a.powi(3) * r,
                    15.0 * a.powi(4),
                );
                let (var, mu4) = central_from_raw(m1, m2, m3, m4);
                MomentSummary::new(m1, var, mu4)
            }
        }
    }

    /// Mean as a rational: exact for finite laws, the float value otherwise.
    pub fn mean_rational(&self) -> BigRational {
        match self.exact_moments() {
            Some(m) => m.mean,
            None => from_f64(self.moments().mean).expect("finite mean"),
        }
    }

    /// Variance as a rational: exact for finite laws, the float value otherwise.
    pub fn variance_rational(&self) -> BigRational {
        match self.exact_moments() {
            Some(m) => m.var,
            None => from_f64(self.moments().var).expect("finite variance"),
        }
    }

    /// Closed-form kurtosis of the named continuous families, as tabulated
    /// for hypercontractivity constants. `None` for exact families.
    pub fn reference_kurtosis(&self) -> Option<f64> {
        use SizeDistribution::*;
        Some(match self {
            Bernoulli { .. } | Finite { .. } => return None,
            Gaussian { .. } => 3.0,
            Poisson { lambda } => 3.0 + 1.0 / lambda,
            Exponential { .. } => 9.0,
            Laplace { .. } => 6.0,
            Uniform { .. } => 9.0 / 5.0,
            Gamma { shape, .. } => 3.0 + 6.0 / shape,
            Beta { alpha: a, beta: b } => {
                let num = (a - b).powi(2) * (a + b + 1.0) - a * b * (a + b + 2.0);
                3.0 + 6.0 * num / (a * b * (a + b + 2.0) * (a + b + 3.0))
            }
            MaxwellBoltzmann { .. } => {
                3.0 + 4.0 * (40.0 * PI - 96.0 - 3.0 * PI * PI) / (3.0 * PI - 8.0).powi(2)
            }
        })
    }

    /// Smallest positive atom probability of a finite law.
    pub fn min_atom(&self) -> Option<BigRational> {
        let pmf = self.exact_pmf().ok()?;
        pmf.atoms().iter().map(|(_, p)| p.clone()).min()
    }

    /// `Pr[X > c]`, exact for finite laws and from closed-form cdfs otherwise.
    pub fn tail_prob(&self, c: &BigRational) -> f64 {
        use SizeDistribution::*;
        let x = to_f64(c);
        match self {
            Bernoulli { .. } | Finite { .. } => {
                to_f64(&self.exact_pmf().expect("finite law").tail_above(c))
            }
            Gaussian { mean, var } => Normal::new(*mean, var.sqrt()).expect("validated").sf(x),
            Poisson { lambda } => {
                if x < 0.0 {
                    1.0
                } else {
                    statrs::distribution::Poisson::new(*lambda)
                        .expect("validated")
                        .sf(x.floor() as u64)
                }
            }
            Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Laplace { location, scale } => {
                let z = (x - location) / scale;
                if z >= 0.0 {
                    0.5 * (-z).exp()
                } else {
                    1.0 - 0.5 * z.exp()
                }
            }
            Uniform { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            Gamma { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    GammaLaw::new(*shape, 1.0 / scale).expect("validated").sf(x)
                }
            }
            Beta { alpha, beta } => {
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    BetaLaw::new(*alpha, *beta).expect("validated").sf(x)
                }
            }
            MaxwellBoltzmann { scale: a } => {
                if x <= 0.0 {
                    1.0
                } else {
                    let u = x / a;
                    let cdf = statrs::function::erf::erf(u / 2f64.sqrt())
                        - (2.0 / PI).sqrt() * u * (-u * u / 2.0).exp();
                    (1.0 - cdf).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// Precomputed sampler; cheaper than calling [`SizeDistribution::sample`]
    /// repeatedly.
    pub fn sampler(&self) -> Sampler {
        use SizeDistribution::*;
        match self {
            Bernoulli { p } => Sampler::Bernoulli(to_f64(p)),
            Finite { .. } => {
                let pmf = self.exact_pmf().expect("validated");
                let mut acc = BigRational::zero();
                let mut cumulative = Vec::with_capacity(pmf.len());
                for (v, p) in pmf.atoms() {
                    acc += p;
                    cumulative.push((to_f64(&acc), to_f64(v)));
                }
                Sampler::Finite(cumulative)
            }
            Gaussian { mean, var } => Sampler::Normal(*mean, var.sqrt()),
            Poisson { lambda } => {
                Sampler::Poisson(rand_distr::Poisson::new(*lambda).expect("validated"))
            }
            Exponential { rate } => Sampler::Exp(Exp::new(*rate).expect("validated")),
            Laplace { location, scale } => Sampler::Laplace(*location, *scale),
            Uniform { a, b } => Sampler::Uniform(*a, b - a),
            Gamma { shape, scale } => {
                Sampler::Gamma(rand_distr::Gamma::new(*shape, *scale).expect("validated"))
            }
            Beta { alpha, beta } => {
                Sampler::Beta(rand_distr::Beta::new(*alpha, *beta).expect("validated"))
            }
            MaxwellBoltzmann { scale } => Sampler::Maxwell(*scale),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }
}

#[derive(Clone, Debug)]
pub enum Sampler {
    Bernoulli(f64),
    /// `(cumulative probability, value)` pairs.
    Finite(Vec<(f64, f64)>),
    Normal(f64, f64),
    Poisson(rand_distr::Poisson<f64>),
    Exp(Exp<f64>),
    Laplace(f64, f64),
    Uniform(f64, f64),
    Gamma(Gamma<f64>),
    Beta(rand_distr::Beta<f64>),
    Maxwell(f64),
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Bernoulli(p) => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Sampler::Finite(cumulative) => {
                let u: f64 = rng.random();
                let i = cumulative.partition_point(|(c, _)| *c <= u);
                cumulative[i.min(cumulative.len() - 1)].1
            }
            Sampler::Normal(mean, sd) => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Sampler::Poisson(d) => d.sample(rng),
            Sampler::Exp(d) => d.sample(rng),
            Sampler::Laplace(location, scale) => {
                let u: f64 = Open01.sample(rng);
                let u = u - 0.5;
                location - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Sampler::Uniform(a, width) => a + width * rng.random::<f64>(),
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::Beta(d) => d.sample(rng),
            Sampler::Maxwell(scale) => {
                let s: f64 = (0..3)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        z * z
                    })
                    .sum();
                scale * s.sqrt()
            }
        }
    }
}

/// Uniform constant `c` with every law `(c,2,4)`-hypercontractive: the
/// fourth root of the largest kurtosis.
pub fn hyper_constant(dists: &[SizeDistribution]) -> Result<f64> {
    let mut worst: f64 = 1.0;
    for (item, d) in dists.iter().enumerate() {
        let k = d.moments().kurtosis.ok_or(Error::ZeroVariance { item })?;
        worst = worst.max(k);
    }
    Ok(worst.powf(0.25))
}
