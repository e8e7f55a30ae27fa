//! Probability mass functions on rational points.
//!
//! [`Pmf`] holds exact rational probabilities. [`ApproxPmf`] holds float
//! probabilities and records how much mass was cut off, which is what the
//! Poisson-type reference laws produce.

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, to_f64};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Deserializer;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Exact finite law: strictly increasing values, positive probabilities
/// summing to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pmf {
    atoms: Vec<(BigRational, BigRational)>,
}

impl Pmf {
    /// Merges repeated values and drops zero-probability atoms.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (BigRational, BigRational)>) -> Result<Self> {
        let mut map: BTreeMap<BigRational, BigRational> = BTreeMap::new();
        for (v, p) in atoms {
            if p.is_negative() {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability {} at {}",
                    format_rational(&p),
                    format_rational(&v)
                )));
            }
            *map.entry(v).or_insert_with(BigRational::zero) += p;
        }
        let total: BigRational = map.values().sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {}, not 1",
                format_rational(&total)
            )));
        }
        Ok(Pmf {
            atoms: map.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
        })
    }

    pub fn point(value: BigRational) -> Self {
        Pmf {
            atoms: vec![(value, BigRational::one())],
        }
    }

    pub fn atoms(&self) -> &[(BigRational, BigRational)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn prob_of(&self, value: &BigRational) -> BigRational {
        match self.atoms.binary_search_by(|(v, _)| v.cmp(value)) {
            Ok(i) => self.atoms[i].1.clone(),
            Err(_) => BigRational::zero(),
        }
    }

    /// `Pr[X > c]`.
    pub fn tail_above(&self, c: &BigRational) -> BigRational {
        self.atoms
            .iter()
            .filter(|(v, _)| v > c)
            .map(|(_, p)| p)
            .sum()
    }

    /// `Pr[X <= x]`.
    pub fn cdf(&self, x: &BigRational) -> BigRational {
        self.atoms
            .iter()
            .filter(|(v, _)| v <= x)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn mean(&self) -> BigRational {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    /// Central moment of the given order.
    pub fn central_moment(&self, order: u32) -> BigRational {
        let m = self.mean();
        self.atoms
            .iter()
            .map(|(v, p)| num_traits::pow(v - &m, order as usize) * p)
            .sum()
    }

    /// Law of the sum of independent copies, failing once the support would
    /// exceed `atom_cap`.
    pub fn convolve(&self, other: &Pmf, atom_cap: usize) -> Result<Pmf> {
        let mut map: BTreeMap<BigRational, BigRational> = BTreeMap::new();
        for (a, pa) in &self.atoms {
            for (b, pb) in &other.atoms {
                *map.entry(a + b).or_insert_with(BigRational::zero) += pa * pb;
                if map.len() > atom_cap {
                    return Err(Error::budget(
                        "exact convolution support",
                        format!("more than {atom_cap} atoms"),
                        atom_cap,
                        "use the Monte Carlo estimator instead",
                    ));
                }
            }
        }
        Ok(Pmf {
            atoms: map.into_iter().collect(),
        })
    }

    pub fn to_approx(&self) -> ApproxPmf {
        ApproxPmf {
            atoms: self
                .atoms
                .iter()
                .map(|(v, p)| (v.clone(), to_f64(p)))
                .collect(),
            omitted_mass: 0.0,
            renormalized: false,
        }
    }
}

/// Serialized as a list of `[value, prob_num, prob_den]` string triples.
impl Serialize for Pmf {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.atoms.len()))?;
        for (v, p) in &self.atoms {
            seq.serialize_element(&[
                format_rational(v),
                p.numer().to_string(),
                p.denom().to_string(),
            ])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Pmf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw: Vec<[String; 3]> = Deserialize::deserialize(d)?;
        let mut atoms = Vec::with_capacity(raw.len());
        for [v, n, den] in raw {
            let v = parse_rational(&v).map_err(D::Error::custom)?;
            let p = parse_rational(&format!("{n}/{den}")).map_err(D::Error::custom)?;
            atoms.push((v, p));
        }
        Pmf::from_atoms(atoms).map_err(D::Error::custom)
    }
}

/// Float-valued law on rational points.
///
/// `omitted_mass` is the probability that was dropped (tails beyond the
/// truncation point). When `renormalized` is set the listed atoms were scaled
/// to sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxPmf {
    pub atoms: Vec<(BigRational, f64)>,
    pub omitted_mass: f64,
    pub renormalized: bool,
}

impl ApproxPmf {
    pub fn new(mut atoms: Vec<(BigRational, f64)>, omitted_mass: f64) -> Self {
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        atoms.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        ApproxPmf {
            atoms,
            omitted_mass,
            renormalized: false,
        }
    }

    /// Scale listed atoms so they sum to one; the omitted mass is kept as a
    /// record of what was dropped.
    pub fn renormalize(mut self) -> Self {
        let total: f64 = self.atoms.iter().map(|a| a.1).sum();
        if total > 0.0 {
            for a in &mut self.atoms {
                a.1 /= total;
            }
            self.renormalized = true;
        }
        self
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| to_f64(v) * p).sum()
    }
}

impl From<&Pmf> for ApproxPmf {
    fn from(p: &Pmf) -> Self {
        p.to_approx()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn from_atoms_merges_and_validates() {
        let p = Pmf::from_atoms(vec![
            (int(1), ratio(1, 4)),
            (int(0), ratio(1, 2)),
            (int(1), ratio(1, 4)),
        ])
        .unwrap();
        assert_eq!(p.atoms(), &[(int(0), ratio(1, 2)), (int(1), ratio(1, 2))]);
        assert!(Pmf::from_atoms(vec![(int(0), ratio(1, 2))]).is_err());
        assert!(Pmf::from_atoms(vec![(int(0), ratio(3, 2)), (int(1), ratio(-1, 2))]).is_err());
    }

    #[test]
    fn zero_atoms_are_dropped() {
        let p = Pmf::from_atoms(vec![(int(0), int(0)), (int(1), int(1))]).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn convolution_respects_cap() {
        let coin = Pmf::from_atoms(vec![(int(0), ratio(1, 2)), (int(1), ratio(1, 2))]).unwrap();
        let two = coin.convolve(&coin, 10).unwrap();
        assert_eq!(two.prob_of(&int(1)), ratio(1, 2));
        assert!(two.convolve(&coin, 3).unwrap_err().is_budget());
    }

    #[test]
    fn json_round_trip() {
        let p = Pmf::from_atoms(vec![(ratio(1, 3), ratio(2, 7)), (int(5), ratio(5, 7))]).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"[["1/3","2","7"],["5","5","7"]]"#);
        let back: Pmf = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn moments_are_exact() {
        let p = Pmf::from_atoms(vec![(int(1), ratio(3, 5)), (int(2), ratio(2, 5))]).unwrap();
        assert_eq!(p.mean(), ratio(7, 5));
        assert_eq!(p.central_moment(2), ratio(6, 25));
        assert_eq!(p.tail_above(&int(1)), ratio(2, 5));
        assert_eq!(p.cdf(&int(1)), ratio(3, 5));
    }
}
