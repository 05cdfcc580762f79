//! Exact finite distributions and multidistributions.
//!
//! A [`FiniteDistribution`] maps each object of its support to a strictly
//! positive probability, summing to exactly one. A [`MultiDistribution`] is a
//! finite multiset of probability-weighted objects of total mass at most one;
//! equal objects stay separate entries, which keeps track of *how* an object
//! was reached when reduction is nondeterministic.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

/// `num / den` as an exact rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `n` or `n/d` (optionally signed) into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num, den))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("negative probability {0}")]
    NegativeProbability(Rational),
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(Rational),
    #[error("total mass {0} exceeds 1")]
    MassExceedsOne(Rational),
    #[error("invalid convex weights: sum {0}")]
    InvalidWeights(Rational),
}

/// A probability distribution with finite support.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiniteDistribution<T: Ord> {
    probs: BTreeMap<T, Rational>,
}

impl<T: Ord + Clone> FiniteDistribution<T> {
    /// Builds a distribution, summing weights of repeated objects and
    /// dropping zero entries.
    pub fn new(entries: impl IntoIterator<Item = (T, Rational)>) -> Result<Self, DistError> {
        let mut probs: BTreeMap<T, Rational> = BTreeMap::new();
        for (t, p) in entries {
            if p.is_negative() {
                return Err(DistError::NegativeProbability(p));
            }
            *probs.entry(t).or_insert_with(Rational::zero) += p;
        }
        probs.retain(|_, p| !p.is_zero());
        let total: Rational = probs.values().sum();
        if !total.is_one() {
            return Err(DistError::NotNormalized(total));
        }
        Ok(Self { probs })
    }

    pub fn point(t: T) -> Self {
        let mut probs = BTreeMap::new();
        probs.insert(t, Rational::one());
        Self { probs }
    }

    pub fn prob(&self, t: &T) -> Rational {
        self.probs.get(t).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Rational)> + '_ {
        self.probs.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &T> + '_ {
        self.probs.keys()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn is_point(&self) -> bool {
        self.probs.len() == 1
    }

    /// Image under `f`; objects identified by `f` are merged.
    pub fn map<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> FiniteDistribution<U> {
        let mut probs: BTreeMap<U, Rational> = BTreeMap::new();
        for (t, p) in &self.probs {
            *probs.entry(f(t)).or_insert_with(Rational::zero) += p;
        }
        FiniteDistribution { probs }
    }

    pub fn expectation_by(&self, mut f: impl FnMut(&T) -> Rational) -> Rational {
        self.probs.iter().map(|(t, p)| p * f(t)).sum()
    }
}

impl<T: Ord + fmt::Display> fmt::Display for FiniteDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_entries(f, self.probs.iter().map(|(t, p)| (p, t)))
    }
}

/// A finite multiset of `(probability, object)` pairs with mass at most one.
#[derive(Debug, Clone)]
pub struct MultiDistribution<T> {
    entries: Vec<(Rational, T)>,
}

impl<T> Default for MultiDistribution<T> {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
        }
    }
}

impl<T: Clone + Ord> MultiDistribution<T> {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn point(t: T) -> Self {
        Self {
            entries: alloc::vec![(Rational::one(), t)],
        }
    }

    /// Validates the entries; zero-probability entries are removed.
    pub fn new(entries: impl IntoIterator<Item = (Rational, T)>) -> Result<Self, DistError> {
        let mut out = Vec::new();
        for (p, t) in entries {
            if p.is_negative() {
                return Err(DistError::NegativeProbability(p));
            }
            if !p.is_zero() {
                out.push((p, t));
            }
        }
        let mu = Self { entries: out };
        let mass = mu.mass();
        if mass > Rational::one() {
            return Err(DistError::MassExceedsOne(mass));
        }
        Ok(mu)
    }

    /// Entries of a distribution, one per support element.
    pub fn from_distribution(d: &FiniteDistribution<T>) -> Self {
        Self {
            entries: d.iter().map(|(t, p)| (p.clone(), t.clone())).collect(),
        }
    }

    pub fn entries(&self) -> &[(Rational, T)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(Rational, T)> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mass(&self) -> Rational {
        self.entries.iter().map(|(p, _)| p).sum()
    }

    /// `p · μ`: every probability multiplied by `p`.
    pub fn scale(&self, p: &Rational) -> Self {
        if p.is_zero() {
            return Self::empty();
        }
        Self {
            entries: self
                .entries
                .iter()
                .map(|(q, t)| (p * q, t.clone()))
                .collect(),
        }
    }

    /// Multiset union of the scaled parts `p_i · μ_i`, requiring `p_i ≥ 0`
    /// and `Σ p_i ≤ 1`.
    pub fn convex_union<'a>(
        parts: impl IntoIterator<Item = (Rational, &'a MultiDistribution<T>)>,
    ) -> Result<Self, DistError>
    where
        T: 'a,
    {
        let mut total = Rational::zero();
        let mut entries = Vec::new();
        for (p, mu) in parts {
            if p.is_negative() {
                return Err(DistError::InvalidWeights(p));
            }
            total += &p;
            if !p.is_zero() {
                entries.extend(mu.entries.iter().map(|(q, t)| (&p * q, t.clone())));
            }
        }
        if total > Rational::one() {
            return Err(DistError::InvalidWeights(total));
        }
        Ok(Self { entries })
    }

    /// Merges equal objects by summing their probabilities.
    pub fn collapse(&self) -> BTreeMap<T, Rational> {
        let mut out: BTreeMap<T, Rational> = BTreeMap::new();
        for (p, t) in &self.entries {
            *out.entry(t.clone()).or_insert_with(Rational::zero) += p;
        }
        out
    }

    /// The multidistribution with one entry per distinct object. Mass and
    /// expectations are unchanged.
    pub fn merged(&self) -> Self {
        Self {
            entries: self.collapse().into_iter().map(|(t, p)| (p, t)).collect(),
        }
    }

    /// Entrywise image; probabilities and multiplicities are preserved.
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> MultiDistribution<U> {
        MultiDistribution {
            entries: self.entries.iter().map(|(p, t)| (p.clone(), f(t))).collect(),
        }
    }

    pub fn expectation_by(&self, mut f: impl FnMut(&T) -> Rational) -> Rational {
        self.entries.iter().map(|(p, t)| p * f(t)).sum()
    }

    /// Entries sorted by object, then probability: the canonical form used
    /// for multiset equality.
    pub fn canonical(&self) -> Vec<(Rational, T)> {
        let mut v = self.entries.clone();
        v.sort_by(|(p, a), (q, b)| a.cmp(b).then_with(|| p.cmp(q)));
        v
    }

    pub(crate) fn push(&mut self, p: Rational, t: T) {
        if !p.is_zero() {
            self.entries.push((p, t));
        }
    }
}

impl MultiDistribution<Rational> {
    /// `E(μ) = Σ p·x`.
    pub fn expectation(&self) -> Rational {
        self.entries.iter().map(|(p, x)| p * x).sum()
    }
}

impl<T: Clone + Ord> PartialEq for MultiDistribution<T> {
    fn eq(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len() && self.canonical() == other.canonical()
    }
}

impl<T: Clone + Ord> Eq for MultiDistribution<T> {}

impl<T: Clone + Ord> PartialOrd for MultiDistribution<T> {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Clone + Ord> Ord for MultiDistribution<T> {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        let key = |m: &Self| {
            m.canonical()
                .into_iter()
                .map(|(p, t)| (t, p))
                .collect::<Vec<_>>()
        };
        key(self).cmp(&key(other))
    }
}

impl<T: fmt::Display> fmt::Display for MultiDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_entries(f, self.entries.iter().map(|(p, t)| (p, t)))
    }
}

fn write_entries<'a, T: fmt::Display + 'a>(
    f: &mut fmt::Formatter<'_>,
    entries: impl Iterator<Item = (&'a Rational, &'a T)>,
) -> fmt::Result {
    f.write_str("{")?;
    for (i, (p, t)) in entries.enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{p}: {t}")?;
    }
    f.write_str("}")
}
