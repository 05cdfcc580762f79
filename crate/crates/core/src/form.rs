//! Symbolic images of terms.
//!
//! A [`PolyForm`] is a multilinear polynomial over term variables and a
//! [`VecForm`] an affine map `Σ M_x·x + c` over vector-valued variables. Both
//! are generic over the coefficient ring: exact rationals when checking a
//! concrete interpretation, [`UPoly`] (integer polynomials over unknown
//! coefficients) when encoding a search for one.

use alloc::collections::btree_map::Entry;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::multidist::Rational;
use crate::term::Name;

pub trait Coefficient:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_integer(n: BigInt) -> Self;
}

impl Coefficient for Rational {
    fn from_integer(n: BigInt) -> Self {
        Rational::from_integer(n)
    }
}

/// A polynomial with integer coefficients over unknowns `u0, u1, …`.
///
/// Monomials are sorted index lists; a repeated index is a power.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UPoly {
    terms: BTreeMap<Vec<u32>, BigInt>,
}

impl UPoly {
    pub fn unknown(index: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![index], BigInt::one());
        Self { terms }
    }

    pub fn constant(n: BigInt) -> Self {
        let mut terms = BTreeMap::new();
        if !n.is_zero() {
            terms.insert(Vec::new(), n);
        }
        Self { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigInt)> + '_ {
        self.terms.iter().map(|(m, c)| (m.as_slice(), c))
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> BigInt {
        self.terms.get(&Vec::new()).cloned().unwrap_or_default()
    }

    pub fn unknowns(&self) -> BTreeSet<u32> {
        self.terms.keys().flatten().copied().collect()
    }

    /// Value under `assignment[i]` for unknown `i`.
    pub fn eval(&self, assignment: &[BigInt]) -> BigInt {
        self.terms
            .iter()
            .map(|(m, c)| m.iter().fold(c.clone(), |acc, &i| acc * &assignment[i as usize]))
            .sum()
    }

    fn insert(&mut self, monomial: Vec<u32>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(monomial) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }
}

impl Add for UPoly {
    type Output = UPoly;
    fn add(mut self, rhs: UPoly) -> UPoly {
        for (m, c) in rhs.terms {
            self.insert(m, c);
        }
        self
    }
}

impl Neg for UPoly {
    type Output = UPoly;
    fn neg(mut self) -> UPoly {
        self.terms.values_mut().for_each(|c| *c = -core::mem::take(c));
        self
    }
}

impl Sub for UPoly {
    type Output = UPoly;
    fn sub(self, rhs: UPoly) -> UPoly {
        self + (-rhs)
    }
}

impl Mul for UPoly {
    type Output = UPoly;
    fn mul(self, rhs: UPoly) -> UPoly {
        let mut out = UPoly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                let mut m: Vec<u32> = m1.iter().chain(m2).copied().collect();
                m.sort_unstable();
                out.insert(m, c1 * c2);
            }
        }
        out
    }
}

impl Zero for UPoly {
    fn zero() -> Self {
        UPoly::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for UPoly {
    fn one() -> Self {
        UPoly::constant(BigInt::one())
    }
}

impl Coefficient for UPoly {
    fn from_integer(n: BigInt) -> Self {
        UPoly::constant(n)
    }
}

/// A variable squared while composing multilinear interpretations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("non-multilinear monomial: variable `{0}` occurs in both factors")]
pub struct DegreeOverflow(pub Name);

/// A sorted set of distinct variables; the empty monomial is the constant.
pub type Monomial = Vec<Name>;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyForm<C> {
    coeffs: BTreeMap<Monomial, C>,
}

impl<C: Coefficient> PolyForm<C> {
    pub fn zero() -> Self {
        Self {
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(c: C) -> Self {
        let mut f = Self::zero();
        f.add_term(Vec::new(), c);
        f
    }

    pub fn var(x: Name) -> Self {
        let mut f = Self::zero();
        f.add_term(vec![x], C::one());
        f
    }

    fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.get_mut(&m) {
            Some(slot) => {
                let sum = slot.clone() + c;
                if sum.is_zero() {
                    self.coeffs.remove(&m);
                } else {
                    *slot = sum;
                }
            }
            None => {
                self.coeffs.insert(m, c);
            }
        }
    }

    pub fn coefficient(&self, m: &[Name]) -> C {
        self.coeffs.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn constant_part(&self) -> C {
        self.coefficient(&[])
    }

    /// Nonzero coefficients, constant monomial first.
    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &C)> + '_ {
        self.coeffs.iter()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.coeffs {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-C::one()))
    }

    pub fn scale(&self, k: &C) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.coeffs {
            out.add_term(m.clone(), k.clone() * c.clone());
        }
        out
    }

    /// Product, rejecting any monomial in which a variable would be squared.
    pub fn mul(&self, other: &Self) -> Result<Self, DegreeOverflow> {
        let mut out = Self::zero();
        for (m1, c1) in &self.coeffs {
            for (m2, c2) in &other.coeffs {
                if let Some(x) = m1.iter().find(|x| m2.contains(x)) {
                    return Err(DegreeOverflow(x.clone()));
                }
                let mut m: Monomial = m1.iter().chain(m2).cloned().collect();
                m.sort();
                out.add_term(m, c1.clone() * c2.clone());
            }
        }
        Ok(out)
    }
}

impl PolyForm<Rational> {
    /// Value at `alpha`; unassigned variables count as zero.
    pub fn eval(&self, alpha: &BTreeMap<Name, Rational>) -> Rational {
        self.coeffs
            .iter()
            .map(|(m, c)| {
                m.iter().fold(c.clone(), |acc, x| {
                    acc * alpha.get(x).cloned().unwrap_or_else(Rational::zero)
                })
            })
            .sum()
    }
}

/// Square matrix over a coefficient ring.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix<C> {
    rows: Vec<Vec<C>>,
}

impl<C: Coefficient> Matrix<C> {
    pub fn from_rows(rows: Vec<Vec<C>>) -> Option<Self> {
        let n = rows.len();
        (n > 0 && rows.iter().all(|r| r.len() == n)).then_some(Self { rows })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            rows: vec![vec![C::zero(); dim]; dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m.rows[i][i] = C::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &C {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<C>] {
        &self.rows
    }

    pub fn entries(&self) -> impl Iterator<Item = &C> + '_ {
        self.rows.iter().flatten()
    }

    pub fn is_zero(&self) -> bool {
        self.entries().all(Zero::is_zero)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.dim();
        let mut rows = vec![vec![C::zero(); n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = (0..n).fold(C::zero(), |acc, k| {
                    acc + self.rows[i][k].clone() * other.rows[k][j].clone()
                });
            }
        }
        Self { rows }
    }

    pub fn mul_vec(&self, v: &[C]) -> Vec<C> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(C::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(r1, r2)| r1.iter().zip(r2).map(|(a, b)| a.clone() + b.clone()).collect())
                .collect(),
        }
    }

    pub fn scale(&self, k: &C) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|a| k.clone() * a.clone()).collect())
                .collect(),
        }
    }
}

/// `Σ_x M_x · x + c` over vectors of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct VecForm<C> {
    dim: usize,
    vars: BTreeMap<Name, Matrix<C>>,
    constant: Vec<C>,
}

impl<C: Coefficient> VecForm<C> {
    pub fn var(x: Name, dim: usize) -> Self {
        let mut vars = BTreeMap::new();
        vars.insert(x, Matrix::identity(dim));
        Self {
            dim,
            vars,
            constant: vec![C::zero(); dim],
        }
    }

    pub fn constant(c: Vec<C>) -> Self {
        Self {
            dim: c.len(),
            vars: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant_part(&self) -> &[C] {
        &self.constant
    }

    pub fn var_matrices(&self) -> impl Iterator<Item = (&Name, &Matrix<C>)> + '_ {
        self.vars.iter()
    }

    /// `M · self`.
    pub fn transform(&self, m: &Matrix<C>) -> Self {
        let mut vars = BTreeMap::new();
        for (x, mx) in &self.vars {
            let p = m.mul(mx);
            if !p.is_zero() {
                vars.insert(x.clone(), p);
            }
        }
        Self {
            dim: self.dim,
            vars,
            constant: m.mul_vec(&self.constant),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut vars = self.vars.clone();
        for (x, m) in &other.vars {
            let sum = match vars.get(x) {
                Some(prev) => prev.add(m),
                None => m.clone(),
            };
            if sum.is_zero() {
                vars.remove(x);
            } else {
                vars.insert(x.clone(), sum);
            }
        }
        Self {
            dim: self.dim,
            vars,
            constant: self
                .constant
                .iter()
                .zip(&other.constant)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn scale(&self, k: &C) -> Self {
        Self {
            dim: self.dim,
            vars: self
                .vars
                .iter()
                .map(|(x, m)| (x.clone(), m.scale(k)))
                .filter(|(_, m)| !m.is_zero())
                .collect(),
            constant: self.constant.iter().map(|a| k.clone() * a.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-C::one()))
    }
}

impl VecForm<Rational> {
    /// Value at `alpha`; unassigned variables are the zero vector.
    pub fn eval(&self, alpha: &BTreeMap<Name, Vec<Rational>>) -> Vec<Rational> {
        let mut out = self.constant.clone();
        for (x, m) in &self.vars {
            if let Some(v) = alpha.get(x) {
                for (o, p) in out.iter_mut().zip(m.mul_vec(v)) {
                    *o += p;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multidist::{int, ratio};
    use alloc::sync::Arc;

    fn x() -> Name {
        Arc::from("x")
    }
    fn y() -> Name {
        Arc::from("y")
    }

    #[test]
    fn upoly_arithmetic() {
        let a = UPoly::unknown(0);
        let b = UPoly::unknown(1);
        let p = (a.clone() + b.clone()) * (a.clone() - b.clone());
        // a² − b²
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval(&[BigInt::from(3), BigInt::from(2)]), BigInt::from(5));
        assert!((a.clone() - a).is_zero());
        assert_eq!(p.unknowns().len(), 2);
    }

    #[test]
    fn polyform_rejects_squares() {
        let fx: PolyForm<Rational> = PolyForm::var(x());
        let fy = PolyForm::var(y());
        let xy = fx.mul(&fy).unwrap();
        assert_eq!(xy.coefficient(&[x(), y()]), int(1));
        assert_eq!(fx.mul(&fx), Err(DegreeOverflow(x())));
        // constants multiply freely
        let two = PolyForm::constant(int(2));
        assert_eq!(two.mul(&fx).unwrap().coefficient(&[x()]), int(2));
    }

    #[test]
    fn polyform_eval_and_cancel() {
        let f = PolyForm::var(x()).add(&PolyForm::constant(ratio(1, 2)));
        let g = f.sub(&PolyForm::var(x()));
        assert_eq!(g, PolyForm::constant(ratio(1, 2)));
        let mut alpha = BTreeMap::new();
        alpha.insert(x(), int(3));
        assert_eq!(f.eval(&alpha), ratio(7, 2));
    }

    #[test]
    fn vecform_transform() {
        let a = Matrix::from_rows(vec![vec![int(1), int(1)], vec![int(0), int(0)]]).unwrap();
        let c = vec![int(0), int(1)];
        // a(x) = A x + c; a(a(x)) = A A x + A c + c
        let ax = VecForm::var(x(), 2).transform(&a).add(&VecForm::constant(c.clone()));
        let aax = ax.transform(&a).add(&VecForm::constant(c));
        let mut alpha = BTreeMap::new();
        alpha.insert(x(), vec![int(5), int(7)]);
        assert_eq!(aax.eval(&alpha), vec![int(13), int(1)]);
    }
}
