//! Orientation constraints over unknown interpretation coefficients.
//!
//! Each symbol gets a template interpretation whose coefficients are integer
//! unknowns in a box `0..=B`. A rule `l → {w1/w: r1, …, wn/w: rn}` (weights
//! cleared of denominators) yields, per monomial of
//! `w·[l] − (w1·[r1] + … + wn·[rn])`, the constraint "coefficient ≥ 0", and
//! "≥ 1" for the constant part (first component for matrices). With integer
//! unknowns, "≥ 1" is exactly strict positivity and gives `ε ≥ 1/w`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::form::{Coefficient, Matrix, UPoly};
use crate::interp::{
    InterpError, Interpretation, MatrixInterpretation, MatrixSymbol, PolyInterpretation, PolySymbol,
};
use crate::multidist::Rational;
use crate::rewriting::{ProbRule, Ptrs};
use crate::term::{Name, Signature};

/// Name of the constant added to signatures that have none.
pub const FRESH_CONSTANT: &str = "0";

/// Largest supported matrix dimension.
pub const MAX_MATRIX_DIM: usize = 4;

/// The family of interpretations searched for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    /// Multilinear polynomials whose monomials have at most `degree` variables.
    Poly { degree: usize },
    /// Matrix interpretations of the given dimension.
    Matrix { dim: usize },
}

impl Shape {
    pub const POLY_LINEAR: Shape = Shape::Poly { degree: 1 };
    pub const POLY_MULTILINEAR_2: Shape = Shape::Poly { degree: 2 };

    pub fn default_portfolio() -> Vec<Shape> {
        vec![
            Shape::POLY_LINEAR,
            Shape::POLY_MULTILINEAR_2,
            Shape::Matrix { dim: 2 },
            Shape::Matrix { dim: 3 },
        ]
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Poly { degree: 1 } => f.write_str("poly-linear"),
            Shape::Poly { degree } => write!(f, "poly-multilinear-{degree}"),
            Shape::Matrix { dim } => write!(f, "matrix-{dim}"),
        }
    }
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("unknown shape `{s}` (expected poly-linear, poly-multilinear-N or matrix-N)");
        if s == "poly-linear" {
            return Ok(Shape::POLY_LINEAR);
        }
        if let Some(d) = s.strip_prefix("poly-multilinear-") {
            let degree: usize = d.parse().map_err(|_| bad())?;
            return if degree >= 1 { Ok(Shape::Poly { degree }) } else { Err(bad()) };
        }
        if let Some(d) = s.strip_prefix("matrix-") {
            let dim: usize = d.parse().map_err(|_| bad())?;
            return if (1..=MAX_MATRIX_DIM).contains(&dim) {
                Ok(Shape::Matrix { dim })
            } else {
                Err(format!("matrix dimension must be between 1 and {MAX_MATRIX_DIM}"))
            };
        }
        Err(bad())
    }
}

/// Where an unknown sits in the template interpretation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    /// Coefficient of the monomial over the given (1-based) arguments.
    PolyCoeff { symbol: Name, subset: Vec<usize> },
    /// Entry `(row, col)` (0-based) of the matrix of argument `arg` (1-based).
    MatrixEntry { symbol: Name, arg: usize, row: usize, col: usize },
    /// Component `row` (0-based) of the constant vector.
    VectorEntry { symbol: Name, row: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unknown {
    pub name: String,
    pub slot: Slot,
}

/// Where a constraint comes from, for diagnostics and script comments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Rule { index: usize, part: String },
    Monotone { symbol: Name, arg: usize },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Rule { index, part } => write!(f, "rule {}: {part}", index + 1),
            Origin::Monotone { symbol, arg } => write!(f, "monotonicity of {symbol} in argument {arg}"),
        }
    }
}

/// `poly ≥ at_least`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub poly: UPoly,
    pub at_least: BigInt,
    pub origin: Origin,
}

impl Constraint {
    pub fn holds(&self, assignment: &[BigInt]) -> bool {
        self.poly.eval(assignment) >= self.at_least
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    pub shape: Shape,
    /// Interpreted symbols, in unknown-numbering order.
    pub symbols: Vec<(Name, usize)>,
    pub unknowns: Vec<Unknown>,
    /// Every unknown ranges over `0..=bound`.
    pub bound: u32,
    pub constraints: Vec<Constraint>,
}

impl ConstraintSet {
    /// Linear iff no constraint multiplies unknowns.
    pub fn is_linear(&self) -> bool {
        self.constraints.iter().all(|c| c.poly.degree() <= 1)
    }

    /// Whether `assignment` (indexed like `unknowns`) lies in the box and
    /// satisfies every constraint.
    pub fn satisfied_by(&self, assignment: &[BigInt]) -> bool {
        let bound = BigInt::from(self.bound);
        assignment.len() == self.unknowns.len()
            && assignment.iter().all(|v| !v.is_negative() && *v <= bound)
            && self.constraints.iter().all(|c| c.holds(assignment))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.unknowns.iter().position(|u| u.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("shape {shape} cannot express rule {}: {source}", rule + 1)]
    Interp {
        shape: Shape,
        rule: usize,
        source: InterpError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("model has no value for unknown `{0}`")]
    IncompleteModel(String),
    #[error("model value {value} of `{name}` lies outside 0..={bound}")]
    OutOfBounds { name: String, value: BigInt, bound: u32 },
    #[error(transparent)]
    Interp(#[from] InterpError),
}

/// The signature to interpret: the system's symbols, plus
/// [`FRESH_CONSTANT`] when there is no constant (so ground terms exist).
pub fn interpreted_signature(ptrs: &Ptrs) -> Signature {
    let mut sig = ptrs.signature().clone();
    if sig.constants().next().is_none() && !sig.contains(FRESH_CONSTANT) {
        sig.declare(FRESH_CONSTANT, 0).expect("fresh name");
    }
    sig
}

fn subsets_up_to(arity: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for i in 1..=arity {
        let extended: Vec<Vec<usize>> = out
            .iter()
            .filter(|s| s.len() < degree)
            .map(|s| {
                let mut t = s.clone();
                t.push(i);
                t
            })
            .collect();
        out.extend(extended);
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

enum Template {
    Poly(PolyInterpretation<UPoly>),
    Matrix(MatrixInterpretation<UPoly>),
}

fn build_template(shape: Shape, symbols: &[(Name, usize)]) -> (Template, Vec<Unknown>) {
    let mut unknowns: Vec<Unknown> = Vec::new();
    let mut fresh = |name: String, slot: Slot| {
        let idx = unknowns.len() as u32;
        unknowns.push(Unknown { name, slot });
        UPoly::unknown(idx)
    };
    let template = match shape {
        Shape::Poly { degree } => {
            let mut interp = PolyInterpretation::new();
            for (k, (f, arity)) in symbols.iter().enumerate() {
                let coeffs: Vec<(Vec<usize>, UPoly)> = subsets_up_to(*arity, degree)
                    .into_iter()
                    .map(|subset| {
                        let suffix = if subset.is_empty() {
                            String::from("c")
                        } else {
                            subset.iter().map(|i| format!("x{i}")).collect()
                        };
                        let slot = Slot::PolyCoeff {
                            symbol: f.clone(),
                            subset: subset.clone(),
                        };
                        (subset, fresh(format!("f{k}_{suffix}"), slot))
                    })
                    .collect();
                interp.insert(f.clone(), PolySymbol::new(*arity, coeffs));
            }
            Template::Poly(interp)
        }
        Shape::Matrix { dim } => {
            let mut interp = MatrixInterpretation::new(dim);
            for (k, (f, arity)) in symbols.iter().enumerate() {
                let mut mats = Vec::with_capacity(*arity);
                for arg in 1..=*arity {
                    let rows = (0..dim)
                        .map(|row| {
                            (0..dim)
                                .map(|col| {
                                    let slot = Slot::MatrixEntry {
                                        symbol: f.clone(),
                                        arg,
                                        row,
                                        col,
                                    };
                                    fresh(format!("f{k}_m{arg}_{}{}", row + 1, col + 1), slot)
                                })
                                .collect()
                        })
                        .collect();
                    mats.push(Matrix::from_rows(rows).expect("square"));
                }
                let constant = (0..dim)
                    .map(|row| {
                        let slot = Slot::VectorEntry { symbol: f.clone(), row };
                        fresh(format!("f{k}_v{}", row + 1), slot)
                    })
                    .collect();
                interp
                    .insert(f.clone(), MatrixSymbol::new(mats, constant))
                    .expect("template dimensions agree");
            }
            Template::Matrix(interp)
        }
    };
    (template, unknowns)
}

/// Integer weights `(w, [w1, …, wn])` for a rule's right-hand side: the
/// probabilities scaled by the least common denominator.
pub fn integer_weights(rule: &ProbRule) -> (BigInt, Vec<BigInt>) {
    let w = rule
        .rhs()
        .iter()
        .fold(BigInt::one(), |acc, (_, p)| acc.lcm(p.denom()));
    let ws = rule
        .rhs()
        .iter()
        .map(|(_, p)| (p * Rational::from_integer(w.clone())).to_integer())
        .collect();
    (w, ws)
}

fn push_nontrivial(out: &mut Vec<Constraint>, poly: UPoly, at_least: BigInt, origin: Origin) {
    // constant constraints that hold are dropped, failing ones kept
    if poly.unknowns().is_empty() && poly.constant_term() >= at_least {
        return;
    }
    out.push(Constraint {
        poly,
        at_least,
        origin,
    });
}

/// Builds the orientation and monotonicity constraints for `ptrs` under
/// `shape`, with every unknown in `0..=bound`.
pub fn encode(ptrs: &Ptrs, shape: Shape, bound: u32) -> Result<ConstraintSet, EncodeError> {
    let sig = interpreted_signature(ptrs);
    let symbols: Vec<(Name, usize)> = sig.iter().map(|(f, a)| (f.clone(), a)).collect();
    let (template, unknowns) = build_template(shape, &symbols);
    let mut constraints = Vec::new();

    for (index, rule) in ptrs.rules().iter().enumerate() {
        let wrap = |source| EncodeError::Interp {
            shape,
            rule: index,
            source,
        };
        let (w, ws) = integer_weights(rule);
        match &template {
            Template::Poly(p) => {
                let mut diff = p.form(rule.lhs()).map_err(wrap)?.scale(&UPoly::from_integer(w));
                for ((r, _), wj) in rule.rhs().iter().zip(ws) {
                    diff = diff.sub(&p.form(r).map_err(wrap)?.scale(&UPoly::from_integer(wj)));
                }
                for (m, c) in diff.iter().filter(|(m, _)| !m.is_empty()) {
                    let part = format!("coefficient of {}", m.iter().map(|x| &**x).collect::<Vec<_>>().join("*"));
                    push_nontrivial(&mut constraints, c.clone(), BigInt::zero(), Origin::Rule { index, part });
                }
                push_nontrivial(
                    &mut constraints,
                    diff.constant_part(),
                    BigInt::one(),
                    Origin::Rule {
                        index,
                        part: String::from("constant"),
                    },
                );
            }
            Template::Matrix(m) => {
                let mut diff = m.form(rule.lhs()).map_err(wrap)?.scale(&UPoly::from_integer(w));
                for ((r, _), wj) in rule.rhs().iter().zip(ws) {
                    diff = diff.sub(&m.form(r).map_err(wrap)?.scale(&UPoly::from_integer(wj)));
                }
                for (x, mat) in diff.var_matrices() {
                    for (i, row) in mat.rows().iter().enumerate() {
                        for (j, c) in row.iter().enumerate() {
                            let part = format!("{x} entry {},{}", i + 1, j + 1);
                            push_nontrivial(&mut constraints, c.clone(), BigInt::zero(), Origin::Rule { index, part });
                        }
                    }
                }
                for (i, c) in diff.constant_part().iter().enumerate() {
                    let at_least = if i == 0 { BigInt::one() } else { BigInt::zero() };
                    let part = format!("constant component {}", i + 1);
                    push_nontrivial(&mut constraints, c.clone(), at_least, Origin::Rule { index, part });
                }
            }
        }
    }

    for (idx, u) in unknowns.iter().enumerate() {
        let monotone_arg = match &u.slot {
            Slot::PolyCoeff { subset, .. } if subset.len() == 1 => Some(subset[0]),
            Slot::MatrixEntry { arg, row: 0, col: 0, .. } => Some(*arg),
            _ => None,
        };
        if let Some(arg) = monotone_arg {
            let symbol = match &u.slot {
                Slot::PolyCoeff { symbol, .. } | Slot::MatrixEntry { symbol, .. } | Slot::VectorEntry { symbol, .. } => {
                    symbol.clone()
                }
            };
            constraints.push(Constraint {
                poly: UPoly::unknown(idx as u32),
                at_least: BigInt::one(),
                origin: Origin::Monotone { symbol, arg },
            });
        }
    }

    Ok(ConstraintSet {
        shape,
        symbols,
        unknowns,
        bound,
        constraints,
    })
}

/// Builds the concrete interpretation described by `model` (unknown name to
/// integer value). The result still has to pass
/// [`check_certificate`](crate::interp::check_certificate).
pub fn decode(cs: &ConstraintSet, model: &BTreeMap<String, BigInt>) -> Result<Interpretation, DecodeError> {
    let values = assignment_from_model(cs, model)?;
    Ok(interpretation_from_assignment(cs, &values))
}

/// Model values in unknown order, checked against the box.
pub fn assignment_from_model(cs: &ConstraintSet, model: &BTreeMap<String, BigInt>) -> Result<Vec<BigInt>, DecodeError> {
    let bound = BigInt::from(cs.bound);
    cs.unknowns
        .iter()
        .map(|u| {
            let v = model
                .get(&u.name)
                .ok_or_else(|| DecodeError::IncompleteModel(u.name.clone()))?;
            if v.is_negative() || *v > bound {
                return Err(DecodeError::OutOfBounds {
                    name: u.name.clone(),
                    value: v.clone(),
                    bound: cs.bound,
                });
            }
            Ok(v.clone())
        })
        .collect()
}

/// The interpretation obtained by plugging `values` (indexed like
/// `cs.unknowns`) into the template.
pub fn interpretation_from_assignment(cs: &ConstraintSet, values: &[BigInt]) -> Interpretation {
    let q = |i: usize| Rational::from_integer(values[i].clone());
    match cs.shape {
        Shape::Poly { .. } => {
            let mut per_symbol: BTreeMap<Name, Vec<(Vec<usize>, Rational)>> = BTreeMap::new();
            for (i, u) in cs.unknowns.iter().enumerate() {
                if let Slot::PolyCoeff { symbol, subset } = &u.slot {
                    per_symbol.entry(symbol.clone()).or_default().push((subset.clone(), q(i)));
                }
            }
            let mut interp = PolyInterpretation::new();
            for (f, arity) in &cs.symbols {
                let coeffs = per_symbol.remove(f).unwrap_or_default();
                interp.insert(f.clone(), PolySymbol::new(*arity, coeffs));
            }
            Interpretation::Poly(interp)
        }
        Shape::Matrix { dim } => {
            let mut mats: BTreeMap<Name, Vec<Vec<Vec<Rational>>>> = BTreeMap::new();
            let mut vecs: BTreeMap<Name, Vec<Rational>> = BTreeMap::new();
            for (f, arity) in &cs.symbols {
                mats.insert(f.clone(), vec![vec![vec![Rational::zero(); dim]; dim]; *arity]);
                vecs.insert(f.clone(), vec![Rational::zero(); dim]);
            }
            for (i, u) in cs.unknowns.iter().enumerate() {
                match &u.slot {
                    Slot::MatrixEntry { symbol, arg, row, col } => {
                        mats.get_mut(symbol).expect("declared")[arg - 1][*row][*col] = q(i);
                    }
                    Slot::VectorEntry { symbol, row } => {
                        vecs.get_mut(symbol).expect("declared")[*row] = q(i);
                    }
                    Slot::PolyCoeff { .. } => {}
                }
            }
            let mut interp = MatrixInterpretation::new(dim);
            for (f, _) in &cs.symbols {
                let matrices = mats
                    .remove(f)
                    .unwrap_or_default()
                    .into_iter()
                    .map(|rows| Matrix::from_rows(rows).expect("square"))
                    .collect();
                let constant = vecs.remove(f).unwrap_or_default();
                interp
                    .insert(f.clone(), MatrixSymbol::new(matrices, constant))
                    .expect("dimensions agree");
            }
            Interpretation::Matrix(interp)
        }
    }
}
