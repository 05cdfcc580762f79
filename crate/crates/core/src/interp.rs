//! Polynomial and matrix interpretations and exact certificate checking.
//!
//! A rule `l → d` is oriented when `[l] − E([d])` is absolutely positive:
//! every non-constant coefficient is non-negative and the constant part is
//! strictly positive (for matrices: every matrix entry and every constant
//! component non-negative, the first constant component strictly positive).
//! The constant part is then the rule's margin, i.e. the least decrease over
//! all assignments, and the minimum margin is the certificate's `ε`.
//!
//! Multilinear polynomials and matrix maps are affine in each argument, so a
//! certificate yields a ranking function on terms: the interpretation under
//! the all-zero assignment (first component for matrices).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::form::{Coefficient, DegreeOverflow, Matrix, PolyForm, VecForm};
use crate::multidist::Rational;
use crate::rewriting::{ProbRule, Ptrs};
use crate::term::{Name, Signature, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("no interpretation for symbol `{0}`")]
    MissingSymbol(Name),
    #[error("symbol `{symbol}` is interpreted with arity {interpreted} but used with arity {used}")]
    ArityMismatch {
        symbol: Name,
        interpreted: usize,
        used: usize,
    },
    #[error("interpretation of `{0}` has the wrong dimension")]
    DimensionMismatch(Name),
    #[error("interpretation of `{0}` has a negative coefficient")]
    NegativeCoefficient(Name),
    #[error("interpretation of `{symbol}` is not strictly monotone in argument {arg}")]
    NotMonotone { symbol: Name, arg: usize },
    #[error("interpretation of `{symbol}` mentions argument {arg}, but its arity is {arity}")]
    BadMonomial { symbol: Name, arg: usize, arity: usize },
    #[error(transparent)]
    DegreeOverflow(#[from] DegreeOverflow),
}

/// Why a rule is not oriented.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrientError {
    #[error("coefficient of {what} in [l] - E([r]) is {value}, must be >= 0")]
    NegativeCoefficient { what: String, value: Rational },
    #[error("constant margin of [l] - E([r]) is {0}, must be > 0")]
    NoStrictDecrease(Rational),
    #[error(transparent)]
    Interp(#[from] InterpError),
}

/// `f(x1,…,xn) = Σ_V c_V · Π_{i∈V} x_i` over subsets `V ⊆ {1..n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolySymbol<C> {
    arity: usize,
    coeffs: BTreeMap<Vec<usize>, C>,
}

impl<C: Coefficient> PolySymbol<C> {
    /// Subsets are lists of 1-based argument indices; they are sorted and
    /// zero coefficients are dropped.
    pub fn new(arity: usize, coeffs: impl IntoIterator<Item = (Vec<usize>, C)>) -> Self {
        let mut map = BTreeMap::new();
        for (mut subset, c) in coeffs {
            subset.sort_unstable();
            subset.dedup();
            if !c.is_zero() {
                map.insert(subset, c);
            }
        }
        Self { arity, coeffs: map }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn coeff(&self, subset: &[usize]) -> C {
        self.coeffs.get(subset).cloned().unwrap_or_else(C::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &C)> + '_ {
        self.coeffs.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyInterpretation<C> {
    symbols: BTreeMap<Name, PolySymbol<C>>,
}

impl<C: Coefficient> Default for PolyInterpretation<C> {
    fn default() -> Self {
        Self {
            symbols: BTreeMap::new(),
        }
    }
}

impl<C: Coefficient> PolyInterpretation<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, symbol: impl Into<Name>, interp: PolySymbol<C>) {
        self.symbols.insert(symbol.into(), interp);
    }

    pub fn symbol(&self, f: &str) -> Option<&PolySymbol<C>> {
        self.symbols.get(f)
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&Name, &PolySymbol<C>)> + '_ {
        self.symbols.iter()
    }

    fn lookup(&self, f: &Name, used: usize) -> Result<&PolySymbol<C>, InterpError> {
        let sym = self
            .symbols
            .get(f)
            .ok_or_else(|| InterpError::MissingSymbol(f.clone()))?;
        if sym.arity != used {
            return Err(InterpError::ArityMismatch {
                symbol: f.clone(),
                interpreted: sym.arity,
                used,
            });
        }
        Ok(sym)
    }

    /// `[t]` as a polynomial in the variables of `t`.
    pub fn form(&self, t: &Term) -> Result<PolyForm<C>, InterpError> {
        match t {
            Term::Var(x) => Ok(PolyForm::var(x.clone())),
            Term::App(f, args) => {
                let sym = self.lookup(f, args.len())?;
                let forms = args
                    .iter()
                    .map(|a| self.form(a))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut out = PolyForm::zero();
                for (subset, c) in &sym.coeffs {
                    let mut prod = PolyForm::constant(c.clone());
                    for &i in subset {
                        let arg = forms.get(i.wrapping_sub(1)).ok_or(InterpError::BadMonomial {
                            symbol: f.clone(),
                            arg: i,
                            arity: sym.arity,
                        })?;
                        prod = prod.mul(arg)?;
                    }
                    out = out.add(&prod);
                }
                Ok(out)
            }
        }
    }
}

impl PolyInterpretation<Rational> {
    /// `[f](args)` on concrete carrier values.
    pub fn apply(&self, f: &Name, args: &[Rational]) -> Result<Rational, InterpError> {
        let sym = self.lookup(f, args.len())?;
        Ok(sym
            .coeffs
            .iter()
            .map(|(subset, c)| subset.iter().fold(c.clone(), |acc, &i| acc * &args[i - 1]))
            .sum())
    }

    /// `[t]^α`; variables missing from `alpha` are zero.
    pub fn eval(&self, t: &Term, alpha: &BTreeMap<Name, Rational>) -> Result<Rational, InterpError> {
        match t {
            Term::Var(x) => Ok(alpha.get(x).cloned().unwrap_or_else(Rational::zero)),
            Term::App(f, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval(a, alpha))
                    .collect::<Result<Vec<_>, _>>()?;
                self.apply(f, &vals)
            }
        }
    }

    /// Non-negative coefficients and `c_{i} ≥ 1` for every argument `i`.
    pub fn validate(&self) -> Result<(), InterpError> {
        for (f, sym) in &self.symbols {
            for (subset, c) in &sym.coeffs {
                if c.is_negative() {
                    return Err(InterpError::NegativeCoefficient(f.clone()));
                }
                if let Some(&i) = subset.iter().find(|&&i| i == 0 || i > sym.arity) {
                    return Err(InterpError::BadMonomial {
                        symbol: f.clone(),
                        arg: i,
                        arity: sym.arity,
                    });
                }
            }
            for arg in 1..=sym.arity {
                if sym.coeff(&[arg]) < Rational::one() {
                    return Err(InterpError::NotMonotone {
                        symbol: f.clone(),
                        arg,
                    });
                }
            }
        }
        Ok(())
    }

    fn margin(&self, rule: &ProbRule) -> Result<Rational, OrientError> {
        let mut diff = self.form(rule.lhs())?;
        for (r, p) in rule.rhs().iter() {
            diff = diff.sub(&self.form(r)?.scale(p));
        }
        for (m, c) in diff.iter() {
            if !m.is_empty() && c.is_negative() {
                return Err(OrientError::NegativeCoefficient {
                    what: monomial_name(m),
                    value: c.clone(),
                });
            }
        }
        let margin = diff.constant_part();
        if !margin.is_positive() {
            return Err(OrientError::NoStrictDecrease(margin));
        }
        Ok(margin)
    }
}

fn monomial_name(m: &[Name]) -> String {
    m.iter().map(|x| &**x).collect::<Vec<&str>>().join("*")
}

/// `f(x1,…,xn) = Σ C_i · x_i + c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixSymbol<C> {
    args: Vec<Matrix<C>>,
    constant: Vec<C>,
}

impl<C: Coefficient> MatrixSymbol<C> {
    pub fn new(args: Vec<Matrix<C>>, constant: Vec<C>) -> Self {
        Self { args, constant }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn matrices(&self) -> &[Matrix<C>] {
        &self.args
    }

    pub fn constant(&self) -> &[C] {
        &self.constant
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixInterpretation<C> {
    dim: usize,
    symbols: BTreeMap<Name, MatrixSymbol<C>>,
}

impl<C: Coefficient> MatrixInterpretation<C> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            symbols: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fails if the matrices or vector do not have dimension `dim`.
    pub fn insert(&mut self, symbol: impl Into<Name>, interp: MatrixSymbol<C>) -> Result<(), InterpError> {
        let symbol = symbol.into();
        let ok = interp.constant.len() == self.dim && interp.args.iter().all(|m| m.dim() == self.dim);
        if !ok {
            return Err(InterpError::DimensionMismatch(symbol));
        }
        self.symbols.insert(symbol, interp);
        Ok(())
    }

    pub fn symbol(&self, f: &str) -> Option<&MatrixSymbol<C>> {
        self.symbols.get(f)
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&Name, &MatrixSymbol<C>)> + '_ {
        self.symbols.iter()
    }

    fn lookup(&self, f: &Name, used: usize) -> Result<&MatrixSymbol<C>, InterpError> {
        let sym = self
            .symbols
            .get(f)
            .ok_or_else(|| InterpError::MissingSymbol(f.clone()))?;
        if sym.arity() != used {
            return Err(InterpError::ArityMismatch {
                symbol: f.clone(),
                interpreted: sym.arity(),
                used,
            });
        }
        Ok(sym)
    }

    /// `[t]` as an affine map of the (vector) variables of `t`.
    pub fn form(&self, t: &Term) -> Result<VecForm<C>, InterpError> {
        match t {
            Term::Var(x) => Ok(VecForm::var(x.clone(), self.dim)),
            Term::App(f, args) => {
                let sym = self.lookup(f, args.len())?;
                let mut out = VecForm::constant(sym.constant.clone());
                for (a, m) in args.iter().zip(&sym.args) {
                    out = out.add(&self.form(a)?.transform(m));
                }
                Ok(out)
            }
        }
    }
}

impl MatrixInterpretation<Rational> {
    pub fn apply(&self, f: &Name, args: &[Vec<Rational>]) -> Result<Vec<Rational>, InterpError> {
        let sym = self.lookup(f, args.len())?;
        let mut out = sym.constant.clone();
        for (m, v) in sym.args.iter().zip(args) {
            for (o, p) in out.iter_mut().zip(m.mul_vec(v)) {
                *o += p;
            }
        }
        Ok(out)
    }

    /// `[t]^α`; variables missing from `alpha` are the zero vector.
    pub fn eval(&self, t: &Term, alpha: &BTreeMap<Name, Vec<Rational>>) -> Result<Vec<Rational>, InterpError> {
        match t {
            Term::Var(x) => Ok(alpha
                .get(x)
                .cloned()
                .unwrap_or_else(|| alloc::vec![Rational::zero(); self.dim])),
            Term::App(f, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval(a, alpha))
                    .collect::<Result<Vec<_>, _>>()?;
                self.apply(f, &vals)
            }
        }
    }

    /// Non-negative entries and `(C_i)_{1,1} ≥ 1` for every argument.
    pub fn validate(&self) -> Result<(), InterpError> {
        for (f, sym) in &self.symbols {
            let entries = sym.args.iter().flat_map(Matrix::entries).chain(&sym.constant);
            if entries.into_iter().any(Signed::is_negative) {
                return Err(InterpError::NegativeCoefficient(f.clone()));
            }
            for (i, m) in sym.args.iter().enumerate() {
                if *m.get(0, 0) < Rational::one() {
                    return Err(InterpError::NotMonotone {
                        symbol: f.clone(),
                        arg: i + 1,
                    });
                }
            }
        }
        Ok(())
    }

    fn margin(&self, rule: &ProbRule) -> Result<Rational, OrientError> {
        let mut diff = self.form(rule.lhs())?;
        for (r, p) in rule.rhs().iter() {
            diff = diff.sub(&self.form(r)?.scale(p));
        }
        for (x, m) in diff.var_matrices() {
            for (i, row) in m.rows().iter().enumerate() {
                if let Some((j, c)) = row.iter().enumerate().find(|(_, c)| c.is_negative()) {
                    return Err(OrientError::NegativeCoefficient {
                        what: format!("{x} (matrix entry {},{})", i + 1, j + 1),
                        value: c.clone(),
                    });
                }
            }
        }
        let constant = diff.constant_part();
        if let Some((i, c)) = constant.iter().enumerate().skip(1).find(|(_, c)| c.is_negative()) {
            return Err(OrientError::NegativeCoefficient {
                what: format!("constant component {}", i + 1),
                value: c.clone(),
            });
        }
        let margin = constant[0].clone();
        if !margin.is_positive() {
            return Err(OrientError::NoStrictDecrease(margin));
        }
        Ok(margin)
    }
}

/// A concrete carrier value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Scalar(Rational),
    Vector(Vec<Rational>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpretationKind {
    Polynomial,
    Matrix(usize),
}

impl fmt::Display for InterpretationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterpretationKind::Polynomial => f.write_str("polynomial"),
            InterpretationKind::Matrix(d) => write!(f, "matrix {d}"),
        }
    }
}

/// A concrete interpretation with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Interpretation {
    Poly(PolyInterpretation<Rational>),
    Matrix(MatrixInterpretation<Rational>),
}

impl Interpretation {
    pub fn kind(&self) -> InterpretationKind {
        match self {
            Interpretation::Poly(_) => InterpretationKind::Polynomial,
            Interpretation::Matrix(m) => InterpretationKind::Matrix(m.dim),
        }
    }

    pub fn validate(&self) -> Result<(), InterpError> {
        match self {
            Interpretation::Poly(p) => p.validate(),
            Interpretation::Matrix(m) => m.validate(),
        }
    }

    pub fn interprets(&self, f: &str) -> Option<usize> {
        match self {
            Interpretation::Poly(p) => p.symbol(f).map(PolySymbol::arity),
            Interpretation::Matrix(m) => m.symbol(f).map(MatrixSymbol::arity),
        }
    }

    /// Every symbol of `sig` is interpreted at its arity.
    pub fn covers(&self, sig: &Signature) -> Result<(), InterpError> {
        for (f, arity) in sig.iter() {
            match self.interprets(f) {
                None => return Err(InterpError::MissingSymbol(f.clone())),
                Some(a) if a != arity => {
                    return Err(InterpError::ArityMismatch {
                        symbol: f.clone(),
                        interpreted: a,
                        used: arity,
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// The interpreted signature.
    pub fn signature(&self) -> Signature {
        let mut sig = Signature::new();
        let pairs: Vec<(Name, usize)> = match self {
            Interpretation::Poly(p) => p.symbols().map(|(f, s)| (f.clone(), s.arity())).collect(),
            Interpretation::Matrix(m) => m.symbols().map(|(f, s)| (f.clone(), s.arity())).collect(),
        };
        for (f, a) in pairs {
            sig.declare(f, a).expect("names are unique in the map");
        }
        sig
    }

    /// `[t]^α`. Polynomial interpretations expect scalar values in `alpha`,
    /// matrix interpretations vectors; mismatched entries count as zero.
    pub fn eval_term(&self, t: &Term, alpha: &BTreeMap<Name, Value>) -> Result<Value, InterpError> {
        match self {
            Interpretation::Poly(p) => {
                let a = alpha
                    .iter()
                    .filter_map(|(x, v)| match v {
                        Value::Scalar(q) => Some((x.clone(), q.clone())),
                        Value::Vector(_) => None,
                    })
                    .collect();
                p.eval(t, &a).map(Value::Scalar)
            }
            Interpretation::Matrix(m) => {
                let a = alpha
                    .iter()
                    .filter_map(|(x, v)| match v {
                        Value::Vector(q) => Some((x.clone(), q.clone())),
                        Value::Scalar(_) => None,
                    })
                    .collect();
                m.eval(t, &a).map(Value::Vector)
            }
        }
    }

    /// The margin `ε_{l→d}` of a rule, or why it is not oriented.
    pub fn orientation_margin(&self, rule: &ProbRule) -> Result<Rational, OrientError> {
        match self {
            Interpretation::Poly(p) => p.margin(rule),
            Interpretation::Matrix(m) => m.margin(rule),
        }
    }

    /// The ranking value of `t`: `[t]` at the all-zero assignment, first
    /// component for matrices.
    pub fn rank(&self, t: &Term) -> Result<Rational, InterpError> {
        match self {
            Interpretation::Poly(p) => p.eval(t, &BTreeMap::new()),
            Interpretation::Matrix(m) => {
                m.eval(t, &BTreeMap::new()).map(|v| v.into_iter().next().unwrap_or_default())
            }
        }
    }

    /// [`rank`](Self::rank), remembering the value of every subterm in
    /// `memo`.
    pub fn rank_memo(&self, t: &Term, memo: &mut RankMemo) -> Result<Rational, InterpError> {
        Ok(self.value_memo(t, memo)?.into_iter().next().unwrap_or_default())
    }

    fn value_memo(&self, t: &Term, memo: &mut RankMemo) -> Result<Vec<Rational>, InterpError> {
        if let Some(v) = memo.values.get(t) {
            return Ok(v.clone());
        }
        let v = match t {
            Term::Var(_) => match self {
                Interpretation::Poly(_) => alloc::vec![Rational::zero()],
                Interpretation::Matrix(m) => alloc::vec![Rational::zero(); m.dim()],
            },
            Term::App(f, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.value_memo(a, memo))
                    .collect::<Result<Vec<_>, _>>()?;
                match self {
                    Interpretation::Poly(p) => {
                        let xs: Vec<Rational> = vals.into_iter().map(|v| v[0].clone()).collect();
                        alloc::vec![p.apply(f, &xs)?]
                    }
                    Interpretation::Matrix(m) => m.apply(f, &vals)?,
                }
            }
        };
        memo.values.insert(t.clone(), v.clone());
        Ok(v)
    }
}

/// Values of subterms seen by [`Interpretation::rank_memo`].
#[derive(Debug, Default)]
pub struct RankMemo {
    values: BTreeMap<Term, Vec<Rational>>,
}

/// A verified termination certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    interpretation: Interpretation,
    margins: Vec<Rational>,
    epsilon: Rational,
}

impl Certificate {
    pub fn interpretation(&self) -> &Interpretation {
        &self.interpretation
    }

    /// Per-rule margins, in rule order.
    pub fn margins(&self) -> &[Rational] {
        &self.margins
    }

    pub fn epsilon(&self) -> &Rational {
        &self.epsilon
    }

    /// The ranking function on terms.
    pub fn rank(&self, t: &Term) -> Result<Rational, InterpError> {
        self.interpretation.rank(t)
    }

    /// A copy with `ε` replaced, bypassing verification. Only meaningful for
    /// mutation testing of the drift checks.
    pub fn with_epsilon_unchecked(&self, epsilon: Rational) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error("invalid interpretation: {0}")]
    Invalid(#[from] InterpError),
    #[error("{} rule(s) not oriented", .0.len())]
    NotOriented(Vec<(usize, OrientError)>),
}

/// Verifies that `interp` orients every rule of `ptrs`.
pub fn check_certificate(interp: &Interpretation, ptrs: &Ptrs) -> Result<Certificate, CertError> {
    interp.validate()?;
    interp.covers(ptrs.signature())?;
    let mut margins = Vec::with_capacity(ptrs.rules().len());
    let mut failures = Vec::new();
    for (i, rule) in ptrs.rules().iter().enumerate() {
        match interp.orientation_margin(rule) {
            Ok(m) => margins.push(m),
            Err(e) => failures.push((i, e)),
        }
    }
    if !failures.is_empty() {
        return Err(CertError::NotOriented(failures));
    }
    let epsilon = margins.iter().min().cloned().unwrap_or_else(Rational::one);
    Ok(Certificate {
        interpretation: interp.clone(),
        margins,
        epsilon,
    })
}

fn arg_names(arity: usize) -> Vec<String> {
    match arity {
        1 => alloc::vec![String::from("x")],
        n => (1..=n).map(|i| format!("x{i}")).collect(),
    }
}

fn fmt_header(f: &mut fmt::Formatter<'_>, name: &str, names: &[String]) -> fmt::Result {
    write!(f, "[{name}]")?;
    if !names.is_empty() {
        write!(f, "({})", names.join(","))?;
    }
    f.write_str(" = ")
}

impl fmt::Display for PolyInterpretation<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, sym) in &self.symbols {
            let names = arg_names(sym.arity);
            fmt_header(f, name, &names)?;
            let mut parts: Vec<String> = Vec::new();
            let ordered = sym
                .coeffs
                .iter()
                .filter(|(s, _)| !s.is_empty())
                .chain(sym.coeffs.iter().filter(|(s, _)| s.is_empty()));
            for (subset, c) in ordered {
                let mono = subset
                    .iter()
                    .map(|&i| names[i - 1].as_str())
                    .collect::<Vec<_>>()
                    .join("*");
                parts.push(if mono.is_empty() {
                    format!("{c}")
                } else if c.is_one() {
                    mono
                } else if c.is_integer() {
                    format!("{c}{mono}")
                } else {
                    format!("{c}*{mono}")
                });
            }
            if parts.is_empty() {
                parts.push(String::from("0"));
            }
            writeln!(f, "{}", parts.join(" + "))?;
        }
        Ok(())
    }
}

fn fmt_vector(v: &[Rational]) -> String {
    let items: Vec<String> = v.iter().map(|c| format!("{c}")).collect();
    format!("[{}]", items.join(","))
}

impl fmt::Display for MatrixInterpretation<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, sym) in &self.symbols {
            let names = arg_names(sym.arity());
            fmt_header(f, name, &names)?;
            let mut parts: Vec<String> = sym
                .args
                .iter()
                .zip(&names)
                .map(|(m, x)| {
                    let rows: Vec<String> = m.rows().iter().map(|r| fmt_vector(r)).collect();
                    format!("[{}]*{x}", rows.join(","))
                })
                .collect();
            if parts.is_empty() || sym.constant.iter().any(|c| !c.is_zero()) {
                parts.push(fmt_vector(&sym.constant));
            }
            writeln!(f, "{}", parts.join(" + "))?;
        }
        Ok(())
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interpretation::Poly(p) => p.fmt(f),
            Interpretation::Matrix(m) => m.fmt(f),
        }
    }
}
