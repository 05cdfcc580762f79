//! First-order terms over a ranked signature.
//!
//! Terms are immutable trees; symbol and variable names are shared
//! `Arc<str>` so cloning a term never copies strings. Positions are
//! 1-based argument paths, the root being the empty path.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::hash::{Hash, Hasher};
use core::fmt;

use thiserror::Error;

/// A symbol or variable name.
pub type Name = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("position {position} is not valid in term {term}")]
    InvalidPosition { position: Position, term: Term },
    #[error("symbol `{symbol}` used with {found} arguments, but its arity is {expected}")]
    ArityMismatch {
        symbol: Name,
        expected: usize,
        found: usize,
    },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(Name),
}

/// Function symbols with their arities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    symbols: BTreeMap<Name, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `symbol` with `arity`. Re-declaring with the same arity is a no-op.
    pub fn declare(&mut self, symbol: impl Into<Name>, arity: usize) -> Result<(), TermError> {
        let symbol = symbol.into();
        match self.symbols.get(&symbol) {
            Some(&known) if known != arity => Err(TermError::ArityMismatch {
                symbol,
                expected: known,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.symbols.insert(symbol, arity);
                Ok(())
            }
        }
    }

    pub fn arity(&self, symbol: &str) -> Option<usize> {
        self.symbols.get(symbol).copied()
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.symbols.contains_key(symbol)
    }

    /// Symbols in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&Name, usize)> + '_ {
        self.symbols.iter().map(|(s, &a)| (s, a))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn constants(&self) -> impl Iterator<Item = &Name> + '_ {
        self.symbols
            .iter()
            .filter(|(_, &a)| a == 0)
            .map(|(s, _)| s)
    }

    /// Declares every symbol occurring in `t`, checking arity consistency.
    pub fn declare_term(&mut self, t: &Term) -> Result<(), TermError> {
        match t {
            Term::Var(_) => Ok(()),
            Term::App(f, args) => {
                self.declare(f.clone(), args.len())?;
                args.iter().try_for_each(|a| self.declare_term(a))
            }
        }
    }

    /// Checks that every application in `t` uses a declared symbol at its arity.
    pub fn check_term(&self, t: &Term) -> Result<(), TermError> {
        match t {
            Term::Var(_) => Ok(()),
            Term::App(f, args) => {
                let expected = self
                    .arity(f)
                    .ok_or_else(|| TermError::UnknownSymbol(f.clone()))?;
                if expected != args.len() {
                    return Err(TermError::ArityMismatch {
                        symbol: f.clone(),
                        expected,
                        found: args.len(),
                    });
                }
                args.iter().try_for_each(|a| self.check_term(a))
            }
        }
    }
}

/// A path of 1-based argument indices from the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position(pub Vec<usize>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// True if `self` is a proper prefix of `other`.
    pub fn is_strictly_above(&self, other: &Position) -> bool {
        self.0.len() < other.0.len() && other.0.starts_with(&self.0)
    }

    pub fn child(&self, index: usize) -> Position {
        let mut path = self.0.clone();
        path.push(index);
        Position(path)
    }
}

impl From<Vec<usize>> for Position {
    fn from(path: Vec<usize>) -> Self {
        Position(path)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone)]
pub enum Term {
    Var(Name),
    /// Arguments are shared, so clones are cheap.
    App(Name, Arc<[Term]>),
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Term::Var(x) => {
                0u8.hash(state);
                x.hash(state);
            }
            Term::App(f, args) => {
                1u8.hash(state);
                f.hash(state);
                args.hash(state);
            }
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Variables before applications; then by name and arguments.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Term::Var(x), Term::Var(y)) => x.cmp(y),
            (Term::Var(_), Term::App(..)) => Ordering::Less,
            (Term::App(..), Term::Var(_)) => Ordering::Greater,
            (Term::App(f, a), Term::App(g, b)) => f.cmp(g).then_with(|| {
                if Arc::ptr_eq(a, b) {
                    Ordering::Equal
                } else {
                    a.iter().cmp(b.iter())
                }
            }),
        }
    }
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Arc::from(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::App(Arc::from(name), Arc::from([]))
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(Arc::from(name), args.into())
    }

    /// `f(f(…f(base)…))` with `n` applications of the unary symbol `f`.
    pub fn unary_tower(f: &str, n: usize, base: Term) -> Term {
        let f: Name = Arc::from(f);
        (0..n).fold(base, |t, _| Term::App(f.clone(), Arc::from([t])))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::App(_, args) => args,
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.args().iter().map(Term::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.args().iter().map(Term::depth).max().unwrap_or(0)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn apply(&self, sigma: &Substitution) -> Term {
        match self {
            Term::Var(x) => sigma.get(x).cloned().unwrap_or_else(|| self.clone()),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.apply(sigma)).collect())
            }
        }
    }

    pub fn subterm_at(&self, p: &Position) -> Option<&Term> {
        p.0.iter().try_fold(self, |t, &i| match t {
            Term::App(_, args) if i >= 1 => args.get(i - 1),
            _ => None,
        })
    }

    /// Replaces the subterm at `p` by `s`.
    pub fn replace_at(&self, p: &Position, s: Term) -> Result<Term, TermError> {
        self.replace_path(&p.0, s).ok_or_else(|| TermError::InvalidPosition {
            position: p.clone(),
            term: self.clone(),
        })
    }

    fn replace_path(&self, path: &[usize], s: Term) -> Option<Term> {
        let Some((&i, rest)) = path.split_first() else {
            return Some(s);
        };
        match self {
            Term::App(f, args) if i >= 1 && i <= args.len() => {
                let mut args = args.to_vec();
                args[i - 1] = args[i - 1].replace_path(rest, s)?;
                Some(Term::App(f.clone(), args.into()))
            }
            _ => None,
        }
    }

    /// All positions in pre-order, leftmost first; the root comes first.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::with_capacity(self.size());
        let mut path = Vec::new();
        self.collect_positions(&mut path, &mut out);
        out
    }

    fn collect_positions(&self, path: &mut Vec<usize>, out: &mut Vec<Position>) {
        out.push(Position(path.clone()));
        for (i, a) in self.args().iter().enumerate() {
            path.push(i + 1);
            a.collect_positions(path, out);
            path.pop();
        }
    }

    /// One-sided matching: finds `σ` with `self σ = subject`.
    pub fn matches(&self, subject: &Term) -> Option<Substitution> {
        let mut sigma = Substitution::new();
        self.match_into(subject, &mut sigma).then_some(sigma)
    }

    fn match_into(&self, subject: &Term, sigma: &mut Substitution) -> bool {
        match (self, subject) {
            (Term::Var(x), _) => match sigma.map.get(x) {
                Some(bound) => bound == subject,
                None => {
                    sigma.map.insert(x.clone(), subject.clone());
                    true
                }
            },
            (Term::App(f, ps), Term::App(g, ss)) => {
                f == g
                    && ps.len() == ss.len()
                    && ps.iter().zip(ss.iter()).all(|(p, s)| p.match_into(s, sigma))
            }
            (Term::App(..), Term::Var(_)) => false,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => f.write_str(x),
            Term::App(g, args) => {
                f.write_str(g)?;
                if args.is_empty() {
                    return Ok(());
                }
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A finite map from variables to terms; identity outside its domain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<Name, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, var: impl Into<Name>, t: Term) -> Option<Term> {
        self.map.insert(var.into(), t)
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.map.get(var)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Term)> + '_ {
        self.map.iter()
    }
}

impl FromIterator<(Name, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Name, Term)>>(iter: I) -> Self {
        Substitution {
            map: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (x, t)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}↦{t}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn s(t: Term) -> Term {
        Term::app("s", vec![t])
    }
    fn zero() -> Term {
        Term::constant("0")
    }
    fn x() -> Term {
        Term::var("x")
    }

    #[test]
    fn apply_variable_and_identity() {
        let mut sigma = Substitution::new();
        sigma.insert("x", s(zero()));
        assert_eq!(x().apply(&sigma), s(zero()));
        assert_eq!(s(x()).apply(&Substitution::new()), s(x()));
    }

    #[test]
    fn apply_duplicates_binding() {
        let mut sigma = Substitution::new();
        sigma.insert("x", Term::app("g", vec![Term::var("y")]));
        let t = Term::app("f", vec![x(), x()]);
        let gy = Term::app("g", vec![Term::var("y")]);
        assert_eq!(t.apply(&sigma), Term::app("f", vec![gy.clone(), gy]));
    }

    #[test]
    fn replace_at_cases() {
        let t = s(Term::app("f", vec![zero()]));
        assert_eq!(t.replace_at(&vec![1].into(), x()).unwrap(), s(x()));
        assert_eq!(t.replace_at(&Position::root(), x()).unwrap(), x());
        let t = s(Term::app("f", vec![s(zero())]));
        let expected = s(Term::app("f", vec![zero()]));
        assert_eq!(t.replace_at(&vec![1, 1].into(), zero()).unwrap(), expected);
        assert!(matches!(
            t.replace_at(&vec![2].into(), zero()),
            Err(TermError::InvalidPosition { .. })
        ));
        assert!(t.replace_at(&vec![1, 1, 1, 1].into(), zero()).is_err());
    }

    #[test]
    fn positions_preorder() {
        assert_eq!(x().positions(), vec![Position::root()]);
        assert_eq!(
            s(zero()).positions(),
            vec![Position::root(), vec![1].into()]
        );
        let t = Term::app(
            "f",
            vec![Term::constant("a"), Term::app("g", vec![Term::constant("b")])],
        );
        let expected: Vec<Position> = vec![
            Position::root(),
            vec![1].into(),
            vec![2].into(),
            vec![2, 1].into(),
        ];
        assert_eq!(t.positions(), expected);
    }

    #[test]
    fn matching() {
        let sigma = s(x()).matches(&s(zero())).unwrap();
        assert_eq!(sigma.get("x"), Some(&zero()));
        assert_eq!(sigma.len(), 1);
        assert!(s(x()).matches(&zero()).is_none());
        let nonlinear = Term::app("f", vec![x(), x()]);
        assert!(nonlinear
            .matches(&Term::app("f", vec![zero(), s(zero())]))
            .is_none());
        assert!(nonlinear
            .matches(&Term::app("f", vec![s(zero()), s(zero())]))
            .is_some());
        // a pattern symbol never matches a subject variable
        assert!(zero().matches(&x()).is_none());
    }

    #[test]
    fn display() {
        let t = Term::app("f", vec![s(zero()), x()]);
        assert_eq!(t.to_string(), "f(s(0),x)");
    }

    #[test]
    fn signature_arity_conflict() {
        let mut sig = Signature::new();
        sig.declare("f", 2).unwrap();
        sig.declare("f", 2).unwrap();
        assert!(matches!(
            sig.declare("f", 1),
            Err(TermError::ArityMismatch { .. })
        ));
        assert!(sig
            .check_term(&Term::app("f", vec![zero(), zero()]))
            .is_err());
        sig.declare("0", 0).unwrap();
        assert!(sig.check_term(&Term::app("f", vec![zero(), x()])).is_ok());
    }
}
