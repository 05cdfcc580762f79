//! Probabilistic rewrite rules and the multidistribution reduction relation.
//!
//! The [`Pars`] trait is the abstract view shared by term rewrite systems and
//! the programmatic families in [`crate::families`]: an object has a finite,
//! deterministically ordered list of reduct distributions, and no reducts iff
//! it is terminal. One step of a multidistribution replaces every nonterminal
//! entry by its chosen reduct distribution (scaled by the entry's
//! probability) and drops terminals.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use num_traits::One;
use thiserror::Error;

use crate::multidist::{FiniteDistribution, MultiDistribution, Rational};
use crate::term::{Name, Position, Signature, Substitution, Term, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("left-hand side of a rule must not be a variable (`{0}`)")]
    VariableLhs(Term),
    #[error("variable `{var}` of right-hand side `{rhs}` does not occur in left-hand side `{lhs}`")]
    FreeVariable { var: Name, lhs: Term, rhs: Term },
    #[error(transparent)]
    Term(#[from] TermError),
}

/// `lhs → {p1: r1, …, pn: rn}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbRule {
    lhs: Term,
    rhs: FiniteDistribution<Term>,
}

impl ProbRule {
    pub fn new(lhs: Term, rhs: FiniteDistribution<Term>) -> Result<Self, RuleError> {
        if lhs.is_var() {
            return Err(RuleError::VariableLhs(lhs));
        }
        let lhs_vars = lhs.vars();
        for r in rhs.support() {
            if let Some(var) = r.vars().into_iter().find(|x| !lhs_vars.contains(x)) {
                return Err(RuleError::FreeVariable {
                    var,
                    lhs,
                    rhs: r.clone(),
                });
            }
        }
        Ok(Self { lhs, rhs })
    }

    pub fn lhs(&self) -> &Term {
        &self.lhs
    }

    pub fn rhs(&self) -> &FiniteDistribution<Term> {
        &self.rhs
    }
}

impl fmt::Display for ProbRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs)
    }
}

/// A finite probabilistic term rewrite system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ptrs {
    signature: Signature,
    rules: Vec<ProbRule>,
}

/// One way to rewrite a term: the rule applied at a position, and the
/// resulting distribution `C[d̄σ]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedexStep {
    pub position: Position,
    pub rule: usize,
    pub substitution: Substitution,
    pub result: FiniteDistribution<Term>,
}

impl Ptrs {
    /// Builds a system whose signature is inferred from the rules.
    pub fn new(rules: Vec<ProbRule>) -> Result<Self, RuleError> {
        Self::with_signature(Signature::new(), rules)
    }

    /// Extends `signature` with the symbols of `rules`.
    pub fn with_signature(mut signature: Signature, rules: Vec<ProbRule>) -> Result<Self, RuleError> {
        for rule in &rules {
            signature.declare_term(&rule.lhs)?;
            for r in rule.rhs.support() {
                signature.declare_term(r)?;
            }
        }
        Ok(Self { signature, rules })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn rules(&self) -> &[ProbRule] {
        &self.rules
    }

    fn contract(&self, t: &Term, position: &Position, rule: usize, sigma: &Substitution) -> FiniteDistribution<Term> {
        self.rules[rule].rhs.map(|r| {
            t.replace_at(position, r.apply(sigma))
                .expect("redex position comes from the term itself")
        })
    }

    fn redexes_at(&self, t: &Term, position: &Position) -> impl Iterator<Item = (usize, Substitution)> + '_ {
        let sub = t.subterm_at(position).cloned();
        self.rules.iter().enumerate().filter_map(move |(i, rule)| {
            sub.as_ref().and_then(|s| rule.lhs.matches(s)).map(|sigma| (i, sigma))
        })
    }

    /// All redexes of `t`: positions in pre-order, then rules in order.
    pub fn enumerate_redexes(&self, t: &Term) -> Vec<RedexStep> {
        let mut out = Vec::new();
        for position in t.positions() {
            for (rule, substitution) in self.redexes_at(t, &position) {
                let result = self.contract(t, &position, rule, &substitution);
                out.push(RedexStep {
                    position: position.clone(),
                    rule,
                    substitution,
                    result,
                });
            }
        }
        out
    }

    pub fn is_normal_form(&self, t: &Term) -> bool {
        self.find_outermost(t, &mut Vec::new()).is_none()
    }

    fn root_redex(&self, t: &Term) -> Option<(usize, Substitution)> {
        self.rules
            .iter()
            .enumerate()
            .find_map(|(i, rule)| rule.lhs.matches(t).map(|sigma| (i, sigma)))
    }

    fn find_outermost(&self, t: &Term, path: &mut Vec<usize>) -> Option<(Position, usize, Substitution)> {
        if let Some((rule, sigma)) = self.root_redex(t) {
            return Some((Position(path.clone()), rule, sigma));
        }
        for (i, a) in t.args().iter().enumerate() {
            path.push(i + 1);
            let found = self.find_outermost(a, path);
            path.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }

    fn find_innermost(&self, t: &Term, path: &mut Vec<usize>) -> Option<(Position, usize, Substitution)> {
        for (i, a) in t.args().iter().enumerate() {
            path.push(i + 1);
            let found = self.find_innermost(a, path);
            path.pop();
            if found.is_some() {
                return found;
            }
        }
        self.root_redex(t)
            .map(|(rule, sigma)| (Position(path.clone()), rule, sigma))
    }
}

impl fmt::Display for Ptrs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

/// One reduct distribution of an object, with the redex that produced it
/// when the object is a term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduct<T: Ord> {
    pub dist: FiniteDistribution<T>,
    pub position: Option<Position>,
    pub rule: usize,
}

/// A probabilistic abstract reduction system.
pub trait Pars {
    type Obj: Clone + Ord + fmt::Display;

    /// All one-step reduct distributions in a fixed order; empty iff terminal.
    fn reducts(&self, obj: &Self::Obj) -> Vec<Reduct<Self::Obj>>;

    /// The reduct selected by `strategy`, or `None` for terminals.
    fn strategy_reduct(&self, obj: &Self::Obj, strategy: Strategy) -> Option<FiniteDistribution<Self::Obj>> {
        let mut options = self.reducts(obj);
        let k = strategy.select(&options)?;
        Some(options.swap_remove(k).dist)
    }

    /// True if `obj` lies beyond the system's truncation bound. Truncated
    /// objects have no reducts.
    fn is_truncated(&self, _obj: &Self::Obj) -> bool {
        false
    }
}

impl Pars for Ptrs {
    type Obj = Term;

    fn reducts(&self, obj: &Term) -> Vec<Reduct<Term>> {
        self.enumerate_redexes(obj)
            .into_iter()
            .map(|step| Reduct {
                dist: step.result,
                position: Some(step.position),
                rule: step.rule,
            })
            .collect()
    }

    fn strategy_reduct(&self, obj: &Term, strategy: Strategy) -> Option<FiniteDistribution<Term>> {
        let mut path = Vec::new();
        let (position, rule, sigma) = match strategy {
            Strategy::LeftmostInnermost => self.find_innermost(obj, &mut path),
            Strategy::LeftmostOutermost => self.find_outermost(obj, &mut path),
        }?;
        Some(self.contract(obj, &position, rule, &sigma))
    }
}

/// Built-in deterministic redex selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    LeftmostInnermost,
    LeftmostOutermost,
}

impl Strategy {
    /// Index of the selected option. Options without positions (abstract
    /// systems) resolve to the first one.
    pub fn select<T: Ord>(self, options: &[Reduct<T>]) -> Option<usize> {
        if options.is_empty() {
            return None;
        }
        match self {
            Strategy::LeftmostOutermost => Some(0),
            Strategy::LeftmostInnermost => {
                let positions: Vec<Option<&Position>> =
                    options.iter().map(|o| o.position.as_ref()).collect();
                let innermost = positions.iter().position(|p| match p {
                    Some(p) => !positions
                        .iter()
                        .any(|q| q.is_some_and(|q| p.is_strictly_above(q))),
                    None => true,
                });
                innermost.or(Some(0))
            }
        }
    }
}

/// Resolves nondeterminism: picks one reduct for the `entry`-th entry of a
/// multidistribution.
pub trait Chooser<T: Ord> {
    fn choose(&mut self, entry: usize, obj: &T, options: &[Reduct<T>]) -> usize;
}

impl<T: Ord> Chooser<T> for Strategy {
    fn choose(&mut self, _entry: usize, _obj: &T, options: &[Reduct<T>]) -> usize {
        self.select(options).unwrap_or(0)
    }
}

/// Adapts a closure into a [`Chooser`].
pub struct FnChooser<F>(pub F);

impl<T: Ord, F: FnMut(usize, &T, &[Reduct<T>]) -> usize> Chooser<T> for FnChooser<F> {
    fn choose(&mut self, entry: usize, obj: &T, options: &[Reduct<T>]) -> usize {
        (self.0)(entry, obj, options)
    }
}

/// Uniformly random choice per entry.
pub struct RandomChooser<R>(pub R);

impl<T: Ord, R: rand::Rng> Chooser<T> for RandomChooser<R> {
    fn choose(&mut self, _entry: usize, _obj: &T, options: &[Reduct<T>]) -> usize {
        self.0.gen_range(0..options.len())
    }
}

/// One step `μ ⊸ ν`: each nonterminal entry `p: a` contributes `p · d`
/// for the reduct `d` picked by `chooser`; terminals contribute nothing.
pub fn step_multidist<P: Pars>(
    pars: &P,
    mu: &MultiDistribution<P::Obj>,
    chooser: &mut impl Chooser<P::Obj>,
) -> MultiDistribution<P::Obj> {
    let mut next = MultiDistribution::empty();
    for (entry, (p, a)) in mu.entries().iter().enumerate() {
        let options = pars.reducts(a);
        if options.is_empty() {
            continue;
        }
        let k = chooser.choose(entry, a, &options);
        for (b, q) in options[k].dist.iter() {
            next.push(p * q, b.clone());
        }
    }
    next
}

/// Step using a built-in strategy, without enumerating every redex.
pub fn step_with_strategy<P: Pars>(
    pars: &P,
    mu: &MultiDistribution<P::Obj>,
    strategy: Strategy,
) -> MultiDistribution<P::Obj> {
    let mut next = MultiDistribution::empty();
    for (p, a) in mu.entries() {
        if let Some(d) = pars.strategy_reduct(a, strategy) {
            for (b, q) in d.iter() {
                next.push(p * q, b.clone());
            }
        }
    }
    next
}

/// The distinct one-step reducts of `μ` over every choice of reduct per
/// entry, or `None` if there are more than `budget` combinations.
pub fn all_steps<P: Pars>(
    pars: &P,
    mu: &MultiDistribution<P::Obj>,
    budget: usize,
) -> Option<Vec<MultiDistribution<P::Obj>>> {
    let options: Vec<(Rational, Vec<FiniteDistribution<P::Obj>>)> = mu
        .entries()
        .iter()
        .map(|(p, a)| {
            let mut dists: Vec<_> = pars.reducts(a).into_iter().map(|r| r.dist).collect();
            dists.sort();
            dists.dedup();
            (p.clone(), dists)
        })
        .collect();
    let mut combos: usize = 1;
    for (_, d) in &options {
        combos = combos.checked_mul(d.len().max(1))?;
        if combos > budget {
            return None;
        }
    }
    let mut results: Vec<MultiDistribution<P::Obj>> = alloc::vec![MultiDistribution::empty()];
    for (p, dists) in &options {
        if dists.is_empty() {
            continue;
        }
        let mut next = Vec::with_capacity(results.len() * dists.len());
        for partial in &results {
            for d in dists {
                let mut m = partial.clone();
                for (b, q) in d.iter() {
                    m.push(p * q, b.clone());
                }
                next.push(m);
            }
        }
        results = next;
    }
    let distinct: BTreeSet<_> = results.into_iter().collect();
    Some(distinct.into_iter().collect())
}

/// A failure of the embedding of an ordinary reduction system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingViolation<T: Clone + Ord> {
    pub object: T,
    pub expected: Vec<MultiDistribution<T>>,
    pub found: Vec<MultiDistribution<T>>,
}

/// For a system whose reducts are all point masses, checks that the one-step
/// reducts of `{1: a}` are exactly `{1: b}` for the successors `b` of `a`,
/// or `∅` when `a` is a normal form.
pub fn ars_embedding_check<P: Pars>(
    pars: &P,
    objects: &[P::Obj],
) -> Result<(), EmbeddingViolation<P::Obj>> {
    for a in objects {
        let reducts = pars.reducts(a);
        let mut expected: BTreeSet<MultiDistribution<P::Obj>> = BTreeSet::new();
        if reducts.is_empty() {
            expected.insert(MultiDistribution::empty());
        }
        for r in &reducts {
            let mut support = r.dist.iter();
            match (support.next(), support.next()) {
                (Some((b, p)), None) if p.is_one() => {
                    expected.insert(MultiDistribution::point(b.clone()));
                }
                _ => {
                    return Err(EmbeddingViolation {
                        object: a.clone(),
                        expected: Vec::new(),
                        found: alloc::vec![MultiDistribution::from_distribution(&r.dist)],
                    })
                }
            }
        }
        let found: BTreeSet<_> = all_steps(pars, &MultiDistribution::point(a.clone()), usize::MAX)
            .unwrap_or_default()
            .into_iter()
            .collect();
        if found != expected {
            return Err(EmbeddingViolation {
                object: a.clone(),
                expected: expected.into_iter().collect(),
                found: found.into_iter().collect(),
            });
        }
    }
    Ok(())
}
