#![allow(dead_code)]

use ptrs_core::interp::{PolyInterpretation, PolySymbol};
use ptrs_core::multidist::{int, ratio};
use ptrs_core::{FiniteDistribution, Interpretation, ProbRule, Ptrs, Rational, Term};

pub fn x() -> Term {
    Term::var("x")
}

pub fn s(t: Term) -> Term {
    Term::app("s", vec![t])
}

pub fn zero() -> Term {
    Term::constant("0")
}

pub fn rule(lhs: Term, rhs: Vec<(Term, Rational)>) -> ProbRule {
    ProbRule::new(lhs, FiniteDistribution::new(rhs).unwrap()).unwrap()
}

/// `s(x) -> {down: x, 1-down: s(s(x))}`.
pub fn rw(down: Rational) -> Ptrs {
    let up = int(1) - &down;
    Ptrs::new(vec![rule(s(x()), vec![(x(), down), (s(s(x())), up)])]).unwrap()
}

pub fn rw34() -> Ptrs {
    rw(ratio(3, 4))
}

/// `[s](x) = x + 1`, `[0] = 0`.
pub fn rw_interpretation() -> Interpretation {
    let mut p = PolyInterpretation::new();
    p.insert("s", PolySymbol::new(1, [(vec![], int(1)), (vec![1], int(1))]));
    p.insert("0", PolySymbol::new(0, [(vec![], int(0))]));
    Interpretation::Poly(p)
}

fn un(f: &str, t: Term) -> Term {
    Term::app(f, vec![t])
}

/// The coin game.
pub fn coin() -> Ptrs {
    let half = ratio(1, 2);
    Ptrs::new(vec![
        rule(
            un("?", x()),
            vec![(un("?", s(x())), half.clone()), (un("$", un("g", x())), half)],
        ),
        rule(un("?", x()), vec![(un("$", un("f", x())), int(1))]),
        rule(un("$", zero()), vec![(zero(), int(1))]),
        rule(un("$", s(x())), vec![(un("$", x()), int(1))]),
    ])
    .unwrap()
}

/// `[?](x) = 7x + 11`, `[s](x) = x + 1`, `[0] = 1`, `[f](x) = 3x + 1`,
/// `[g](x) = 2x + 1`, `[$](x) = 2x + 1`.
pub fn coin_interpretation() -> Interpretation {
    let lin = |a: i64, b: i64| PolySymbol::new(1, [(vec![], int(b)), (vec![1], int(a))]);
    let mut p = PolyInterpretation::new();
    p.insert("?", lin(7, 11));
    p.insert("s", lin(1, 1));
    p.insert("0", PolySymbol::new(0, [(vec![], int(1))]));
    p.insert("f", lin(3, 1));
    p.insert("g", lin(2, 1));
    p.insert("$", lin(2, 1));
    Interpretation::Poly(p)
}
