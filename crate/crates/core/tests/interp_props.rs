//! Affinity and strict monotonicity of interpretations, and agreement of the
//! symbolic forms with pointwise evaluation.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use ptrs_core::form::Matrix;
use ptrs_core::interp::{MatrixInterpretation, MatrixSymbol, PolyInterpretation, PolySymbol};
use ptrs_core::multidist::{int, ratio};
use ptrs_core::term::Name;
use ptrs_core::{Rational, Term};

const CASES: u32 = 1000;

fn rat() -> impl Strategy<Value = Rational> {
    (0i64..6, 1i64..4).prop_map(|(a, b)| ratio(a, b))
}

fn positive_rat() -> impl Strategy<Value = Rational> {
    (1i64..6, 1i64..4).prop_map(|(a, b)| ratio(a, b))
}

fn name(s: &str) -> Name {
    Arc::from(s)
}

/// Subsets of `1..=n` with at most `degree` elements.
fn subsets(n: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for i in 1..=n {
        let mut more = Vec::new();
        for s in &out {
            if s.len() < degree {
                let mut t = s.clone();
                t.push(i);
                more.push(t);
            }
        }
        out.extend(more);
    }
    out
}

/// A monotone multilinear symbol: every `c_{i} ≥ 1`.
fn poly_symbol(degree: usize) -> impl Strategy<Value = PolySymbol<Rational>> {
    (1usize..=3).prop_flat_map(move |n| {
        let subs = subsets(n, degree);
        let k = subs.len();
        prop::collection::vec(rat(), k).prop_map(move |cs| {
            let coeffs = subs.iter().cloned().zip(cs).map(|(s, c)| {
                let c = if s.len() == 1 { c + int(1) } else { c };
                (s, c)
            });
            PolySymbol::new(n, coeffs)
        })
    })
}

fn matrix(dim: usize) -> impl Strategy<Value = Matrix<Rational>> {
    prop::collection::vec(prop::collection::vec(rat(), dim), dim).prop_map(|mut rows| {
        rows[0][0] += int(1);
        Matrix::from_rows(rows).unwrap()
    })
}

fn matrix_symbol(dim: usize) -> impl Strategy<Value = MatrixSymbol<Rational>> {
    (1usize..=3).prop_flat_map(move |n| {
        (prop::collection::vec(matrix(dim), n), prop::collection::vec(rat(), dim))
            .prop_map(|(ms, c)| MatrixSymbol::new(ms, c))
    })
}

fn poly_interp(sym: PolySymbol<Rational>) -> PolyInterpretation<Rational> {
    let mut p = PolyInterpretation::new();
    p.insert("f", sym);
    p.validate().unwrap();
    p
}

fn matrix_interp(dim: usize, sym: MatrixSymbol<Rational>) -> MatrixInterpretation<Rational> {
    let mut m = MatrixInterpretation::new(dim);
    m.insert("f", sym).unwrap();
    m.validate().unwrap();
    m
}

/// A distribution as `(probability, value)` pairs.
fn weights(k: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(1i64..5, k).prop_map(|ws| {
        let total: i64 = ws.iter().sum();
        ws.into_iter().map(|w| ratio(w, total)).collect()
    })
}

fn check_poly_affine(
    p: &PolyInterpretation<Rational>,
    args: &[Rational],
    i: usize,
    values: &[Rational],
    ps: &[Rational],
) -> Result<(), TestCaseError> {
    let f = name("f");
    let n = p.symbol("f").unwrap().arity();
    let i = i % n;
    let mean: Rational = values.iter().zip(ps).map(|(v, q)| v * q).sum();
    let mut at_mean = args[..n].to_vec();
    at_mean[i] = mean;
    let lhs = p.apply(&f, &at_mean).unwrap();
    let rhs: Rational = values
        .iter()
        .zip(ps)
        .map(|(v, q)| {
            let mut a = args[..n].to_vec();
            a[i] = v.clone();
            q * p.apply(&f, &a).unwrap()
        })
        .sum();
    prop_assert_eq!(lhs, rhs);
    Ok(())
}

fn check_poly_monotone(
    p: &PolyInterpretation<Rational>,
    args: &[Rational],
    i: usize,
    delta: &Rational,
) -> Result<(), TestCaseError> {
    let f = name("f");
    let n = p.symbol("f").unwrap().arity();
    let i = i % n;
    let mut bigger = args[..n].to_vec();
    bigger[i] += delta;
    prop_assert!(p.apply(&f, &bigger).unwrap() > p.apply(&f, &args[..n]).unwrap());
    Ok(())
}

fn vectors(dim: usize, k: usize) -> impl Strategy<Value = Vec<Vec<Rational>>> {
    prop::collection::vec(prop::collection::vec(rat(), dim), k)
}

fn check_matrix_affine(
    m: &MatrixInterpretation<Rational>,
    args: &[Vec<Rational>],
    i: usize,
    values: &[Vec<Rational>],
    ps: &[Rational],
) -> Result<(), TestCaseError> {
    let f = name("f");
    let n = m.symbol("f").unwrap().arity();
    let dim = m.dim();
    let i = i % n;
    let mut mean = vec![int(0); dim];
    for (v, q) in values.iter().zip(ps) {
        for (o, x) in mean.iter_mut().zip(v) {
            *o += q * x;
        }
    }
    let mut at_mean = args[..n].to_vec();
    at_mean[i] = mean;
    let lhs = m.apply(&f, &at_mean).unwrap();
    let mut rhs = vec![int(0); dim];
    for (v, q) in values.iter().zip(ps) {
        let mut a = args[..n].to_vec();
        a[i] = v.clone();
        for (o, x) in rhs.iter_mut().zip(m.apply(&f, &a).unwrap()) {
            *o += q * x;
        }
    }
    prop_assert_eq!(lhs, rhs);
    Ok(())
}

fn check_matrix_monotone(
    m: &MatrixInterpretation<Rational>,
    args: &[Vec<Rational>],
    i: usize,
    delta: &[Rational],
) -> Result<(), TestCaseError> {
    let f = name("f");
    let n = m.symbol("f").unwrap().arity();
    let i = i % n;
    let mut bigger = args[..n].to_vec();
    for (o, d) in bigger[i].iter_mut().zip(delta) {
        *o += d;
    }
    let hi = m.apply(&f, &bigger).unwrap();
    let lo = m.apply(&f, &args[..n]).unwrap();
    prop_assert!(hi[0] > lo[0]);
    prop_assert!(hi.iter().zip(&lo).all(|(a, b)| a >= b));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn poly_linear_affine(sym in poly_symbol(1), args in prop::collection::vec(rat(), 3), i in 0usize..3,
                          values in prop::collection::vec(rat(), 3), ps in weights(3)) {
        check_poly_affine(&poly_interp(sym), &args, i, &values, &ps)?;
    }

    #[test]
    fn poly_linear_monotone(sym in poly_symbol(1), args in prop::collection::vec(rat(), 3), i in 0usize..3,
                            delta in positive_rat()) {
        check_poly_monotone(&poly_interp(sym), &args, i, &delta)?;
    }

    #[test]
    fn poly_multilinear_affine(sym in poly_symbol(2), args in prop::collection::vec(rat(), 3), i in 0usize..3,
                               values in prop::collection::vec(rat(), 3), ps in weights(3)) {
        check_poly_affine(&poly_interp(sym), &args, i, &values, &ps)?;
    }

    #[test]
    fn poly_multilinear_monotone(sym in poly_symbol(2), args in prop::collection::vec(rat(), 3), i in 0usize..3,
                                 delta in positive_rat()) {
        check_poly_monotone(&poly_interp(sym), &args, i, &delta)?;
    }

    #[test]
    fn matrix2_affine(sym in matrix_symbol(2), args in vectors(2, 3), i in 0usize..3,
                      values in vectors(2, 3), ps in weights(3)) {
        check_matrix_affine(&matrix_interp(2, sym), &args, i, &values, &ps)?;
    }

    #[test]
    fn matrix2_monotone(sym in matrix_symbol(2), args in vectors(2, 3), i in 0usize..3,
                        first in positive_rat(), rest in rat()) {
        check_matrix_monotone(&matrix_interp(2, sym), &args, i, &[first, rest])?;
    }

    #[test]
    fn matrix3_affine(sym in matrix_symbol(3), args in vectors(3, 3), i in 0usize..3,
                      values in vectors(3, 3), ps in weights(3)) {
        check_matrix_affine(&matrix_interp(3, sym), &args, i, &values, &ps)?;
    }

    #[test]
    fn matrix3_monotone(sym in matrix_symbol(3), args in vectors(3, 3), i in 0usize..3,
                        first in positive_rat(), rest in prop::collection::vec(rat(), 2)) {
        check_matrix_monotone(&matrix_interp(3, sym), &args, i, &[first, rest[0].clone(), rest[1].clone()])?;
    }
}

/// Terms over `f/2`, `g/1`, `c/0` and the variables `x`, `y`.
fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![Just(Term::var("x")), Just(Term::var("y")), Just(Term::constant("c"))];
    leaf.prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("g", vec![t])),
            (inner.clone(), inner).prop_map(|(a, b)| Term::app("f", vec![a, b])),
        ]
    })
}

fn sig_poly(f: PolySymbol<Rational>, g: PolySymbol<Rational>, c: Rational) -> PolyInterpretation<Rational> {
    let mut p = PolyInterpretation::new();
    p.insert("f", f);
    p.insert("g", g);
    p.insert("c", PolySymbol::new(0, [(vec![], c)]));
    p
}

fn binary_poly() -> impl Strategy<Value = PolySymbol<Rational>> {
    prop::collection::vec(rat(), 4).prop_map(|cs| {
        PolySymbol::new(2, [(vec![], cs[0].clone()), (vec![1], cs[1].clone()), (vec![2], cs[2].clone()), (vec![1, 2], cs[3].clone())])
    })
}

fn unary_poly() -> impl Strategy<Value = PolySymbol<Rational>> {
    (rat(), rat()).prop_map(|(a, b)| PolySymbol::new(1, [(vec![], a), (vec![1], b)]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn poly_form_agrees_with_evaluation(t in arb_term(), f in binary_poly(), g in unary_poly(), c in rat(),
                                        x in rat(), y in rat()) {
        let p = sig_poly(f, g, c);
        let alpha: BTreeMap<Name, Rational> = [(name("x"), x), (name("y"), y)].into_iter().collect();
        match p.form(&t) {
            Ok(form) => prop_assert_eq!(form.eval(&alpha), p.eval(&t, &alpha).unwrap()),
            // x·x is outside multilinear forms; pointwise evaluation still works
            Err(_) => prop_assert!(p.eval(&t, &alpha).is_ok()),
        }
    }

    #[test]
    fn matrix_form_agrees_with_evaluation(t in arb_term(), fm in prop::collection::vec(matrix(2), 2),
                                          gm in matrix(2), fc in prop::collection::vec(rat(), 2),
                                          cc in prop::collection::vec(rat(), 2), x in vectors(2, 2)) {
        let mut m = MatrixInterpretation::new(2);
        m.insert("f", MatrixSymbol::new(fm, fc)).unwrap();
        m.insert("g", MatrixSymbol::new(vec![gm], vec![int(0), int(0)])).unwrap();
        m.insert("c", MatrixSymbol::new(vec![], cc)).unwrap();
        let alpha: BTreeMap<Name, Vec<Rational>> =
            [(name("x"), x[0].clone()), (name("y"), x[1].clone())].into_iter().collect();
        let form = m.form(&t).unwrap();
        prop_assert_eq!(form.eval(&alpha), m.eval(&t, &alpha).unwrap());
    }
}
