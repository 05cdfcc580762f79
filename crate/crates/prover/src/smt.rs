//! SMT-LIB 2 scripts for constraint sets and parsing of solver answers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use ptrs_core::constraint::ConstraintSet;
use ptrs_core::form::UPoly;
use thiserror::Error;

fn literal(n: &BigInt) -> String {
    if n.is_negative() {
        format!("(- {})", n.abs())
    } else {
        n.to_string()
    }
}

fn render_poly(p: &UPoly, names: &[String]) -> String {
    let mut terms: Vec<String> = Vec::new();
    for (mono, c) in p.terms() {
        if mono.is_empty() {
            terms.push(literal(c));
            continue;
        }
        let factors: Vec<&str> = mono.iter().map(|&u| names[u as usize].as_str()).collect();
        terms.push(if c.is_one() && factors.len() == 1 {
            factors[0].to_string()
        } else if c.is_one() {
            format!("(* {})", factors.join(" "))
        } else {
            format!("(* {} {})", literal(c), factors.join(" "))
        });
    }
    match terms.len() {
        0 => String::from("0"),
        1 => terms.pop().expect("one term"),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

/// The SMT-LIB script for `cs`: declarations, box bounds, constraints,
/// `check-sat` and `get-model`. Output depends only on `cs`.
pub fn emit_smtlib(cs: &ConstraintSet) -> String {
    let names: Vec<String> = cs.unknowns.iter().map(|u| u.name.clone()).collect();
    let mut out = String::new();
    let _ = writeln!(out, "; shape {}, coefficient bound {}", cs.shape, cs.bound);
    for (k, (f, arity)) in cs.symbols.iter().enumerate() {
        let _ = writeln!(out, "; f{k} = {f}/{arity}");
    }
    out.push_str("(set-option :produce-models true)\n");
    let logic = if cs.is_linear() { "QF_LIA" } else { "QF_NIA" };
    let _ = writeln!(out, "(set-logic {logic})");
    for name in &names {
        let _ = writeln!(out, "(declare-const {name} Int)");
    }
    for name in &names {
        let _ = writeln!(out, "(assert (and (<= 0 {name}) (<= {name} {})))", cs.bound);
    }
    for c in &cs.constraints {
        let _ = writeln!(out, "; {}", c.origin);
        let _ = writeln!(out, "(assert (>= {} {}))", render_poly(&c.poly, &names), literal(&c.at_least));
    }
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverAnswer {
    Sat(BTreeMap<String, BigInt>),
    Unsat,
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResponseError {
    #[error("solver output has no sat/unsat/unknown answer: {0}")]
    NoAnswer(String),
    #[error("solver reported an error: {0}")]
    Solver(String),
    #[error("unparseable model: {0}")]
    BadModel(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().filter(|_| !stack.is_empty()).ok_or("unbalanced `)`")?;
                stack.last_mut().expect("outer level").push(Sexp::List(done));
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') if chars.peek() == Some(&'"') => {
                            chars.next();
                            s.push('"');
                        }
                        Some('"') => break,
                        Some(c) => s.push(c),
                        None => return Err(String::from("unterminated string")),
                    }
                }
                stack.last_mut().expect("level").push(Sexp::Atom(s));
            }
            '|' => {
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().expect("level").push(Sexp::Atom(s));
            }
            _ if c.is_whitespace() => {}
            _ => {
                let mut s = String::from(c);
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || matches!(d, '(' | ')' | ';' | '"') {
                        break;
                    }
                    s.push(d);
                    chars.next();
                }
                stack.last_mut().expect("level").push(Sexp::Atom(s));
            }
        }
    }
    match stack.len() {
        1 => Ok(stack.pop().expect("top level")),
        _ => Err(String::from("unbalanced `(`")),
    }
}

fn int_value(e: &Sexp) -> Option<BigInt> {
    match e {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(minus), inner] if minus == "-" => int_value(inner).map(|v| -v),
            _ => None,
        },
    }
}

fn collect_definitions(e: &Sexp, model: &mut BTreeMap<String, BigInt>) -> Result<(), String> {
    let Sexp::List(items) = e else {
        return Ok(());
    };
    if let [Sexp::Atom(head), Sexp::Atom(name), Sexp::List(params), Sexp::Atom(sort), value] = items.as_slice() {
        if head == "define-fun" {
            if !params.is_empty() || sort != "Int" {
                return Err(format!("`{name}` is not an integer constant"));
            }
            let v = int_value(value).ok_or_else(|| format!("value of `{name}` is not an integer"))?;
            model.insert(name.clone(), v);
            return Ok(());
        }
    }
    items.iter().try_for_each(|i| collect_definitions(i, model))
}

/// Parses the output of a `check-sat`/`get-model` script.
pub fn parse_response(text: &str) -> Result<SolverAnswer, ResponseError> {
    let sexps = parse_sexps(text).map_err(ResponseError::BadModel)?;
    let mut status = None;
    let mut errors = Vec::new();
    let mut model = BTreeMap::new();
    let mut saw_model = false;
    for e in &sexps {
        match e {
            Sexp::Atom(a) if status.is_none() && matches!(a.as_str(), "sat" | "unsat" | "unknown") => {
                status = Some(a.clone());
            }
            Sexp::List(items) if matches!(items.first(), Some(Sexp::Atom(h)) if h == "error") => {
                errors.push(match items.get(1) {
                    Some(Sexp::Atom(msg)) => msg.clone(),
                    _ => String::from("unspecified error"),
                });
            }
            Sexp::List(_) if status.is_some() => {
                saw_model = true;
                collect_definitions(e, &mut model).map_err(ResponseError::BadModel)?;
            }
            _ => {}
        }
    }
    match status.as_deref() {
        Some("sat") if saw_model => Ok(SolverAnswer::Sat(model)),
        Some("sat") => Err(errors
            .pop()
            .map(ResponseError::Solver)
            .unwrap_or_else(|| ResponseError::BadModel(String::from("sat without a model")))),
        Some("unsat") => Ok(SolverAnswer::Unsat),
        Some(_) => Ok(SolverAnswer::Unknown(String::from("solver answered unknown"))),
        None => match errors.pop() {
            Some(msg) => Err(ResponseError::Solver(msg)),
            None => Err(ResponseError::NoAnswer(text.chars().take(200).collect())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wst::load_ptrs;
    use ptrs_core::constraint::{encode, Shape};

    #[test]
    fn z3_style_model() {
        let out = "sat\n(\n  (define-fun f0_c () Int\n    0)\n  (define-fun f1_x1 () Int\n    (- 4))\n)\n";
        let SolverAnswer::Sat(m) = parse_response(out).unwrap() else { panic!() };
        assert_eq!(m["f0_c"], BigInt::from(0));
        assert_eq!(m["f1_x1"], BigInt::from(-4));
    }

    #[test]
    fn older_model_syntax() {
        let out = "sat\n(model (define-fun x () Int 1))";
        let SolverAnswer::Sat(m) = parse_response(out).unwrap() else { panic!() };
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn unsat_with_model_error() {
        let out = "unsat\n(error \"line 4 column 10: model is not available\")\n";
        assert_eq!(parse_response(out), Ok(SolverAnswer::Unsat));
        assert!(matches!(parse_response("unknown\n"), Ok(SolverAnswer::Unknown(_))));
    }

    #[test]
    fn failures() {
        assert!(matches!(parse_response("(error \"bad\")"), Err(ResponseError::Solver(m)) if m == "bad"));
        assert!(matches!(parse_response("garbage"), Err(ResponseError::NoAnswer(_))));
        assert!(matches!(parse_response("sat\n"), Err(ResponseError::BadModel(_))));
        assert!(parse_response("sat\n((define-fun x () Real 1.5))").is_err());
    }

    #[test]
    fn script_shape() {
        let ptrs = load_ptrs("(VAR x) (RULES s(x) -> 3 : x || 1 : s(s(x)))").unwrap();
        let cs = encode(&ptrs, Shape::POLY_LINEAR, 16).unwrap();
        let script = emit_smtlib(&cs);
        assert!(script.contains("(set-logic QF_NIA)"));
        assert!(script.contains("(declare-const f1_x1 Int)"));
        assert!(script.contains("(assert (and (<= 0 f1_x1) (<= f1_x1 16)))"));
        assert!(script.contains("; f0 = 0/0\n; f1 = s/1\n"));
        assert!(script.ends_with("(check-sat)\n(get-model)\n"));
        assert_eq!(script, emit_smtlib(&cs.clone()));
    }

    #[test]
    fn linear_logic_for_flat_rules() {
        let ptrs = load_ptrs("(VAR x) (RULES f(x) -> x)").unwrap();
        let cs = encode(&ptrs, Shape::POLY_LINEAR, 4).unwrap();
        assert!(emit_smtlib(&cs).contains("(set-logic QF_LIA)"));
    }

    #[test]
    fn negative_literals() {
        assert_eq!(literal(&BigInt::from(-3)), "(- 3)");
        let names = vec![String::from("a"), String::from("b")];
        let p = UPoly::unknown(0) * UPoly::unknown(1) - UPoly::unknown(0) * UPoly::constant(BigInt::from(3));
        assert_eq!(render_poly(&p, &names), "(+ (* (- 3) a) (* a b))");
    }

}
