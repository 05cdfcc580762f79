//! Certificate text: one definition per symbol, as printed by the prover.
//!
//! ```text
//! [0] = 0
//! [s](x) = x + 1
//! [a](x) = [[1,1],[0,0]]*x + [0,1]
//! ```
//!
//! Definitions are separated by newlines, `,` or `;`. Lines starting with
//! `YES`, `MAYBE`, `rule`, `epsilon` or `#` are skipped, so the prover's own
//! output can be fed back to `check`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;
use ptrs_core::form::Matrix;
use ptrs_core::interp::{MatrixInterpretation, MatrixSymbol, PolyInterpretation, PolySymbol};
use ptrs_core::multidist::{parse_rational, Rational};
use ptrs_core::{Certificate, Interpretation, Ptrs};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("certificate line {line}: {msg}")]
pub struct CertParseError {
    pub line: usize,
    pub msg: String,
}

const SKIPPED: &[&str] = &["YES", "MAYBE", "ERROR", "rule", "epsilon", "#", "//"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Star,
    Open,
    Close,
    LBracket,
    RBracket,
    Comma,
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '*' => Some(Tok::Star),
            '(' => Some(Tok::Open),
            ')' => Some(Tok::Close),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = simple {
            out.push(t);
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '/') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let q = parse_rational(&text).ok_or_else(|| format!("bad number `{text}`"))?;
            out.push(Tok::Num(q));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '\'')) {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

/// Splits at `,` and `;` outside brackets and parentheses.
fn split_definitions(line: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in line.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' | ';' if depth == 0 => {
                parts.push(&line[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&line[start..]);
    parts.into_iter().map(str::trim).filter(|p| !p.is_empty()).collect()
}

struct Definition {
    line: usize,
    symbol: String,
    params: Vec<String>,
    body: Vec<Tok>,
}

fn parse_definition(line: usize, text: &str) -> Result<Definition, CertParseError> {
    let err = |msg: String| CertParseError { line, msg };
    let rest = text
        .strip_prefix('[')
        .ok_or_else(|| err(format!("expected `[symbol]` at the start of `{text}`")))?;
    let close = rest.find(']').ok_or_else(|| err(String::from("unclosed `[`")))?;
    let symbol = rest[..close].trim().to_string();
    if symbol.is_empty() {
        return Err(err(String::from("empty symbol name")));
    }
    let rest = rest[close + 1..].trim_start();
    let (params_text, rest) = match rest.strip_prefix('(') {
        Some(r) => {
            let close = r.find(')').ok_or_else(|| err(String::from("unclosed `(`")))?;
            (Some(&r[..close]), &r[close + 1..])
        }
        None => (None, rest),
    };
    let params: Vec<String> = match params_text {
        Some(p) => p.split(',').map(|x| x.trim().to_string()).collect(),
        None => Vec::new(),
    };
    if params.iter().any(|p| p.is_empty()) {
        return Err(err(format!("empty parameter name for [{symbol}]")));
    }
    let body = rest
        .trim_start()
        .strip_prefix('=')
        .ok_or_else(|| err(format!("expected `=` after [{symbol}]")))?;
    let body = tokenize(body).map_err(err)?;
    if body.is_empty() {
        return Err(err(format!("empty interpretation for [{symbol}]")));
    }
    Ok(Definition {
        line,
        symbol,
        params,
        body,
    })
}

fn param_index(def: &Definition, name: &str) -> Result<usize, CertParseError> {
    def.params
        .iter()
        .position(|p| p == name)
        .map(|i| i + 1)
        .ok_or_else(|| CertParseError {
            line: def.line,
            msg: format!("`{name}` is not a parameter of [{}]", def.symbol),
        })
}

fn poly_symbol(def: &Definition) -> Result<PolySymbol<Rational>, CertParseError> {
    let err = |msg: String| CertParseError { line: def.line, msg };
    let mut coeffs: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
    let mut toks = def.body.iter().peekable();
    loop {
        let mut coeff = Rational::from_integer(1.into());
        let mut monomial: Vec<usize> = Vec::new();
        let mut expect_factor = true;
        while expect_factor {
            match toks.next() {
                Some(Tok::Num(q)) => coeff *= q,
                Some(Tok::Ident(x)) => {
                    let i = param_index(def, x)?;
                    if monomial.contains(&i) {
                        return Err(err(format!("`{x}` occurs twice in a monomial; only multilinear terms are allowed")));
                    }
                    monomial.push(i);
                }
                other => return Err(err(format!("expected a number or a parameter, found {other:?}"))),
            }
            expect_factor = match toks.peek() {
                Some(Tok::Star) => {
                    toks.next();
                    true
                }
                Some(Tok::Ident(_)) => true,
                _ => false,
            };
        }
        monomial.sort_unstable();
        *coeffs.entry(monomial).or_insert_with(Rational::zero) += coeff;
        match toks.next() {
            None => break,
            Some(Tok::Plus) => {}
            Some(other) => return Err(err(format!("expected `+`, found {other:?}"))),
        }
    }
    Ok(PolySymbol::new(def.params.len(), coeffs))
}

fn parse_vector(toks: &[Tok], pos: &mut usize) -> Result<Vec<Rational>, String> {
    if toks.get(*pos) != Some(&Tok::LBracket) {
        return Err(String::from("expected `[`"));
    }
    *pos += 1;
    let mut v = Vec::new();
    loop {
        match toks.get(*pos) {
            Some(Tok::Num(q)) => v.push(q.clone()),
            other => return Err(format!("expected a number, found {other:?}")),
        }
        *pos += 1;
        match toks.get(*pos) {
            Some(Tok::Comma) => *pos += 1,
            Some(Tok::RBracket) => {
                *pos += 1;
                return Ok(v);
            }
            other => return Err(format!("expected `,` or `]`, found {other:?}")),
        }
    }
}

enum MatrixPart {
    Linear(usize, Vec<Vec<Rational>>),
    Constant(Vec<Rational>),
}

fn matrix_symbol(def: &Definition) -> Result<(usize, MatrixSymbol<Rational>), CertParseError> {
    let err = |msg: String| CertParseError { line: def.line, msg };
    let toks = &def.body;
    let mut pos = 0;
    let mut parts = Vec::new();
    loop {
        if toks.get(pos + 1) == Some(&Tok::LBracket) {
            pos += 1;
            let mut rows = vec![parse_vector(toks, &mut pos).map_err(err)?];
            while toks.get(pos) == Some(&Tok::Comma) {
                pos += 1;
                rows.push(parse_vector(toks, &mut pos).map_err(err)?);
            }
            if toks.get(pos) != Some(&Tok::RBracket) {
                return Err(err(String::from("expected `]` closing the matrix")));
            }
            pos += 1;
            if toks.get(pos) == Some(&Tok::Star) {
                pos += 1;
            }
            let Some(Tok::Ident(x)) = toks.get(pos) else {
                return Err(err(String::from("expected a parameter after the matrix")));
            };
            pos += 1;
            parts.push(MatrixPart::Linear(param_index(def, x)?, rows));
        } else {
            parts.push(MatrixPart::Constant(parse_vector(toks, &mut pos).map_err(err)?));
        }
        match toks.get(pos) {
            None => break,
            Some(Tok::Plus) => pos += 1,
            Some(other) => return Err(err(format!("expected `+`, found {other:?}"))),
        }
    }
    let dim = match &parts[0] {
        MatrixPart::Linear(_, rows) => rows.len(),
        MatrixPart::Constant(v) => v.len(),
    };
    let mut mats: Vec<Matrix<Rational>> = vec![Matrix::zero(dim); def.params.len()];
    let mut constant = vec![Rational::zero(); dim];
    for part in parts {
        match part {
            MatrixPart::Linear(i, rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(err(format!("matrix for `{}` is not {dim}x{dim}", def.params[i - 1])));
                }
                mats[i - 1] = mats[i - 1].add(&Matrix::from_rows(rows).expect("square"));
            }
            MatrixPart::Constant(v) => {
                if v.len() != dim {
                    return Err(err(format!("vector has {} components, expected {dim}", v.len())));
                }
                for (c, x) in constant.iter_mut().zip(v) {
                    *c += x;
                }
            }
        }
    }
    Ok((dim, MatrixSymbol::new(mats, constant)))
}

/// Parses certificate text. Matrix mode is chosen when any definition uses
/// bracketed vectors.
pub fn parse_certificate(text: &str) -> Result<Interpretation, CertParseError> {
    let mut defs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || SKIPPED.iter().any(|p| line.starts_with(p)) {
            continue;
        }
        for part in split_definitions(line) {
            defs.push(parse_definition(i + 1, part)?);
        }
    }
    if defs.is_empty() {
        return Err(CertParseError {
            line: 0,
            msg: String::from("no interpretation found"),
        });
    }
    let is_matrix = defs.iter().any(|d| d.body.contains(&Tok::LBracket));
    let mut seen = std::collections::BTreeSet::new();
    for d in &defs {
        if !seen.insert(d.symbol.clone()) {
            return Err(CertParseError {
                line: d.line,
                msg: format!("[{}] is defined twice", d.symbol),
            });
        }
    }
    if is_matrix {
        let mut interp: Option<MatrixInterpretation<Rational>> = None;
        for d in &defs {
            let (dim, sym) = matrix_symbol(d)?;
            let m = interp.get_or_insert_with(|| MatrixInterpretation::new(dim));
            m.insert(d.symbol.as_str(), sym).map_err(|e| CertParseError {
                line: d.line,
                msg: e.to_string(),
            })?;
        }
        Ok(Interpretation::Matrix(interp.expect("at least one definition")))
    } else {
        let mut interp = PolyInterpretation::new();
        for d in &defs {
            interp.insert(d.symbol.as_str(), poly_symbol(d)?);
        }
        Ok(Interpretation::Poly(interp))
    }
}

/// The interpretation followed by per-rule margins and `epsilon`.
pub fn render_certificate(cert: &Certificate, ptrs: &Ptrs) -> String {
    let mut out = cert.interpretation().to_string();
    for (i, (rule, margin)) in ptrs.rules().iter().zip(cert.margins()).enumerate() {
        let _ = writeln!(out, "rule {}: {rule}   margin {margin}", i + 1);
    }
    let _ = writeln!(out, "epsilon = {}", cert.epsilon());
    out
}
