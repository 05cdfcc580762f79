//! The WST problem format extended with weighted alternatives:
//!
//! ```text
//! (VAR x)
//! (RULES
//!   s(x) -> 3 : x || 1 : s(s(x))
//! )
//! ```
//!
//! Lines starting with `;` are comments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use ptrs_core::constraint::FRESH_CONSTANT;
use ptrs_core::multidist::Rational;
use ptrs_core::rewriting::RuleError;
use ptrs_core::{FiniteDistribution, ProbRule, Ptrs, Signature, Term};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Loc {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WstError {
    #[error("{loc}: {msg}")]
    Syntax { loc: Loc, msg: String },
    #[error("{loc}: unsupported block `{name}` (expected VAR, RULES or COMMENT)")]
    UnknownBlock { loc: Loc, name: String },
    #[error("{loc}: symbol `{symbol}` used with {found} arguments, but first used with {expected}")]
    Arity {
        loc: Loc,
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("{loc}: variable `{name}` cannot take arguments")]
    AppliedVariable { loc: Loc, name: String },
    #[error("{loc}: weights must be positive integers, found `{found}`")]
    BadWeight { loc: Loc, found: String },
    #[error("the problem has no rules")]
    NoRules,
    #[error("{loc}: the left-hand side of a rule must not be a variable")]
    VariableLhs { loc: Loc },
    #[error("{loc}: variable `{var}` occurs on the right but not on the left")]
    FreeVariable { loc: Loc, var: String },
    #[error("{loc}: {msg}")]
    Rule { loc: Loc, msg: String },
}

/// A term as written, with its location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTerm {
    pub name: String,
    pub args: Vec<RawTerm>,
    pub loc: Loc,
}

impl fmt::Display for RawTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some((first, rest)) = self.args.split_first() {
            write!(f, "({first}")?;
            for a in rest {
                write!(f, ",{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRule {
    pub lhs: RawTerm,
    /// Weighted alternatives; `l -> r` is the single alternative `1 : r`.
    pub alternatives: Vec<(u64, RawTerm)>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemFile {
    /// Declared variables, in order of first declaration.
    pub variables: Vec<String>,
    pub rules: Vec<RawRule>,
    /// Arities inferred from first use.
    pub arities: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Comma,
    Arrow,
    Bar,
    Colon,
    Ident(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Open => f.write_str("`(`"),
            Tok::Close => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Bar => f.write_str("`||`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
        }
    }
}

fn lex(input: &str) -> Vec<(Tok, Loc)> {
    let mut out = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        if line.trim_start().starts_with(';') {
            continue;
        }
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let loc = Loc {
                line: lineno + 1,
                col: i + 1,
            };
            let c = chars[i];
            let next = chars.get(i + 1).copied();
            let tok = match c {
                _ if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '(' => Tok::Open,
                ')' => Tok::Close,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                '-' if next == Some('>') => {
                    i += 1;
                    Tok::Arrow
                }
                '|' if next == Some('|') => {
                    i += 1;
                    Tok::Bar
                }
                _ => {
                    let start = i;
                    while i < chars.len() {
                        let c = chars[i];
                        let next = chars.get(i + 1).copied();
                        let stop = c.is_whitespace()
                            || matches!(c, '(' | ')' | ',' | ':')
                            || (c == '-' && next == Some('>'))
                            || (c == '|' && next == Some('|'));
                        if stop {
                            break;
                        }
                        i += 1;
                    }
                    out.push((Tok::Ident(chars[start..i].iter().collect()), loc));
                    continue;
                }
            };
            i += 1;
            out.push((tok, loc));
        }
    }
    out
}

struct Parser {
    toks: Vec<(Tok, Loc)>,
    pos: usize,
    end: Loc,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn loc(&self) -> Loc {
        self.toks.get(self.pos).map_or(self.end, |(_, l)| *l)
    }

    fn error(&self, msg: impl Into<String>) -> WstError {
        WstError::Syntax {
            loc: self.loc(),
            msg: msg.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> WstError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<Loc, WstError> {
        if self.peek() == Some(&tok) {
            let loc = self.loc();
            self.pos += 1;
            Ok(loc)
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn ident(&mut self, wanted: &str) -> Result<(String, Loc), WstError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                let loc = self.loc();
                self.pos += 1;
                Ok((s, loc))
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn term(&mut self) -> Result<RawTerm, WstError> {
        let (name, loc) = self.ident("a term")?;
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::Open) {
            self.pos += 1;
            loop {
                args.push(self.term()?);
                match self.peek() {
                    Some(Tok::Comma) => self.pos += 1,
                    Some(Tok::Close) => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.unexpected("`,` or `)`")),
                }
            }
        }
        Ok(RawTerm { name, args, loc })
    }

    fn weighted(&mut self) -> Result<(u64, RawTerm), WstError> {
        let (w, loc) = self.ident("a weight")?;
        let weight = match w.parse::<u64>() {
            Ok(n) if n > 0 => n,
            _ => return Err(WstError::BadWeight { loc, found: w }),
        };
        self.expect(Tok::Colon, "`:` after the weight")?;
        Ok((weight, self.term()?))
    }

    fn starts_weighted(&self) -> bool {
        matches!(
            (self.peek(), self.peek_at(1)),
            (Some(Tok::Ident(_)), Some(Tok::Colon))
        )
    }

    fn rule(&mut self) -> Result<RawRule, WstError> {
        let loc = self.loc();
        let lhs = self.term()?;
        self.expect(Tok::Arrow, "`->`")?;
        let alternatives = if self.starts_weighted() {
            let mut alts = vec![self.weighted()?];
            while self.peek() == Some(&Tok::Bar) {
                self.pos += 1;
                alts.push(self.weighted()?);
            }
            alts
        } else {
            let rhs = self.term()?;
            if self.peek() == Some(&Tok::Bar) {
                return Err(self.error("alternatives joined by `||` must all carry weights"));
            }
            vec![(1, rhs)]
        };
        Ok(RawRule {
            lhs,
            alternatives,
            loc,
        })
    }

    fn skip_balanced(&mut self) -> Result<(), WstError> {
        let mut depth = 1usize;
        while let Some(t) = self.peek() {
            match t {
                Tok::Open => depth += 1,
                Tok::Close => {
                    depth -= 1;
                    if depth == 0 {
                        self.pos += 1;
                        return Ok(());
                    }
                }
                _ => {}
            }
            self.pos += 1;
        }
        Err(self.unexpected("`)`"))
    }
}

/// Parses a problem file and infers symbol arities.
pub fn parse_problem(input: &str) -> Result<ProblemFile, WstError> {
    let end = Loc {
        line: input.lines().count().max(1),
        col: input.lines().last().map_or(1, |l| l.chars().count() + 1),
    };
    let mut p = Parser {
        toks: lex(input),
        pos: 0,
        end,
    };
    let mut variables: Vec<String> = Vec::new();
    let mut rules = Vec::new();
    while p.peek().is_some() {
        p.expect(Tok::Open, "`(`")?;
        let (block, loc) = p.ident("a block name")?;
        match block.as_str() {
            "VAR" => {
                while let Some(Tok::Ident(_)) = p.peek() {
                    let (v, _) = p.ident("a variable")?;
                    if !variables.contains(&v) {
                        variables.push(v);
                    }
                }
                p.expect(Tok::Close, "a variable or `)`")?;
            }
            "RULES" => {
                while p.peek() != Some(&Tok::Close) {
                    if p.peek().is_none() {
                        return Err(p.unexpected("a rule or `)`"));
                    }
                    rules.push(p.rule()?);
                }
                p.pos += 1;
            }
            "COMMENT" => p.skip_balanced()?,
            _ => return Err(WstError::UnknownBlock { loc, name: block }),
        }
    }
    if rules.is_empty() {
        return Err(WstError::NoRules);
    }
    let vars: BTreeSet<&str> = variables.iter().map(String::as_str).collect();
    let mut arities = BTreeMap::new();
    for rule in &rules {
        infer_arities(&rule.lhs, &vars, &mut arities)?;
        for (_, r) in &rule.alternatives {
            infer_arities(r, &vars, &mut arities)?;
        }
    }
    Ok(ProblemFile {
        variables,
        rules,
        arities,
    })
}

fn infer_arities(t: &RawTerm, vars: &BTreeSet<&str>, arities: &mut BTreeMap<String, usize>) -> Result<(), WstError> {
    if vars.contains(t.name.as_str()) {
        if !t.args.is_empty() {
            return Err(WstError::AppliedVariable {
                loc: t.loc,
                name: t.name.clone(),
            });
        }
        return Ok(());
    }
    match arities.get(&t.name) {
        Some(&expected) if expected != t.args.len() => {
            return Err(WstError::Arity {
                loc: t.loc,
                symbol: t.name.clone(),
                expected,
                found: t.args.len(),
            })
        }
        Some(_) => {}
        None => {
            arities.insert(t.name.clone(), t.args.len());
        }
    }
    t.args.iter().try_for_each(|a| infer_arities(a, vars, arities))
}

impl ProblemFile {
    fn to_term(&self, t: &RawTerm) -> Term {
        if self.variables.contains(&t.name) {
            Term::var(&t.name)
        } else {
            Term::app(&t.name, t.args.iter().map(|a| self.to_term(a)).collect())
        }
    }

    /// Builds the rewrite system, normalizing weights `w_j` to `w_j / Σ w`.
    /// Alternatives with the same right-hand side are merged by adding their
    /// weights.
    pub fn elaborate(&self) -> Result<Ptrs, WstError> {
        let mut sig = Signature::new();
        for (f, &a) in &self.arities {
            sig.declare(f.as_str(), a).expect("arities are consistent");
        }
        let mut rules = Vec::with_capacity(self.rules.len());
        for raw in &self.rules {
            let total: BigInt = raw.alternatives.iter().map(|(w, _)| BigInt::from(*w)).sum();
            let alts = raw.alternatives.iter().map(|(w, r)| {
                (
                    self.to_term(r),
                    Rational::new(BigInt::from(*w), total.clone()),
                )
            });
            let dist = FiniteDistribution::new(alts).map_err(|e| WstError::Rule {
                loc: raw.loc,
                msg: e.to_string(),
            })?;
            if dist.len() < raw.alternatives.len() {
                log::debug!("{}: merged duplicate alternatives", raw.loc);
            }
            let rule = ProbRule::new(self.to_term(&raw.lhs), dist).map_err(|e| match e {
                RuleError::VariableLhs(_) => WstError::VariableLhs { loc: raw.loc },
                RuleError::FreeVariable { var, .. } => WstError::FreeVariable {
                    loc: raw.loc,
                    var: var.to_string(),
                },
                other => WstError::Rule {
                    loc: raw.loc,
                    msg: other.to_string(),
                },
            })?;
            rules.push(rule);
        }
        Ptrs::with_signature(sig, rules).map_err(|e| WstError::Rule {
            loc: Loc::default(),
            msg: e.to_string(),
        })
    }

    /// Canonical text; parsing it gives back the same problem.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.variables.is_empty() {
            out.push_str(&format!("(VAR {})\n", self.variables.join(" ")));
        }
        out.push_str("(RULES\n");
        for rule in &self.rules {
            out.push_str(&format!("  {} -> ", rule.lhs));
            match rule.alternatives.as_slice() {
                [(1, r)] => out.push_str(&r.to_string()),
                alts => {
                    let parts: Vec<String> = alts.iter().map(|(w, r)| format!("{w} : {r}")).collect();
                    out.push_str(&parts.join(" || "));
                }
            }
            out.push('\n');
        }
        out.push_str(")\n");
        out
    }
}

/// Parses and elaborates in one go.
pub fn load_ptrs(input: &str) -> Result<Ptrs, WstError> {
    parse_problem(input)?.elaborate()
}

/// Parses a single term over `ptrs`'s signature; names listed in
/// `variables` are variables. When the signature has no constant the
/// fresh constant `0` is also accepted.
pub fn parse_term(text: &str, variables: &[String], ptrs: &Ptrs) -> Result<Term, WstError> {
    let mut p = Parser {
        toks: lex(text),
        pos: 0,
        end: Loc {
            line: 1,
            col: text.chars().count() + 1,
        },
    };
    let raw = p.term()?;
    if p.peek().is_some() {
        return Err(p.unexpected("end of term"));
    }
    let pf = ProblemFile {
        variables: variables.to_vec(),
        rules: Vec::new(),
        arities: BTreeMap::new(),
    };
    let vars: BTreeSet<&str> = variables.iter().map(String::as_str).collect();
    let mut arities: BTreeMap<String, usize> = ptrs
        .signature()
        .iter()
        .map(|(f, a)| (f.to_string(), a))
        .collect();
    if !arities.values().any(|&a| a == 0) {
        arities.insert(FRESH_CONSTANT.to_string(), 0);
    }
    let known: BTreeSet<String> = arities.keys().cloned().collect();
    infer_arities(&raw, &vars, &mut arities)?;
    if let Some(unknown) = arities.keys().find(|f| !known.contains(*f)) {
        return Err(WstError::Syntax {
            loc: raw.loc,
            msg: format!("symbol `{unknown}` does not occur in the rules"),
        });
    }
    Ok(pf.to_term(&raw))
}
