//! Machine-readable output. The layout is described by
//! `schema/ptrs-output.schema.json` at the repository root.

use std::fmt::Display;

use ptrs_core::multidist::MultiDistribution;
use ptrs_core::simulate::{DriftSummary, DriftViolation, EdhReport};
use ptrs_core::{Interpretation, Ptrs};
use serde::Serialize;

use crate::cert::render_certificate;
use crate::pipeline::{Attempt, Verdict};

#[derive(Debug, Serialize)]
pub struct MonomialJson {
    /// 1-based argument positions; empty for the constant.
    pub args: Vec<usize>,
    pub coefficient: String,
}

#[derive(Debug, Serialize)]
pub struct SymbolJson {
    pub name: String,
    pub arity: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monomials: Option<Vec<MonomialJson>>,
    /// One row-major matrix per argument.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<String>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
pub struct CertificateJson {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    pub symbols: Vec<SymbolJson>,
    pub margins: Vec<String>,
    pub epsilon: String,
    pub text: String,
}

#[derive(Debug, Serialize)]
pub struct AttemptJson {
    pub shape: String,
    pub outcome: &'static str,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerdictJson {
    pub verdict: &'static str,
    pub shape: Option<String>,
    pub certificate: Option<CertificateJson>,
    pub attempts: Vec<AttemptJson>,
    pub reasons: Vec<String>,
}

fn strings<T: Display>(items: impl IntoIterator<Item = T>) -> Vec<String> {
    items.into_iter().map(|x| x.to_string()).collect()
}

fn symbols_json(interp: &Interpretation) -> (&'static str, Option<usize>, Vec<SymbolJson>) {
    match interp {
        Interpretation::Poly(p) => {
            let symbols = p
                .symbols()
                .map(|(name, sym)| SymbolJson {
                    name: name.to_string(),
                    arity: sym.arity(),
                    monomials: Some(
                        sym.iter()
                            .map(|(args, c)| MonomialJson {
                                args: args.clone(),
                                coefficient: c.to_string(),
                            })
                            .collect(),
                    ),
                    matrices: None,
                    constant: None,
                })
                .collect();
            ("polynomial", None, symbols)
        }
        Interpretation::Matrix(m) => {
            let symbols = m
                .symbols()
                .map(|(name, sym)| SymbolJson {
                    name: name.to_string(),
                    arity: sym.arity(),
                    monomials: None,
                    matrices: Some(
                        sym.matrices()
                            .iter()
                            .map(|mat| mat.rows().iter().map(strings).collect())
                            .collect(),
                    ),
                    constant: Some(strings(sym.constant())),
                })
                .collect();
            ("matrix", Some(m.dim()), symbols)
        }
    }
}

fn attempts_json(attempts: &[Attempt]) -> Vec<AttemptJson> {
    attempts
        .iter()
        .map(|a| AttemptJson {
            shape: a.shape.to_string(),
            outcome: a.outcome.tag(),
            detail: a.outcome.to_string(),
        })
        .collect()
}

pub fn verdict_json(v: &Verdict, ptrs: &Ptrs) -> VerdictJson {
    match v {
        Verdict::Yes {
            certificate,
            shape,
            attempts,
        } => {
            let (kind, dimension, symbols) = symbols_json(certificate.interpretation());
            VerdictJson {
                verdict: v.word(),
                shape: shape.map(|s| s.to_string()),
                certificate: Some(CertificateJson {
                    kind,
                    dimension,
                    symbols,
                    margins: strings(certificate.margins()),
                    epsilon: certificate.epsilon().to_string(),
                    text: render_certificate(certificate, ptrs),
                }),
                attempts: attempts_json(attempts),
                reasons: Vec::new(),
            }
        }
        Verdict::Maybe { reasons, attempts } => VerdictJson {
            verdict: v.word(),
            shape: None,
            certificate: None,
            attempts: attempts_json(attempts),
            reasons: reasons.clone(),
        },
        Verdict::Error(msg) => VerdictJson {
            verdict: v.word(),
            shape: None,
            certificate: None,
            attempts: Vec::new(),
            reasons: vec![msg.clone()],
        },
    }
}

#[derive(Debug, Serialize)]
pub struct EntryJson {
    pub probability: String,
    pub object: String,
}

#[derive(Debug, Serialize)]
pub struct StepJson {
    pub step: usize,
    pub mass_min: String,
    pub mass_max: String,
    pub edl_min: String,
    pub edl_max: String,
    pub outcomes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multidistributions: Option<Vec<Vec<EntryJson>>>,
}

#[derive(Debug, Serialize)]
pub struct SimulationJson {
    pub system: String,
    pub mode: String,
    pub steps: Vec<StepJson>,
    pub truncated_at: Option<usize>,
    pub merged: bool,
    pub bound: Option<String>,
    pub exceeded_at: Option<usize>,
}

fn entries_json<T: Clone + Ord + Display>(mu: &MultiDistribution<T>) -> Vec<EntryJson> {
    mu.entries()
        .iter()
        .map(|(p, a)| EntryJson {
            probability: p.to_string(),
            object: a.to_string(),
        })
        .collect()
}

pub fn simulation_json<T: Clone + Ord + Display>(system: &str, mode: &str, report: &EdhReport<T>) -> SimulationJson {
    let run = &report.run;
    let steps = run
        .records
        .iter()
        .enumerate()
        .map(|(k, r)| StepJson {
            step: r.step,
            mass_min: r.mass_min.to_string(),
            mass_max: r.mass_max.to_string(),
            edl_min: r.edl_min.to_string(),
            edl_max: r.edl_max.to_string(),
            outcomes: r.outcomes,
            multidistributions: run.trace.get(k).map(|mus| mus.iter().map(entries_json).collect()),
        })
        .collect();
    SimulationJson {
        system: system.to_string(),
        mode: mode.to_string(),
        steps,
        truncated_at: run.truncated_at,
        merged: run.merged,
        bound: report.bound.as_ref().map(|b| b.to_string()),
        exceeded_at: report.exceeded_at,
    }
}

#[derive(Debug, Serialize)]
pub struct CounterexampleJson {
    pub start: Vec<EntryJson>,
    pub step: usize,
    pub before: Vec<EntryJson>,
    pub after: Vec<EntryJson>,
    pub expected_before: String,
    pub required: String,
}

#[derive(Debug, Serialize)]
pub struct DriftJson {
    pub verdict: &'static str,
    pub epsilon: String,
    pub trials: usize,
    pub steps_checked: usize,
    pub counterexample: Option<CounterexampleJson>,
}

pub fn drift_json<T: Clone + Ord + Display>(
    epsilon: &str,
    trials: usize,
    result: &Result<DriftSummary, Box<DriftViolation<T>>>,
) -> DriftJson {
    match result {
        Ok(s) => DriftJson {
            verdict: "pass",
            epsilon: epsilon.to_string(),
            trials: s.trials,
            steps_checked: s.steps_checked,
            counterexample: None,
        },
        Err(v) => DriftJson {
            verdict: "fail",
            epsilon: epsilon.to_string(),
            trials,
            steps_checked: 0,
            counterexample: Some(CounterexampleJson {
                start: entries_json(&v.start),
                step: v.step,
                before: entries_json(&v.before),
                after: entries_json(&v.after),
                expected_before: v.expected_before.to_string(),
                required: v.required.to_string(),
            }),
        },
    }
}
