//! Parse, encode, solve, validate and report over a portfolio of shapes.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use ptrs_core::constraint::{decode, encode, Shape};
use ptrs_core::interp::CertError;
use ptrs_core::{check_certificate, Certificate, Interpretation, Ptrs};

use crate::cert::render_certificate;
use crate::smt::{emit_smtlib, SolverAnswer};
use crate::solver::{run_solver, SolverCommand, SolverOutcome, DEFAULT_SOLVER};

pub const DEFAULT_COEFF_BOUND: u32 = 16;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProverConfig {
    pub shapes: Vec<Shape>,
    pub solver: SolverCommand,
    /// Per shape.
    pub timeout: Duration,
    pub coeff_bound: u32,
    pub parallel: bool,
    pub emit_smt: Option<PathBuf>,
}

impl Default for ProverConfig {
    fn default() -> Self {
        Self {
            shapes: Shape::default_portfolio(),
            solver: SolverCommand::parse(DEFAULT_SOLVER).expect("non-empty"),
            timeout: DEFAULT_TIMEOUT,
            coeff_bound: DEFAULT_COEFF_BOUND,
            parallel: false,
            emit_smt: None,
        }
    }
}

/// What a single shape produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShapeOutcome {
    Proved(Certificate),
    /// No interpretation within the coefficient box.
    Unsat,
    Unknown(String),
    TimedOut,
    Cancelled,
    /// The shape cannot express the rules (non-multilinear composition).
    NotExpressible(String),
    SolverFailed(String),
    /// The solver's model did not give a valid certificate.
    InvalidModel(String),
}

impl ShapeOutcome {
    pub fn tag(&self) -> &'static str {
        match self {
            ShapeOutcome::Proved(_) => "proved",
            ShapeOutcome::Unsat => "unsat",
            ShapeOutcome::Unknown(_) => "unknown",
            ShapeOutcome::TimedOut => "timeout",
            ShapeOutcome::Cancelled => "cancelled",
            ShapeOutcome::NotExpressible(_) => "not-expressible",
            ShapeOutcome::SolverFailed(_) => "solver-error",
            ShapeOutcome::InvalidModel(_) => "invalid-model",
        }
    }
}

impl fmt::Display for ShapeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeOutcome::Proved(c) => write!(f, "proved with epsilon {}", c.epsilon()),
            ShapeOutcome::Unsat => f.write_str("unsat within the coefficient bound"),
            ShapeOutcome::Unknown(why) => write!(f, "unknown ({why})"),
            ShapeOutcome::TimedOut => f.write_str("solver timed out"),
            ShapeOutcome::Cancelled => f.write_str("cancelled"),
            ShapeOutcome::NotExpressible(why) => write!(f, "not expressible: {why}"),
            ShapeOutcome::SolverFailed(why) => write!(f, "solver error: {why}"),
            ShapeOutcome::InvalidModel(why) => write!(f, "solver model rejected: {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attempt {
    pub shape: Shape,
    pub outcome: ShapeOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Yes {
        certificate: Certificate,
        /// `None` when the certificate was supplied by the user.
        shape: Option<Shape>,
        attempts: Vec<Attempt>,
    },
    Maybe {
        reasons: Vec<String>,
        attempts: Vec<Attempt>,
    },
    Error(String),
}

impl Verdict {
    pub fn word(&self) -> &'static str {
        match self {
            Verdict::Yes { .. } => "YES",
            Verdict::Maybe { .. } => "MAYBE",
            Verdict::Error(_) => "ERROR",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Yes { .. } => 0,
            Verdict::Maybe { .. } => 1,
            Verdict::Error(_) => 2,
        }
    }

    /// Human-readable report; the first line is the verdict word.
    pub fn render(&self, ptrs: Option<&Ptrs>) -> String {
        let mut out = format!("{}\n", self.word());
        match self {
            Verdict::Yes {
                certificate, shape, ..
            } => {
                if let Some(shape) = shape {
                    out.push_str(&format!("# shape {shape}\n"));
                }
                match ptrs {
                    Some(p) => out.push_str(&render_certificate(certificate, p)),
                    None => out.push_str(&certificate.interpretation().to_string()),
                }
            }
            Verdict::Maybe { reasons, attempts } => {
                for a in attempts {
                    out.push_str(&format!("# {}: {}\n", a.shape, a.outcome));
                }
                for r in reasons {
                    out.push_str(&format!("# {r}\n"));
                }
            }
            Verdict::Error(msg) => out.push_str(&format!("# {msg}\n")),
        }
        out
    }
}

/// Where the script of `shape` is written for `--emit-smt path`: `path`
/// itself for a single shape, `stem.shape.ext` otherwise.
pub fn emit_path(base: &Path, shape: Shape, single: bool) -> PathBuf {
    if single {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("encoding");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("smt2");
    base.with_file_name(format!("{stem}.{shape}.{ext}"))
}

/// Encodes, solves and validates one shape.
pub fn attempt_shape(ptrs: &Ptrs, shape: Shape, cfg: &ProverConfig, cancel: Option<&AtomicBool>) -> ShapeOutcome {
    let cs = match encode(ptrs, shape, cfg.coeff_bound) {
        Ok(cs) => cs,
        Err(e) => return ShapeOutcome::NotExpressible(e.to_string()),
    };
    let script = emit_smtlib(&cs);
    if let Some(base) = &cfg.emit_smt {
        let path = emit_path(base, shape, cfg.shapes.len() == 1);
        if let Err(e) = std::fs::write(&path, &script) {
            log::warn!("cannot write {}: {e}", path.display());
        }
    }
    log::info!(
        "shape {shape}: {} unknowns, {} constraints",
        cs.unknowns.len(),
        cs.constraints.len()
    );
    let answer = match run_solver(&cfg.solver, &script, cfg.timeout, cancel) {
        Ok(SolverOutcome::Answer(a)) => a,
        Ok(SolverOutcome::TimedOut) => return ShapeOutcome::TimedOut,
        Ok(SolverOutcome::Cancelled) => return ShapeOutcome::Cancelled,
        Err(e) => return ShapeOutcome::SolverFailed(e.to_string()),
    };
    let model = match answer {
        SolverAnswer::Sat(m) => m,
        SolverAnswer::Unsat => return ShapeOutcome::Unsat,
        SolverAnswer::Unknown(why) => return ShapeOutcome::Unknown(why),
    };
    let interp = match decode(&cs, &model) {
        Ok(i) => i,
        Err(e) => return ShapeOutcome::InvalidModel(e.to_string()),
    };
    match check_certificate(&interp, ptrs) {
        Ok(cert) => ShapeOutcome::Proved(cert),
        Err(e) => ShapeOutcome::InvalidModel(format!("{e}\n{interp}")),
    }
}

fn conclude(attempts: Vec<Attempt>) -> Verdict {
    if let Some(a) = attempts.iter().find(|a| matches!(a.outcome, ShapeOutcome::Proved(_))) {
        let ShapeOutcome::Proved(cert) = &a.outcome else { unreachable!() };
        return Verdict::Yes {
            certificate: cert.clone(),
            shape: Some(a.shape),
            attempts: attempts.clone(),
        };
    }
    // a model that fails the exact check means the encoding is wrong
    if let Some(a) = attempts.iter().find(|a| matches!(a.outcome, ShapeOutcome::InvalidModel(_))) {
        return Verdict::Error(format!("shape {}: {}", a.shape, a.outcome));
    }
    if !attempts.is_empty() && attempts.iter().all(|a| matches!(a.outcome, ShapeOutcome::SolverFailed(_))) {
        return Verdict::Error(format!("{}", attempts[0].outcome));
    }
    Verdict::Maybe {
        reasons: Vec::new(),
        attempts,
    }
}

/// Tries every configured shape, in order or concurrently.
pub fn prove(ptrs: &Ptrs, cfg: &ProverConfig) -> Verdict {
    if cfg.shapes.is_empty() {
        return Verdict::Error(String::from("no interpretation shape enabled"));
    }
    if cfg.parallel && cfg.shapes.len() > 1 {
        return prove_parallel(ptrs, cfg);
    }
    let mut attempts = Vec::new();
    for &shape in &cfg.shapes {
        let outcome = attempt_shape(ptrs, shape, cfg, None);
        log::info!("shape {shape}: {}", outcome.tag());
        let stop = matches!(outcome, ShapeOutcome::Proved(_) | ShapeOutcome::InvalidModel(_));
        attempts.push(Attempt { shape, outcome });
        if stop {
            break;
        }
    }
    conclude(attempts)
}

fn prove_parallel(ptrs: &Ptrs, cfg: &ProverConfig) -> Verdict {
    let cancel = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel();
    let mut attempts: Vec<Option<ShapeOutcome>> = vec![None; cfg.shapes.len()];
    thread::scope(|s| {
        for (i, &shape) in cfg.shapes.iter().enumerate() {
            let tx = tx.clone();
            let cancel = &cancel;
            s.spawn(move || {
                let outcome = attempt_shape(ptrs, shape, cfg, Some(cancel));
                if matches!(outcome, ShapeOutcome::Proved(_)) {
                    cancel.store(true, Ordering::SeqCst);
                }
                let _ = tx.send((i, outcome));
            });
        }
        drop(tx);
        for (i, outcome) in rx {
            attempts[i] = Some(outcome);
        }
    });
    let mut collected: Vec<Attempt> = cfg
        .shapes
        .iter()
        .zip(attempts)
        .map(|(&shape, o)| Attempt {
            shape,
            outcome: o.unwrap_or(ShapeOutcome::Cancelled),
        })
        .collect();
    // report the first shape in portfolio order that proved
    if let Some(i) = collected.iter().position(|a| matches!(a.outcome, ShapeOutcome::Proved(_))) {
        let won = collected[i].clone();
        collected.retain(|a| !matches!(a.outcome, ShapeOutcome::Cancelled));
        let ShapeOutcome::Proved(cert) = won.outcome else { unreachable!() };
        return Verdict::Yes {
            certificate: cert,
            shape: Some(won.shape),
            attempts: collected,
        };
    }
    conclude(collected)
}

/// Checks a user-supplied interpretation.
pub fn check_only(ptrs: &Ptrs, interp: &Interpretation) -> Verdict {
    match check_certificate(interp, ptrs) {
        Ok(certificate) => Verdict::Yes {
            certificate,
            shape: None,
            attempts: Vec::new(),
        },
        Err(CertError::Invalid(e)) => Verdict::Maybe {
            reasons: vec![format!("interpretation rejected: {e}")],
            attempts: Vec::new(),
        },
        Err(CertError::NotOriented(failures)) => Verdict::Maybe {
            reasons: failures
                .iter()
                .map(|(i, e)| format!("rule {} not oriented: {}: {e}", i + 1, ptrs.rules()[*i]))
                .collect(),
            attempts: Vec::new(),
        },
    }
}
