//! Exact simulation of multidistribution reduction sequences.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;
use rand::Rng;
use thiserror::Error;

use crate::interp::{Certificate, InterpError, RankMemo};
use crate::multidist::{MultiDistribution, Rational};
use crate::rewriting::{all_steps, step_multidist, step_with_strategy, Chooser, Pars, Ptrs, RandomChooser, Strategy};
use crate::term::{Name, Term};

/// Default cap on the number of nodes an exhaustive expansion may create.
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every choice sequence, up to `budget` explored nodes.
    Exhaustive { budget: usize },
    Strategy(Strategy),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub steps: usize,
    pub mode: Mode,
    pub trace: bool,
    /// Merge equal objects once a multidistribution has more entries than
    /// this. Mass and expectations are unchanged by merging.
    pub merge_above: Option<usize>,
}

impl RunConfig {
    pub fn new(steps: usize, mode: Mode) -> Self {
        Self {
            steps,
            mode,
            trace: false,
            merge_above: None,
        }
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    pub fn merging_above(mut self, entries: usize) -> Self {
        self.merge_above = Some(entries);
        self
    }
}

/// Statistics of step `k`. In exhaustive mode the ranges cover every choice
/// sequence; otherwise `min == max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub step: usize,
    pub mass_min: Rational,
    pub mass_max: Rational,
    /// Partial expected derivation length `Σ_{i=1..k} |μ_i|`.
    pub edl_min: Rational,
    pub edl_max: Rational,
    /// Number of distinct multidistributions reached.
    pub outcomes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport<T: Clone + Ord> {
    /// Records for steps `0..=n`.
    pub records: Vec<StepRecord>,
    /// Distinct multidistributions per step, when tracing.
    pub trace: Vec<Vec<MultiDistribution<T>>>,
    /// First step at which a truncated object appeared; from then on the
    /// masses are lower bounds.
    pub truncated_at: Option<usize>,
    /// Whether any step merged equal objects.
    pub merged: bool,
}

impl<T: Clone + Ord> RunReport<T> {
    /// Upper mass envelope per step.
    pub fn masses(&self) -> Vec<Rational> {
        self.records.iter().map(|r| r.mass_max.clone()).collect()
    }

    pub fn final_record(&self) -> &StepRecord {
        self.records.last().expect("step 0 is always recorded")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("exhaustive expansion exceeded the node budget of {budget} at step {step}")]
    NodeBudgetExceeded { budget: usize, step: usize },
    #[error("the number of steps must be at least 1")]
    NoSteps,
}

fn first_truncation<P: Pars>(pars: &P, mu: &MultiDistribution<P::Obj>) -> bool {
    mu.entries().iter().any(|(_, a)| pars.is_truncated(a))
}

fn maybe_merge<T: Clone + Ord>(mu: MultiDistribution<T>, above: Option<usize>, merged: &mut bool) -> MultiDistribution<T> {
    match above {
        Some(limit) if mu.len() > limit => {
            *merged = true;
            mu.merged()
        }
        _ => mu,
    }
}

/// Runs `cfg.steps` reduction steps from `start`.
pub fn run<P: Pars>(
    pars: &P,
    start: &MultiDistribution<P::Obj>,
    cfg: &RunConfig,
) -> Result<RunReport<P::Obj>, SimError> {
    match cfg.mode {
        Mode::Strategy(strategy) => run_sequence(pars, start, cfg, |mu| step_with_strategy(pars, mu, strategy)),
        Mode::Exhaustive { budget } => run_exhaustive(pars, start, cfg, budget),
    }
}

/// Runs a single sequence whose nondeterminism is resolved by `chooser`.
pub fn run_with_chooser<P: Pars>(
    pars: &P,
    start: &MultiDistribution<P::Obj>,
    cfg: &RunConfig,
    chooser: &mut impl Chooser<P::Obj>,
) -> Result<RunReport<P::Obj>, SimError> {
    run_sequence(pars, start, cfg, |mu| step_multidist(pars, mu, chooser))
}

fn run_sequence<P: Pars>(
    pars: &P,
    start: &MultiDistribution<P::Obj>,
    cfg: &RunConfig,
    mut step: impl FnMut(&MultiDistribution<P::Obj>) -> MultiDistribution<P::Obj>,
) -> Result<RunReport<P::Obj>, SimError> {
    if cfg.steps == 0 {
        return Err(SimError::NoSteps);
    }
    let mut report = RunReport {
        records: Vec::with_capacity(cfg.steps + 1),
        trace: Vec::new(),
        truncated_at: None,
        merged: false,
    };
    let mut mu = start.clone();
    let mut edl = Rational::zero();
    for k in 0..=cfg.steps {
        if k > 0 {
            mu = maybe_merge(step(&mu), cfg.merge_above, &mut report.merged);
            edl += mu.mass();
        }
        if report.truncated_at.is_none() && first_truncation(pars, &mu) {
            report.truncated_at = Some(k);
        }
        let mass = mu.mass();
        report.records.push(StepRecord {
            step: k,
            mass_min: mass.clone(),
            mass_max: mass,
            edl_min: edl.clone(),
            edl_max: edl.clone(),
            outcomes: 1,
        });
        if cfg.trace {
            report.trace.push(vec![mu.clone()]);
        }
    }
    Ok(report)
}

fn run_exhaustive<P: Pars>(
    pars: &P,
    start: &MultiDistribution<P::Obj>,
    cfg: &RunConfig,
    budget: usize,
) -> Result<RunReport<P::Obj>, SimError> {
    if cfg.steps == 0 {
        return Err(SimError::NoSteps);
    }
    let mut report = RunReport {
        records: Vec::with_capacity(cfg.steps + 1),
        trace: Vec::new(),
        truncated_at: None,
        merged: false,
    };
    // a state is a reached multidistribution with the edl of its prefix
    let mut states: BTreeSet<(MultiDistribution<P::Obj>, Rational)> = BTreeSet::new();
    states.insert((start.clone(), Rational::zero()));
    let mut nodes = 1usize;
    for k in 0..=cfg.steps {
        if k > 0 {
            let mut next = BTreeSet::new();
            for (mu, edl) in &states {
                let remaining = budget.saturating_sub(nodes);
                let succ = all_steps(pars, mu, remaining)
                    .ok_or(SimError::NodeBudgetExceeded { budget, step: k })?;
                nodes += succ.len();
                if nodes > budget {
                    return Err(SimError::NodeBudgetExceeded { budget, step: k });
                }
                for nu in succ {
                    let nu = maybe_merge(nu, cfg.merge_above, &mut report.merged);
                    let e = edl + nu.mass();
                    next.insert((nu, e));
                }
            }
            states = next;
        }
        if report.truncated_at.is_none() && states.iter().any(|(mu, _)| first_truncation(pars, mu)) {
            report.truncated_at = Some(k);
        }
        let distinct: BTreeSet<&MultiDistribution<P::Obj>> = states.iter().map(|(mu, _)| mu).collect();
        let masses: Vec<Rational> = distinct.iter().map(|mu| mu.mass()).collect();
        let edls = states.iter().map(|(_, e)| e);
        report.records.push(StepRecord {
            step: k,
            mass_min: masses.iter().min().cloned().unwrap_or_else(Rational::zero),
            mass_max: masses.iter().max().cloned().unwrap_or_else(Rational::zero),
            edl_min: edls.clone().min().cloned().unwrap_or_else(Rational::zero),
            edl_max: edls.max().cloned().unwrap_or_else(Rational::zero),
            outcomes: distinct.len(),
        });
        if cfg.trace {
            report.trace.push(distinct.into_iter().cloned().collect());
        }
    }
    Ok(report)
}

/// The exact set of multidistributions reachable in `k` steps.
pub fn brute_force_reducts<P: Pars>(
    pars: &P,
    mu: &MultiDistribution<P::Obj>,
    k: usize,
    budget: usize,
) -> Result<BTreeSet<MultiDistribution<P::Obj>>, SimError> {
    let mut frontier: BTreeSet<MultiDistribution<P::Obj>> = BTreeSet::new();
    frontier.insert(mu.clone());
    let mut nodes = 1usize;
    for step in 1..=k {
        let mut next = BTreeSet::new();
        for m in &frontier {
            let succ = all_steps(pars, m, budget.saturating_sub(nodes))
                .ok_or(SimError::NodeBudgetExceeded { budget, step })?;
            nodes += succ.len();
            if nodes > budget {
                return Err(SimError::NodeBudgetExceeded { budget, step });
            }
            next.extend(succ);
        }
        frontier = next;
    }
    Ok(frontier)
}

/// A run checked against the certified bound `E(f(μ_0)) / ε`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdhReport<T: Clone + Ord> {
    pub run: RunReport<T>,
    pub bound: Option<Rational>,
    /// First step whose partial edl exceeds the bound.
    pub exceeded_at: Option<usize>,
}

impl<T: Clone + Ord> EdhReport<T> {
    pub fn within_bound(&self) -> bool {
        self.exceeded_at.is_none()
    }
}

/// `E(f(μ)) / ε` for a certificate over a term multidistribution.
pub fn certificate_bound(cert: &Certificate, start: &MultiDistribution<Term>) -> Result<Rational, InterpError> {
    let mut total = Rational::zero();
    for (p, t) in start.entries() {
        total += p * cert.rank(t)?;
    }
    Ok(total / cert.epsilon())
}

/// Runs `cfg` and checks the upper edl envelope against `bound` at every
/// prefix.
pub fn estimate_edh<P: Pars>(
    pars: &P,
    start: &MultiDistribution<P::Obj>,
    cfg: &RunConfig,
    bound: Option<Rational>,
) -> Result<EdhReport<P::Obj>, SimError> {
    let run = run(pars, start, cfg)?;
    let exceeded_at = bound
        .as_ref()
        .and_then(|b| run.records.iter().find(|r| &r.edl_max > b).map(|r| r.step));
    Ok(EdhReport { run, bound, exceeded_at })
}

/// A step `μ ⊸ ν` with `E(f(μ)) < E(f(ν)) + ε·|ν|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriftViolation<T: Clone + Ord> {
    pub start: MultiDistribution<T>,
    pub step: usize,
    pub before: MultiDistribution<T>,
    pub after: MultiDistribution<T>,
    /// `E(f(μ))`.
    pub expected_before: Rational,
    /// `E(f(ν)) + ε·|ν|`.
    pub required: Rational,
}

/// How far [`check_drift`] follows a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriftLimits {
    pub depth: usize,
    /// Entries above which equal objects are merged.
    pub merge_above: usize,
    /// Entries at which the run stops early.
    pub max_entries: usize,
}

/// Checks the drift inequality along the steps chosen by `chooser`,
/// returning the number of steps checked.
pub fn check_drift<P: Pars>(
    pars: &P,
    rank: &mut impl FnMut(&P::Obj) -> Rational,
    epsilon: &Rational,
    start: &MultiDistribution<P::Obj>,
    chooser: &mut impl Chooser<P::Obj>,
    limits: DriftLimits,
) -> Result<usize, Box<DriftViolation<P::Obj>>> {
    let mut mu = start.clone();
    let mut e_mu = mu.expectation_by(&mut *rank);
    for step in 1..=limits.depth {
        if mu.is_empty() {
            return Ok(step - 1);
        }
        let nu = step_multidist(pars, &mu, chooser);
        let e_nu = nu.expectation_by(&mut *rank);
        let required = &e_nu + epsilon * nu.mass();
        if e_mu < required {
            return Err(Box::new(DriftViolation {
                start: start.clone(),
                step,
                before: mu,
                after: nu,
                expected_before: e_mu,
                required,
            }));
        }
        mu = if nu.len() > limits.merge_above { nu.merged() } else { nu };
        if mu.len() > limits.max_entries {
            return Ok(step);
        }
        e_mu = e_nu;
    }
    Ok(limits.depth)
}

/// Summary of a passing drift harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriftSummary {
    pub trials: usize,
    pub steps_checked: usize,
}

/// A random ground term over `symbols` of depth at most `max_depth`.
/// `symbols` must contain a constant.
pub fn random_ground_term(symbols: &[(Name, usize)], max_depth: usize, rng: &mut impl Rng) -> Term {
    let constants: Vec<&Name> = symbols.iter().filter(|(_, a)| *a == 0).map(|(f, _)| f).collect();
    assert!(!constants.is_empty(), "random terms need a constant");
    if max_depth == 0 || rng.gen_range(0..4) == 0 {
        return Term::App(constants[rng.gen_range(0..constants.len())].clone(), Arc::from([]));
    }
    let (f, arity) = &symbols[rng.gen_range(0..symbols.len())];
    let args = (0..*arity)
        .map(|_| random_ground_term(symbols, max_depth - 1, rng))
        .collect();
    Term::App(f.clone(), args)
}

/// A random start term: half the time a ground instance of a rule's
/// left-hand side, otherwise an arbitrary ground term.
pub fn random_start_term(ptrs: &Ptrs, symbols: &[(Name, usize)], max_depth: usize, rng: &mut impl Rng) -> Term {
    if ptrs.rules().is_empty() || rng.gen_bool(0.5) {
        return random_ground_term(symbols, max_depth, rng);
    }
    let rule = &ptrs.rules()[rng.gen_range(0..ptrs.rules().len())];
    let sigma = rule
        .lhs()
        .vars()
        .into_iter()
        .map(|x| (x, random_ground_term(symbols, max_depth / 2, rng)))
        .collect();
    rule.lhs().apply(&sigma)
}

/// Entries above which the harness merges equal terms.
pub const HARNESS_MERGE_ABOVE: usize = 512;

/// Entries at which a harness trial stops early.
pub const HARNESS_MAX_ENTRIES: usize = 1024;

/// Checks the drift lemma for `cert` over `trials` random start terms and
/// random choosers, each run for a random depth in `1..=max_depth`.
pub fn drift_harness<R: Rng>(
    ptrs: &Ptrs,
    cert: &Certificate,
    trials: usize,
    max_depth: usize,
    rng: &mut R,
) -> Result<DriftSummary, Box<DriftViolation<Term>>> {
    let symbols: Vec<(Name, usize)> = cert
        .interpretation()
        .signature()
        .iter()
        .map(|(f, a)| (f.clone(), a))
        .collect();
    let mut steps_checked = 0;
    for _ in 0..trials {
        let mut memo = RankMemo::default();
        let mut rank = |t: &Term| {
            cert.interpretation()
                .rank_memo(t, &mut memo)
                .expect("certificate covers generated terms")
        };
        let start = MultiDistribution::point(random_start_term(ptrs, &symbols, 4, rng));
        let depth = rng.gen_range(1..=max_depth.max(1));
        let mut chooser = RandomChooser(&mut *rng);
        steps_checked += check_drift(
            ptrs,
            &mut rank,
            cert.epsilon(),
            &start,
            &mut chooser,
            DriftLimits {
                depth,
                merge_above: HARNESS_MERGE_ABOVE,
                max_entries: HARNESS_MAX_ENTRIES,
            },
        )?;
    }
    Ok(DriftSummary { trials, steps_checked })
}

/// The mass envelope is non-increasing and the edl partial sums
/// non-decreasing.
pub fn report_is_monotone<T: Clone + Ord>(report: &RunReport<T>) -> bool {
    report
        .records
        .windows(2)
        .all(|w| w[1].mass_max <= w[0].mass_max && w[1].edl_min >= w[0].edl_min)
}
