//! The `ptrs` command line: argument parsing and dispatch.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use ptrs_core::constraint::Shape;
use ptrs_core::families::{Amd, AnFamily, AnObj, RandomWalk, AN_MAX_INDEX};
use ptrs_core::multidist::parse_rational;
use ptrs_core::rewriting::{Pars, Strategy};
use ptrs_core::simulate::{
    certificate_bound, drift_harness, estimate_edh, EdhReport, Mode, RunConfig, DEFAULT_NODE_BUDGET,
};
use ptrs_core::{check_certificate, Certificate, MultiDistribution, Ptrs, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cert::parse_certificate;
use crate::config::{ColorMode, ConfigFile};
use crate::pipeline::{check_only, prove, ProverConfig, Verdict, DEFAULT_COEFF_BOUND, DEFAULT_TIMEOUT};
use crate::report::{drift_json, simulation_json, verdict_json};
use crate::solver::{SolverCommand, DEFAULT_SOLVER};
use crate::wst::{parse_problem, parse_term, ProblemFile};

/// Environment variable naming the default solver command.
pub const SOLVER_ENV: &str = "PTRS_SOLVER";

/// Multidistributions larger than this are merged unless `--no-merge`.
pub const DEFAULT_MERGE_ABOVE: usize = 4096;

/// Steps up to which the simulator keeps a trace without `--trace`.
const AUTO_TRACE_STEPS: usize = 32;
/// Largest multidistribution printed without `--trace`.
const AUTO_SHOW_ENTRIES: usize = 8;
const AUTO_SHOW_OUTCOMES: usize = 4;

#[derive(Debug, Parser)]
#[command(name = "ptrs", version, about = "Strong almost-sure termination prover and simulator for probabilistic term rewrite systems")]
pub struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// More log output; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[arg(long, global = true, value_enum, value_name = "WHEN")]
    pub color: Option<ColorMode>,
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a SAST certificate with an SMT solver.
    Prove(ProveArgs),
    /// Validate a given interpretation.
    Check(CheckArgs),
    /// Run multidistribution reduction.
    Simulate(SimulateArgs),
    /// Test the drift inequality of a certificate on random runs.
    Drift(DriftArgs),
}

#[derive(Debug, Args)]
pub struct ProveArgs {
    /// Problem file, or `-` for standard input.
    pub file: String,
    /// Solver command line (default `z3 -in`, or `$PTRS_SOLVER`).
    #[arg(long, value_name = "CMD")]
    pub solver: Option<String>,
    /// Comma-separated shapes, e.g. `poly-linear,matrix-2`.
    #[arg(long, value_name = "LIST")]
    pub shapes: Option<String>,
    #[arg(long, value_name = "B")]
    pub coeff_bound: Option<u32>,
    /// Per-shape solver timeout in seconds.
    #[arg(long, value_name = "SECONDS")]
    pub smt_timeout: Option<f64>,
    /// Run all shapes concurrently.
    #[arg(long)]
    pub parallel: bool,
    /// Write the SMT-LIB script(s) to this path.
    #[arg(long, value_name = "PATH")]
    pub emit_smt: Option<PathBuf>,
    /// Validate this certificate instead of searching.
    #[arg(long, value_name = "CERT")]
    pub check_only: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub file: String,
    #[arg(long, value_name = "CERT")]
    pub certificate: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Rw,
    Amd,
    An,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Exhaustive,
    Innermost,
    Outermost,
}

impl SimMode {
    fn name(self) -> &'static str {
        match self {
            SimMode::Exhaustive => "exhaustive",
            SimMode::Innermost => "innermost",
            SimMode::Outermost => "outermost",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Problem file; requires `--start`.
    #[arg(required_unless_present = "family", conflicts_with = "family")]
    pub file: Option<String>,
    /// Built-in system.
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Probability of stepping down in the random walk.
    #[arg(long, default_value = "1/2")]
    pub p: String,
    /// Start term or object.
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = SimMode::Exhaustive)]
    pub mode: SimMode,
    /// Certificate whose bound `E(f(μ0))/ε` is checked at every step.
    #[arg(long, value_name = "CERT")]
    pub cert: Option<PathBuf>,
    /// Print every step's multidistributions.
    #[arg(long)]
    pub trace: bool,
    /// Object bound of the infinite families.
    #[arg(long)]
    pub truncate: Option<u64>,
    /// Node budget of exhaustive expansion.
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    pub budget: usize,
    /// Never merge equal objects.
    #[arg(long)]
    pub no_merge: bool,
}

#[derive(Debug, Args)]
pub struct DriftArgs {
    pub file: String,
    #[arg(long, value_name = "CERT")]
    pub certificate: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Output streams and terminal status for one invocation.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub out_is_tty: bool,
}

struct Settings {
    json: bool,
    color: bool,
    config: ConfigFile,
}

struct Failure(String);

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {path}: {e}")))
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

fn load_problem(path: &str) -> Result<(ProblemFile, Ptrs), Failure> {
    let text = read_input(path)?;
    let pf = parse_problem(&text).map_err(|e| Failure(format!("{path}: {e}")))?;
    let ptrs = pf.elaborate().map_err(|e| Failure(format!("{path}: {e}")))?;
    Ok((pf, ptrs))
}

fn load_certificate(path: &Path, ptrs: &Ptrs) -> Result<Certificate, Failure> {
    let interp = parse_certificate(&read_file(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    check_certificate(&interp, ptrs).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn parse_shapes(list: &str) -> Result<Vec<Shape>, Failure> {
    let shapes = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Shape>().map_err(|e| Failure(format!("--shapes: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if shapes.is_empty() {
        return Err(Failure(String::from("--shapes: empty list")));
    }
    Ok(shapes)
}

fn prover_config(args: &ProveArgs, file: &ConfigFile) -> Result<ProverConfig, Failure> {
    let env = std::env::var(SOLVER_ENV).ok();
    let solver_line = args
        .solver
        .clone()
        .or_else(|| file.solver.clone())
        .or(env)
        .unwrap_or_else(|| DEFAULT_SOLVER.to_string());
    let solver = SolverCommand::parse(&solver_line).ok_or_else(|| Failure(String::from("empty solver command")))?;
    let shapes = match args.shapes.as_ref().or(file.shapes.as_ref()) {
        Some(list) => parse_shapes(list)?,
        None => Shape::default_portfolio(),
    };
    let timeout = match args.smt_timeout.or(file.smt_timeout) {
        Some(s) if s.is_finite() && s > 0.0 => Duration::from_secs_f64(s),
        Some(s) => return Err(Failure(format!("--smt-timeout must be positive, found {s}"))),
        None => DEFAULT_TIMEOUT,
    };
    Ok(ProverConfig {
        shapes,
        solver,
        timeout,
        coeff_bound: args.coeff_bound.or(file.coeff_bound).unwrap_or(DEFAULT_COEFF_BOUND),
        parallel: args.parallel || file.parallel.unwrap_or(false),
        emit_smt: args.emit_smt.clone(),
    })
}

fn paint(word: &str, on: bool) -> String {
    if !on {
        return word.to_string();
    }
    let code = match word {
        "YES" | "PASS" => "32",
        "MAYBE" => "33",
        _ => "31",
    };
    format!("\x1b[1;{code}m{word}\x1b[0m")
}

fn write_json(io: &mut Io<'_>, value: &impl Serialize) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *io.out, value)?;
    writeln!(io.out)?;
    Ok(())
}

fn emit_verdict(io: &mut Io<'_>, s: &Settings, verdict: &Verdict, ptrs: Option<&Ptrs>) -> Result<i32, Failure> {
    if s.json {
        match ptrs {
            Some(p) => write_json(io, &verdict_json(verdict, p))?,
            None => write_json(io, &ErrorJson::new(verdict.word(), &verdict.render(None)))?,
        }
    } else {
        let text = verdict.render(ptrs);
        let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
        writeln!(io.out, "{}", paint(first, s.color))?;
        write!(io.out, "{rest}")?;
    }
    Ok(verdict.exit_code())
}

#[derive(Serialize)]
struct ErrorJson {
    verdict: &'static str,
    error: String,
}

impl ErrorJson {
    fn new(verdict: &'static str, error: &str) -> Self {
        Self {
            verdict,
            error: error.trim().to_string(),
        }
    }
}

fn cmd_prove(args: &ProveArgs, io: &mut Io<'_>, s: &Settings) -> Result<i32, Failure> {
    let (ptrs, verdict) = match load_problem(&args.file) {
        Ok((_, ptrs)) => {
            let verdict = match &args.check_only {
                Some(cert) => {
                    let text = read_file(cert)?;
                    match parse_certificate(&text) {
                        Ok(interp) => check_only(&ptrs, &interp),
                        Err(e) => Verdict::Error(format!("{}: {e}", cert.display())),
                    }
                }
                None => prove(&ptrs, &prover_config(args, &s.config)?),
            };
            (Some(ptrs), verdict)
        }
        Err(Failure(msg)) => (None, Verdict::Error(msg)),
    };
    if let Verdict::Error(msg) = &verdict {
        writeln!(io.err, "error: {msg}")?;
    }
    emit_verdict(io, s, &verdict, ptrs.as_ref())
}

fn cmd_check(args: &CheckArgs, io: &mut Io<'_>, s: &Settings) -> Result<i32, Failure> {
    cmd_prove(
        &ProveArgs {
            file: args.file.clone(),
            solver: None,
            shapes: None,
            coeff_bound: None,
            smt_timeout: None,
            parallel: false,
            emit_smt: None,
            check_only: Some(args.certificate.clone()),
        },
        io,
        s,
    )
}

/// Exact when short, otherwise a decimal approximation marked with `~`.
fn short(q: &Rational) -> String {
    let exact = q.to_string();
    match q.to_f64() {
        Some(x) if exact.len() > 24 && x.abs() < 1e-4 => format!("~{x:.6e}"),
        Some(x) if exact.len() > 24 => format!("~{x:.12}"),
        _ => exact,
    }
}

fn cell(lo: &Rational, hi: &Rational) -> String {
    let (lo, hi) = (short(lo), short(hi));
    if lo == hi {
        lo
    } else {
        format!("{lo} .. {hi}")
    }
}

fn write_table<T: Clone + Ord + Display>(
    io: &mut Io<'_>,
    header: &str,
    report: &EdhReport<T>,
    force_trace: bool,
) -> Result<(), Failure> {
    let run = &report.run;
    writeln!(io.out, "{header}")?;
    let rows: Vec<[String; 4]> = run
        .records
        .iter()
        .map(|r| {
            [
                r.step.to_string(),
                cell(&r.mass_min, &r.mass_max),
                cell(&r.edl_min, &r.edl_max),
                r.outcomes.to_string(),
            ]
        })
        .collect();
    let titles = ["step", "mass", "edl", "outcomes"];
    let widths: Vec<usize> = (0..4)
        .map(|c| rows.iter().map(|r| r[c].len()).chain([titles[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cols: [&str; 4]| {
        let cells: Vec<String> = cols.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        cells.join("  ")
    };
    writeln!(io.out, "{}", line(titles))?;
    for (k, r) in rows.iter().enumerate() {
        writeln!(io.out, "{}", line([&r[0], &r[1], &r[2], &r[3]]))?;
        if let Some(mus) = run.trace.get(k) {
            let small = mus.len() <= AUTO_SHOW_OUTCOMES && mus.iter().all(|m| m.len() <= AUTO_SHOW_ENTRIES);
            if force_trace || small {
                for mu in mus {
                    writeln!(io.out, "      {mu}")?;
                }
            }
        }
    }
    if let Some(k) = run.truncated_at {
        writeln!(io.out, "note: truncation bound reached at step {k}; later masses are lower bounds")?;
    }
    if run.merged {
        writeln!(io.out, "note: equal objects were merged in large steps")?;
    }
    if let Some(b) = &report.bound {
        match report.exceeded_at {
            None => writeln!(io.out, "bound E(f)/epsilon = {b}: holds at every step")?,
            Some(k) => writeln!(io.out, "bound E(f)/epsilon = {b}: EXCEEDED at step {k}")?,
        }
    }
    Ok(())
}

fn simulate_pars<P: Pars>(
    pars: &P,
    start: MultiDistribution<P::Obj>,
    bound: Option<Rational>,
    system: &str,
    args: &SimulateArgs,
    io: &mut Io<'_>,
    s: &Settings,
) -> Result<i32, Failure> {
    let mode = match args.mode {
        SimMode::Exhaustive => Mode::Exhaustive { budget: args.budget },
        SimMode::Innermost => Mode::Strategy(Strategy::LeftmostInnermost),
        SimMode::Outermost => Mode::Strategy(Strategy::LeftmostOutermost),
    };
    let mut cfg = RunConfig::new(args.steps, mode).with_trace(args.trace || args.steps <= AUTO_TRACE_STEPS);
    if !args.no_merge {
        cfg = cfg.merging_above(DEFAULT_MERGE_ABOVE);
    }
    let report = estimate_edh(pars, &start, &cfg, bound)?;
    if s.json {
        let mut json = simulation_json(system, args.mode.name(), &report);
        if !args.trace {
            json.steps.iter_mut().for_each(|st| st.multidistributions = None);
        }
        write_json(io, &json)?;
    } else {
        let header = format!("system {system}, mode {}, start {start}", args.mode.name());
        write_table(io, &header, &report, args.trace)?;
    }
    Ok(if report.within_bound() { 0 } else { 1 })
}

fn cmd_simulate(args: &SimulateArgs, io: &mut Io<'_>, s: &Settings) -> Result<i32, Failure> {
    if args.steps == 0 {
        return Err(Failure(String::from("--steps must be at least 1")));
    }
    if let Some(path) = &args.file {
        let (_, ptrs) = load_problem(path)?;
        let text = args
            .start
            .as_deref()
            .ok_or_else(|| Failure(String::from("simulating a file needs --start TERM")))?;
        let term = parse_term(text, &[], &ptrs).map_err(|e| Failure(format!("--start: {e}")))?;
        let start = MultiDistribution::point(term);
        let bound = match &args.cert {
            Some(c) => {
                let cert = load_certificate(c, &ptrs)?;
                Some(certificate_bound(&cert, &start)?)
            }
            None => None,
        };
        return simulate_pars(&ptrs, start, bound, path, args, io, s);
    }
    if args.cert.is_some() {
        return Err(Failure(String::from("--cert needs a problem file")));
    }
    match args.family.expect("clap requires a file or a family") {
        Family::Rw => {
            let p = parse_rational(&args.p).ok_or_else(|| Failure(format!("--p: bad probability `{}`", args.p)))?;
            let walk = RandomWalk::new(p.clone(), args.truncate.unwrap_or(u64::MAX - 1))
                .ok_or_else(|| Failure(format!("--p: {p} is not in [0, 1]")))?;
            let n: u64 = args
                .start
                .as_deref()
                .unwrap_or("1")
                .parse()
                .map_err(|e| Failure(format!("--start: {e}")))?;
            simulate_pars(&walk, MultiDistribution::point(n), None, &format!("rw({p})"), args, io, s)
        }
        Family::Amd => {
            let obj = args.start.as_deref().unwrap_or("a").parse().map_err(Failure)?;
            simulate_pars(&Amd, MultiDistribution::point(obj), None, "amd", args, io, s)
        }
        Family::An => {
            let obj: AnObj = args.start.as_deref().unwrap_or("a0").parse().map_err(Failure)?;
            let bound = args.truncate.map_or(AN_MAX_INDEX, |t| t.min(u64::from(AN_MAX_INDEX)) as u32);
            simulate_pars(&AnFamily::new(bound), MultiDistribution::point(obj), None, "an", args, io, s)
        }
    }
}

fn cmd_drift(args: &DriftArgs, io: &mut Io<'_>, s: &Settings) -> Result<i32, Failure> {
    let (_, ptrs) = load_problem(&args.file)?;
    let cert = load_certificate(&args.certificate, &ptrs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let result = drift_harness(&ptrs, &cert, args.trials, args.depth, &mut rng);
    if s.json {
        write_json(io, &drift_json(&cert.epsilon().to_string(), args.trials, &result))?;
    } else {
        match &result {
            Ok(sum) => {
                writeln!(io.out, "{}", paint("PASS", s.color))?;
                writeln!(
                    io.out,
                    "# {} trials, {} steps checked, epsilon = {}",
                    sum.trials,
                    sum.steps_checked,
                    cert.epsilon()
                )?;
            }
            Err(v) => {
                writeln!(io.out, "{}", paint("FAIL", s.color))?;
                writeln!(io.out, "# start  {}", v.start)?;
                writeln!(io.out, "# step {}: {}", v.step, v.before)?;
                writeln!(io.out, "#   ->    {}", v.after)?;
                writeln!(io.out, "# E(f(mu)) = {} < E(f(nu)) + epsilon*|nu| = {}", v.expected_before, v.required)?;
            }
        }
    }
    Ok(if result.is_ok() { 0 } else { 1 })
}

/// Log level for a verbosity count.
pub fn log_level(verbose: u8) -> log::LevelFilter {
    match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    }
}

/// Loads the configuration file named by `--config`, if any.
pub fn load_config(cli: &Cli) -> Result<ConfigFile, String> {
    match &cli.config {
        None => Ok(ConfigFile::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ConfigFile::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
        }
    }
}

/// Runs a parsed command line and returns the exit code.
pub fn execute(cli: &Cli, config: ConfigFile, io: &mut Io<'_>) -> i32 {
    let settings = Settings {
        json: cli.json || config.json.unwrap_or(false),
        color: cli.color.or(config.color).unwrap_or_default().enabled(io.out_is_tty),
        config,
    };
    let result = match &cli.command {
        Command::Prove(a) => cmd_prove(a, io, &settings),
        Command::Check(a) => cmd_check(a, io, &settings),
        Command::Simulate(a) => cmd_simulate(a, io, &settings),
        Command::Drift(a) => cmd_drift(a, io, &settings),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            if settings.json {
                let _ = write_json(io, &ErrorJson::new("ERROR", &msg));
            }
            let _ = writeln!(io.err, "error: {msg}");
            2
        }
    }
}

/// Parses `args` (including the program name) and runs them. Usage errors
/// print the synopsis to `io.err` and return 2.
pub fn run<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(io.err, "{rendered}")
            } else {
                write!(io.out, "{rendered}")
            };
            return code;
        }
    };
    match load_config(&cli) {
        Ok(config) => execute(&cli, config, io),
        Err(msg) => {
            let _ = writeln!(io.err, "error: {msg}");
            2
        }
    }
}
