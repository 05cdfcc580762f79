//! One-shot external solver processes: write the whole script, read the
//! whole answer.

use std::io::{Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::smt::{parse_response, ResponseError, SolverAnswer};

/// Command used when neither `--solver` nor `PTRS_SOLVER` is given.
pub const DEFAULT_SOLVER: &str = "z3 -in";

const POLL: Duration = Duration::from_millis(5);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl SolverCommand {
    /// Splits a command line at whitespace.
    pub fn parse(line: &str) -> Option<Self> {
        let mut words = line.split_whitespace().map(String::from);
        let program = words.next()?;
        Some(Self {
            program,
            args: words.collect(),
        })
    }
}

impl std::fmt::Display for SolverCommand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.program)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverOutcome {
    Answer(SolverAnswer),
    TimedOut,
    Cancelled,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("cannot start solver `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("solver `{command}` exited with {status} without an answer{}", stderr_suffix(.stderr))]
    Exit {
        command: String,
        status: String,
        stderr: String,
    },
    #[error("solver `{command}`: {source}")]
    Response {
        command: String,
        source: ResponseError,
    },
    #[error("solver I/O: {0}")]
    Io(#[from] std::io::Error),
}

fn stderr_suffix(stderr: &str) -> String {
    let s = stderr.trim();
    if s.is_empty() {
        String::new()
    } else {
        format!(": {}", s.lines().next().unwrap_or(s))
    }
}

fn kill_and_reap(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

/// Runs `script` through the solver. The process is killed and reaped on
/// timeout or when `cancel` becomes true.
pub fn run_solver(
    cmd: &SolverCommand,
    script: &str,
    timeout: Duration,
    cancel: Option<&AtomicBool>,
) -> Result<SolverOutcome, SolverError> {
    let command = cmd.to_string();
    let mut child = Command::new(&cmd.program)
        .args(&cmd.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| SolverError::Spawn {
            command: command.clone(),
            source,
        })?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let script = script.to_owned();
    let writer = thread::spawn(move || {
        // a solver that exits early closes the pipe; its answer decides
        let _ = stdin.write_all(script.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });

    let start = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if cancel.is_some_and(|c| c.load(Ordering::SeqCst)) {
            kill_and_reap(&mut child);
            return Ok(SolverOutcome::Cancelled);
        }
        if start.elapsed() >= timeout {
            kill_and_reap(&mut child);
            log::info!("solver `{command}` timed out after {timeout:?}");
            return Ok(SolverOutcome::TimedOut);
        }
        thread::sleep(POLL);
    };
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    log::debug!("solver `{command}` exited with {status}");

    match parse_response(&out) {
        Ok(answer) => Ok(SolverOutcome::Answer(answer)),
        Err(ResponseError::NoAnswer(_)) if !status.success() => Err(SolverError::Exit {
            command,
            status: status.to_string(),
            stderr: err,
        }),
        Err(source) => Err(SolverError::Response { command, source }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str) -> SolverCommand {
        SolverCommand {
            program: String::from("sh"),
            args: vec![String::from("-c"), script.to_string()],
        }
    }

    const LONG: Duration = Duration::from_secs(10);

    #[test]
    fn parses_command_lines() {
        let c = SolverCommand::parse("  z3   -in -T:5 ").unwrap();
        assert_eq!(c.program, "z3");
        assert_eq!(c.args, vec!["-in", "-T:5"]);
        assert_eq!(c.to_string(), "z3 -in -T:5");
        assert!(SolverCommand::parse("   ").is_none());
    }

    #[test]
    fn answers() {
        let out = run_solver(&sh("cat > /dev/null; echo unsat; exit 1"), "(check-sat)", LONG, None).unwrap();
        assert_eq!(out, SolverOutcome::Answer(SolverAnswer::Unsat));
        let out = run_solver(
            &sh("cat > /dev/null; printf 'sat\\n((define-fun u () Int 2))\\n'"),
            "(check-sat)",
            LONG,
            None,
        )
        .unwrap();
        let SolverOutcome::Answer(SolverAnswer::Sat(m)) = out else { panic!("{out:?}") };
        assert_eq!(m["u"], 2.into());
    }

    #[test]
    fn timeout_kills() {
        let start = Instant::now();
        let out = run_solver(&sh("sleep 30"), "", Duration::from_millis(100), None).unwrap();
        assert_eq!(out, SolverOutcome::TimedOut);
        assert!(start.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn cancellation() {
        let flag = AtomicBool::new(true);
        let out = run_solver(&sh("sleep 30"), "", LONG, Some(&flag)).unwrap();
        assert_eq!(out, SolverOutcome::Cancelled);
    }

    #[test]
    fn failures() {
        let missing = SolverCommand::parse("definitely-not-a-solver-binary").unwrap();
        assert!(matches!(run_solver(&missing, "", LONG, None), Err(SolverError::Spawn { .. })));
        let crash = run_solver(&sh("echo boom >&2; exit 3"), "", LONG, None).unwrap_err();
        assert!(matches!(crash, SolverError::Exit { .. }));
        assert!(crash.to_string().ends_with(": boom"));
        let garbage = run_solver(&sh("echo '(error \"parse\")'"), "", LONG, None).unwrap_err();
        assert!(matches!(garbage, SolverError::Response { .. }));
    }
}
