//! Canned SMT solver for tests: reads a script on standard input and replies
//! with a fixed answer in z3's output format.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Answer {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Parser)]
#[command(name = "ptrs-fake-smt")]
struct Args {
    #[arg(long, value_enum, default_value_t = Answer::Sat)]
    answer: Answer,
    /// `name=value` pairs, comma separated.
    #[arg(long, default_value = "")]
    model: String,
    /// Value for declared constants missing from `--model`.
    #[arg(long)]
    default: Option<i64>,
    /// Copy the received script to this file.
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    sleep_ms: u64,
    #[arg(long, default_value_t = 0)]
    exit: u8,
}

fn declared(script: &str) -> Vec<String> {
    script
        .lines()
        .filter_map(|l| l.trim().strip_prefix("(declare-const "))
        .filter_map(|rest| rest.split_whitespace().next())
        .map(String::from)
        .collect()
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut script = String::new();
    if std::io::stdin().read_to_string(&mut script).is_err() {
        return ExitCode::from(3);
    }
    if let Some(path) = &args.record {
        if let Err(e) = std::fs::write(path, &script) {
            eprintln!("cannot record script: {e}");
            return ExitCode::from(3);
        }
    }
    std::thread::sleep(Duration::from_millis(args.sleep_ms));
    match args.answer {
        Answer::Unsat => println!("unsat\n(error \"line 1 column 1: model is not available\")"),
        Answer::Unknown => println!("unknown"),
        Answer::Sat => {
            let mut model: BTreeMap<String, i64> = BTreeMap::new();
            if let Some(d) = args.default {
                model.extend(declared(&script).into_iter().map(|n| (n, d)));
            }
            for pair in args.model.split(',').filter(|p| !p.trim().is_empty()) {
                let Some((name, value)) = pair.split_once('=') else {
                    eprintln!("bad model entry `{pair}`");
                    return ExitCode::from(3);
                };
                let Ok(v) = value.trim().parse() else {
                    eprintln!("bad model value `{value}`");
                    return ExitCode::from(3);
                };
                model.insert(name.trim().to_string(), v);
            }
            println!("sat\n(");
            for (name, v) in &model {
                let lit = if *v < 0 { format!("(- {})", -v) } else { v.to_string() };
                println!("  (define-fun {name} () Int\n    {lit})");
            }
            println!(")");
        }
    }
    ExitCode::from(args.exit)
}
