//! End-to-end runs of the command line against the canned solver.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ptrs::cli::{run, Io};
use serde_json::Value;

const FAKE: &str = env!("CARGO_BIN_EXE_ptrs-fake-smt");
const PTRS: &str = env!("CARGO_BIN_EXE_ptrs");

fn system(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../systems").join(name).display().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ptrs-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

struct Output {
    code: i32,
    out: String,
    err: String,
}

fn ptrs(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut io = Io {
        out: &mut out,
        err: &mut err,
        out_is_tty: false,
    };
    let code = run(std::iter::once("ptrs").chain(args.iter().copied()), &mut io);
    Output {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn fake(flags: &str) -> String {
    format!("{FAKE} {flags}")
}

const RW_MODEL: &str = "--model f0_c=0,f1_c=1,f1_x1=1";

fn validator() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/ptrs-output.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn json(o: &Output) -> Value {
    let v: Value = serde_json::from_str(&o.out).unwrap_or_else(|e| panic!("{e}: {}", o.out));
    let errors: Vec<String> = validator().iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}\n{}", o.out);
    v
}

#[test]
fn fake_model_decodes_to_half_epsilon() {
    let solver = fake(RW_MODEL);
    let o = ptrs(&["prove", &system("rw34.wst"), "--shapes", "poly-linear", "--solver", &solver]);
    assert_eq!(o.code, 0, "{}{}", o.out, o.err);
    assert!(o.out.starts_with("YES\n"));
    assert!(o.out.contains("[s](x) = x + 1"));
    assert!(o.out.contains("epsilon = 1/2"));
}

#[test]
fn invalid_model_is_an_error() {
    let solver = fake("--model f0_c=0,f1_c=0,f1_x1=1");
    let o = ptrs(&["prove", &system("rw34.wst"), "--shapes", "poly-linear", "--solver", &solver]);
    assert_eq!(o.code, 2, "{}", o.out);
    assert!(o.out.starts_with("ERROR"));
}

#[test]
fn unsat_and_unknown_are_maybe() {
    for answer in ["unsat", "unknown"] {
        let solver = fake(&format!("--answer {answer}"));
        let o = ptrs(&["prove", &system("rw14.wst"), "--solver", &solver]);
        assert_eq!(o.code, 1, "{answer}: {}", o.out);
        assert!(o.out.starts_with("MAYBE\n"));
        for shape in ["poly-linear", "poly-multilinear-2", "matrix-2", "matrix-3"] {
            assert!(o.out.contains(&format!("# {shape}:")), "{}", o.out);
        }
    }
}

#[test]
fn missing_solver_is_an_error() {
    let o = ptrs(&["prove", &system("rw34.wst"), "--solver", "/nonexistent/solver"]);
    assert_eq!(o.code, 2);
    assert!(o.out.starts_with("ERROR"));
}

#[test]
fn emitted_scripts_are_byte_stable() {
    let one = scratch("one.smt2");
    let two = scratch("two.smt2");
    let rec = scratch("received.smt2");
    let solver = fake(&format!("{RW_MODEL} --record {}", rec.display()));
    for path in [&one, &two] {
        let o = ptrs(&["prove", &system("rw34.wst"), "--shapes", "poly-linear", "--solver", &solver, "--emit-smt", &path.display().to_string()]);
        assert_eq!(o.code, 0);
    }
    let a = std::fs::read(&one).unwrap();
    assert_eq!(a, std::fs::read(&two).unwrap());
    assert_eq!(a, std::fs::read(&rec).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("(set-logic QF_NIA)"));
    for name in ["f0_c", "f1_c", "f1_x1"] {
        assert!(text.contains(&format!("(declare-const {name} Int)")), "{text}");
    }
    assert!(text.contains("(check-sat)"));
}

#[test]
fn several_shapes_get_separate_scripts() {
    let base = scratch("multi.smt2");
    let solver = fake("--answer unsat");
    let o = ptrs(&["prove", &system("rw34.wst"), "--shapes", "poly-linear,matrix-2", "--solver", &solver, "--emit-smt", &base.display().to_string()]);
    assert_eq!(o.code, 1);
    let linear = std::fs::read_to_string(scratch("multi.poly-linear.smt2")).unwrap();
    let matrix = std::fs::read_to_string(scratch("multi.matrix-2.smt2")).unwrap();
    assert!(linear.contains("f1_x1") && !linear.contains("f1_m1_11"));
    assert!(matrix.contains("f1_m1_11"));
}

#[test]
fn yes_output_rechecks() {
    let solver = fake(RW_MODEL);
    let o = ptrs(&["prove", &system("rw34.wst"), "--shapes", "poly-linear", "--solver", &solver]);
    let cert = scratch("roundtrip.cert");
    std::fs::write(&cert, o.out.lines().skip(1).collect::<Vec<_>>().join("\n")).unwrap();
    let c = ptrs(&["check", &system("rw34.wst"), "--certificate", &cert.display().to_string()]);
    assert_eq!(c.code, 0, "{}{}", c.out, c.err);
    assert!(c.out.contains("epsilon = 1/2"));
}

#[test]
fn shipped_certificates_check() {
    for (wst, cert, margins) in [
        ("rw34.wst", "rw34.cert", vec!["margin 1/2"]),
        ("coin.wst", "coin.cert", vec!["margin 1/2", "margin 8", "margin 2", "margin 2"]),
        ("ab_matrix.wst", "ab.cert", vec!["margin 1/2"]),
    ] {
        let o = ptrs(&["check", &system(wst), "--certificate", &system(cert)]);
        assert_eq!(o.code, 0, "{wst}: {}{}", o.out, o.err);
        let found: Vec<&str> = o.out.lines().filter_map(|l| l.split("   ").nth(1)).collect();
        assert_eq!(found, margins, "{wst}");
        let alias = ptrs(&["prove", &system(wst), "--check-only", &system(cert)]);
        assert_eq!(alias.out, o.out);
    }
}

#[test]
fn zero_margin_is_maybe() {
    let cert = scratch("flat.cert");
    std::fs::write(&cert, "[s](x) = x\n[0] = 0\n").unwrap();
    let o = ptrs(&["check", &system("rw34.wst"), "--certificate", &cert.display().to_string()]);
    assert_eq!(o.code, 1);
    assert!(o.out.starts_with("MAYBE"));
    assert!(o.out.contains("s(x)"), "{}", o.out);
}

#[test]
fn simulate_reproduces_the_fair_walk() {
    let o = ptrs(&["simulate", "--family", "rw", "--p", "1/2", "--start", "1", "--steps", "3", "--trace"]);
    assert_eq!(o.code, 0, "{}", o.err);
    for md in ["{1/2: 0, 1/2: 2}", "{1/4: 1, 1/4: 3}", "{1/8: 0, 1/8: 2, 1/8: 2, 1/8: 4}"] {
        assert!(o.out.contains(md), "{md} missing from\n{}", o.out);
    }
    let v = json(&ptrs(&["--json", "simulate", "--family", "rw", "--steps", "3"]));
    let masses: Vec<&str> = v["steps"].as_array().unwrap().iter().map(|s| s["mass_max"].as_str().unwrap()).collect();
    assert_eq!(masses, ["1", "1", "1/2", "1/2"]);
}

#[test]
fn simulate_amd_has_three_outcomes() {
    let v = json(&ptrs(&["--json", "simulate", "--family", "amd", "--steps", "3"]));
    assert_eq!(v["steps"][3]["outcomes"], 3);
}

#[test]
fn simulate_with_certificate_bound() {
    let o = ptrs(&["simulate", &system("rw34.wst"), "--start", "s(s(0))", "--mode", "innermost", "--steps", "40", "--cert", &system("rw34.cert")]);
    assert_eq!(o.code, 0, "{}{}", o.out, o.err);
    assert!(o.out.contains("bound"), "{}", o.out);
}

#[test]
fn json_outputs_follow_the_schema() {
    let solver = fake(RW_MODEL);
    let yes = json(&ptrs(&["--json", "prove", &system("rw34.wst"), "--shapes", "poly-linear", "--solver", &solver]));
    assert_eq!(yes["verdict"], "YES");
    assert_eq!(yes["certificate"]["epsilon"], "1/2");
    let maybe = json(&ptrs(&["--json", "prove", &system("rw14.wst"), "--solver", &fake("--answer unsat")]));
    assert_eq!(maybe["verdict"], "MAYBE");
    assert_eq!(maybe["attempts"].as_array().unwrap().len(), 4);
    let matrix = json(&ptrs(&["--json", "check", &system("ab_matrix.wst"), "--certificate", &system("ab.cert")]));
    assert_eq!(matrix["certificate"]["kind"], "matrix");
    assert_eq!(matrix["certificate"]["dimension"], 2);
    let drift = json(&ptrs(&["--json", "drift", &system("coin.wst"), "--certificate", &system("coin.cert"), "--trials", "10"]));
    assert_eq!(drift["verdict"], "pass");
    let error = json(&ptrs(&["--json", "check", "/nonexistent.wst", "--certificate", &system("rw34.cert")]));
    assert_eq!(error["verdict"], "ERROR");
    let sim = json(&ptrs(&["--json", "simulate", "--family", "an", "--steps", "4", "--trace"]));
    assert!(sim["steps"].as_array().unwrap().len() == 5);
}

#[test]
fn drift_passes_for_shipped_certificates() {
    for (wst, cert) in [("rw34.wst", "rw34.cert"), ("coin.wst", "coin.cert"), ("ab_matrix.wst", "ab.cert")] {
        let o = ptrs(&["drift", &system(wst), "--certificate", &system(cert), "--trials", "20"]);
        assert_eq!(o.code, 0, "{wst}: {}{}", o.out, o.err);
        assert!(o.out.starts_with("PASS"));
    }
}

#[test]
fn config_file_and_flags() {
    let cfg = scratch("ptrs.conf");
    std::fs::write(&cfg, format!("# prover settings\nsolver = {} {RW_MODEL}\nshapes = poly-linear\njson = true\n", FAKE)).unwrap();
    let cfg = cfg.display().to_string();
    let v = json(&ptrs(&["--config", &cfg, "prove", &system("rw34.wst")]));
    assert_eq!(v["verdict"], "YES");
    // the flag beats the file
    let o = ptrs(&["--config", &cfg, "prove", &system("rw34.wst"), "--solver", &fake("--answer unsat")]);
    assert_eq!(o.code, 1);
    let bad = scratch("bad.conf");
    std::fs::write(&bad, "colour = always\n").unwrap();
    let o = ptrs(&["--config", &bad.display().to_string(), "check", &system("rw34.wst"), "--certificate", &system("rw34.cert")]);
    assert_eq!(o.code, 2);
    assert!(o.err.contains("line 1"), "{}", o.err);
}

#[test]
fn solver_from_environment() {
    let with_env = |args: &[&str]| {
        Command::new(PTRS)
            .args(args)
            .env("PTRS_SOLVER", fake(RW_MODEL))
            .output()
            .unwrap()
    };
    let o = with_env(&["prove", &system("rw34.wst"), "--shapes", "poly-linear"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = with_env(&["prove", &system("rw34.wst"), "--shapes", "poly-linear", "--solver", &fake("--answer unsat")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ptrs(&["prove"]).code, 2);
    assert_eq!(ptrs(&["simulate", "--family", "rw", "--mode", "sideways"]).code, 2);
    assert_eq!(ptrs(&["prove", &system("rw34.wst"), "--shapes", "cubic"]).code, 2);
    assert_eq!(ptrs(&["prove", &system("rw34.wst"), "--smt-timeout", "-1"]).code, 2);
    assert_eq!(ptrs(&["--help"]).code, 0);
}

#[test]
fn timeouts_are_maybe() {
    let start = Instant::now();
    let o = ptrs(&["prove", &system("rw34.wst"), "--shapes", "poly-linear,matrix-2", "--smt-timeout", "0.3", "--solver", &fake("--sleep-ms 5000")]);
    assert_eq!(o.code, 1, "{}", o.out);
    assert!(o.out.contains("poly-linear: timeout") || o.out.contains("time"), "{}", o.out);
    assert!(start.elapsed() < Duration::from_secs(4));
}

#[test]
fn parallel_portfolio_stops_at_first_proof() {
    let slow_then_fast = scratch("race.sh");
    std::fs::write(
        &slow_then_fast,
        format!("#!/bin/sh\nscript=$(cat)\ncase \"$script\" in\n  *f1_m1_11*) sleep 5; echo unknown ;;\n  *) printf '%s' \"$script\" | {FAKE} {RW_MODEL} ;;\nesac\n"),
    )
    .unwrap();
    let start = Instant::now();
    let o = ptrs(&["prove", &system("rw34.wst"), "--shapes", "matrix-2,poly-linear", "--parallel", "--solver", &format!("sh {}", slow_then_fast.display())]);
    assert_eq!(o.code, 0, "{}", o.out);
    assert!(o.out.contains("# shape poly-linear"));
    assert!(start.elapsed() < Duration::from_secs(4), "{:?}", start.elapsed());
}
