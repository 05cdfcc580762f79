use std::io::{self, IsTerminal, Write};
use std::process::ExitCode;

use clap::Parser;
use ptrs::cli::{execute, load_config, log_level, Cli, Io};

/// Drops output once the reader has gone away, as in `ptrs ... | head`.
struct ClosedPipeIsFine<W>(W);

impl<W: Write> Write for ClosedPipeIsFine<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self.0.write(buf) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(buf.len()),
            r => r,
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self.0.flush() {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            r => r,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let verbose = cli.verbose.max(config.verbose.unwrap_or(0));
    env_logger::Builder::new()
        .filter_level(log_level(verbose))
        .parse_env("PTRS_LOG")
        .init();
    let mut out = ClosedPipeIsFine(io::stdout().lock());
    let mut err = io::stderr();
    let mut io = Io {
        out_is_tty: io::stdout().is_terminal(),
        out: &mut out,
        err: &mut err,
    };
    let code = execute(&cli, config, &mut io);
    ExitCode::from(code as u8)
}
