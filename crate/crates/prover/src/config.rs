//! `key = value` configuration files. Command-line flags take precedence.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ColorMode {
    #[default]
    Auto,
    Always,
    Never,
}

impl ColorMode {
    pub fn enabled(self, is_tty: bool) -> bool {
        match self {
            ColorMode::Always => true,
            ColorMode::Never => false,
            ColorMode::Auto => is_tty && std::env::var_os("NO_COLOR").is_none(),
        }
    }
}

impl FromStr for ColorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(ColorMode::Auto),
            "always" | "on" | "true" => Ok(ColorMode::Always),
            "never" | "off" | "false" => Ok(ColorMode::Never),
            _ => Err(format!("expected auto, always or never, found `{s}`")),
        }
    }
}

impl fmt::Display for ColorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColorMode::Auto => "auto",
            ColorMode::Always => "always",
            ColorMode::Never => "never",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub solver: Option<String>,
    pub shapes: Option<String>,
    pub coeff_bound: Option<u32>,
    /// Seconds.
    pub smt_timeout: Option<f64>,
    pub parallel: Option<bool>,
    pub color: Option<ColorMode>,
    pub verbose: Option<u8>,
    pub json: Option<bool>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("config line {line}: {msg}")]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, found `{v}`")),
    }
}

fn parse_value<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e| format!("bad value `{v}`: {e}"))
}

impl ConfigFile {
    /// Blank lines and lines starting with `#` are ignored. Keys may use
    /// `-` or `_`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ConfigFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| ConfigError { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let value = value.trim();
            match key.trim().replace('_', "-").as_str() {
                "solver" => cfg.solver = Some(value.to_string()),
                "shapes" => cfg.shapes = Some(value.to_string()),
                "coeff-bound" => cfg.coeff_bound = Some(parse_value(value).map_err(err)?),
                "smt-timeout" => {
                    let s: f64 = parse_value(value).map_err(err)?;
                    if !(s.is_finite() && s > 0.0) {
                        return Err(err(format!("timeout must be positive, found `{value}`")));
                    }
                    cfg.smt_timeout = Some(s);
                }
                "parallel" => cfg.parallel = Some(parse_bool(value).map_err(err)?),
                "color" => cfg.color = Some(value.parse().map_err(err)?),
                "verbose" => cfg.verbose = Some(parse_value(value).map_err(err)?),
                "json" => cfg.json = Some(parse_bool(value).map_err(err)?),
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }
}
