//! Front end for the `lowner` binary: configuration, dispatch and artifacts.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails, 2 for
//! configuration errors, 3 for numerical failures. A JSON summary (`summary.json`,
//! `"schema": 1`) is written in every case where the output directory is usable.

pub mod args;
mod commands;
pub mod config;
pub mod golden;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use lowner::coulomb::CoulombError;
use lowner::faber_grunsky::GrunskyError;
use lowner::loewner::LoewnerError;
use lowner::reduction::ReductionError;
use serde::Serialize;

use crate::args::Cli;
use crate::config::{RunConfig, Subcommand, SCHEMA};
use crate::output::Outputs;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const OUT_DIR_ENV: &str = "LOWNER_OUT_DIR";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn status(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config_error",
            Failure::Numeric(_) => "numeric_error",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("cannot write output: {e}"))
    }
}

impl From<LoewnerError> for Failure {
    fn from(e: LoewnerError) -> Self {
        match e {
            LoewnerError::StepRejected { .. } | LoewnerError::Series(_) => {
                Failure::Numeric(e.to_string())
            }
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<GrunskyError> for Failure {
    fn from(e: GrunskyError) -> Self {
        match e {
            GrunskyError::Series(_) | GrunskyError::RouteMismatch(_) | GrunskyError::Divergent => {
                Failure::Numeric(e.to_string())
            }
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<ReductionError> for Failure {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Loewner(l) => l.into(),
            ReductionError::Grunsky(g) => g.into(),
            ReductionError::InvalidTimes(_) | ReductionError::Unsupported(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<CoulombError> for Failure {
    fn from(e: CoulombError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<lowner::SeriesError> for Failure {
    fn from(e: lowner::SeriesError) -> Self {
        Failure::Numeric(e.to_string())
    }
}

/// One pass/fail line of a summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value < tolerance`.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value < tolerance,
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: u32,
    subcommand: &'a str,
    status: &'a str,
    exit_code: i32,
    error: Option<&'a str>,
    checks: &'a [Check],
    result: &'a serde_json::Value,
    artifacts: &'a [String],
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.global
        .out_dir
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.dir.clone()))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("lowner-out"))
}

/// Parses `args` (including the program name), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let sub = commands::subcommand_of(&cli.command);
    let cfg = commands::load_config(&cli, sub);
    let mut outputs = Outputs::new(out_dir(&cli, cfg.as_ref().ok()));
    let outcome = cfg.and_then(|cfg| commands::dispatch(&cfg, &mut outputs));
    finish(sub, outcome, &mut outputs)
}

fn finish(sub: Subcommand, outcome: Result<Outcome, Failure>, outputs: &mut Outputs) -> i32 {
    let (code, status, error, outcome) = match outcome {
        Ok(o) if o.checks.iter().all(|c| c.pass) => (EXIT_OK, "ok", None, o),
        Ok(o) => (EXIT_CHECK_FAILED, "check_failed", None, o),
        Err(f) => (f.exit_code(), f.status(), Some(f), Outcome::default()),
    };
    if let Some(f) = &error {
        eprintln!("lowner {}: {}", sub.name(), f.message());
    }
    for c in outcome.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} = {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
    }
    let mut artifacts = outputs.written.clone();
    artifacts.push(SUMMARY_FILE.to_string());
    let summary = Summary {
        schema: SCHEMA,
        subcommand: sub.name(),
        status,
        exit_code: code,
        error: error.as_ref().map(|f| f.message()),
        checks: &outcome.checks,
        result: &outcome.result,
        artifacts: &artifacts,
    };
    match outputs.write_json(SUMMARY_FILE, &summary) {
        Ok(()) => {
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            code
        }
        Err(e) => {
            eprintln!("lowner: cannot write {SUMMARY_FILE} in {}: {e}", outputs.dir.display());
            if code == EXIT_OK {
                EXIT_CONFIG
            } else {
                code
            }
        }
    }
}
