//! `binormal-lab`: command-line access to the profiles, their traces at
//! infinity, the scattering problems and the figure data.

pub mod commands;
pub mod config;
pub mod figures;
pub mod output;
pub mod plot;

use clap::Parser;
use config::{Cli, Command, RunConfig};
use output::OutDir;
use serde_json::json;
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

pub const THREADS_ENV: &str = "BINORMAL_LAB_THREADS";
pub const DEFAULT_OUT: &str = "binormal-out";

#[derive(Debug)]
pub enum RunError {
    Validation(String),
    Numerical(binormal_core::Error),
    Io(anyhow::Error),
}

impl From<binormal_core::Error> for RunError {
    fn from(e: binormal_core::Error) -> Self {
        RunError::Numerical(e)
    }
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Io(e)
    }
}

fn core_kind(e: &binormal_core::Error) -> &'static str {
    use binormal_core::Error::*;
    match e {
        InvalidInput(_) => "invalid_input",
        StepSizeUnderflow { .. } => "step_size_underflow",
        TooManySteps { .. } => "too_many_steps",
        RangeExceeded { .. } => "range_exceeded",
        WindowTooShort { .. } => "window_too_short",
        HypothesisViolated(_) => "hypothesis_violated",
        NegativeDiscriminant { .. } => "negative_discriminant",
        NotContractive { .. } => "not_contractive",
        NotConverging(_) => "not_converging",
        DegenerateAxis { .. } => "degenerate_axis",
        NoSignChange => "no_sign_change",
        RootNotBracketed(_) => "root_not_bracketed",
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => EXIT_VALIDATION,
            RunError::Numerical(binormal_core::Error::InvalidInput(_))
            | RunError::Numerical(binormal_core::Error::DegenerateAxis { .. }) => EXIT_VALIDATION,
            RunError::Numerical(_) | RunError::Io(_) => EXIT_NUMERICAL,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Validation(_) => "validation",
            RunError::Numerical(e) => core_kind(e),
            RunError::Io(_) => "io",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let message = match self {
            RunError::Validation(m) => m.clone(),
            RunError::Numerical(e) => e.to_string(),
            RunError::Io(e) => format!("{e:#}"),
        };
        json!({ "error": { "kind": self.kind(), "message": message, "exit_code": self.exit_code() } })
    }
}

fn configure_threads() -> Result<(), RunError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| RunError::Validation(format!("{THREADS_ENV} = {v:?} is not a positive integer")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Resolve flags and run file into one configuration.
pub fn resolve(cli: Cli) -> Result<RunConfig, RunError> {
    let mut cfg = match (cli.config, cli.command) {
        (Some(_), Some(_)) => {
            return Err(RunError::Validation(
                "give either --config or a subcommand, not both".into(),
            ))
        }
        (None, None) => return Err(RunError::Validation("no subcommand given".into())),
        (None, Some(cmd)) => RunConfig::new(cmd, None),
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path).map_err(|e| {
                RunError::Validation(format!("cannot read {}: {e}", path.display()))
            })?;
            RunConfig::from_toml(&text).map_err(RunError::Validation)?
        }
    };
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    cfg.validate().map_err(RunError::Validation)?;
    Ok(cfg)
}

/// Run a validated configuration; returns the artifacts written.
pub fn execute(cfg: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    use commands::*;
    let out = OutDir::new(cfg.out.clone().unwrap_or_else(|| DEFAULT_OUT.into()));
    let mut arts = match &cfg.command {
        Command::Integrate(x) => integrate_cmd(x, &out)?,
        Command::Trace(x) => trace_cmd(x, &out)?,
        Command::VerifyAsymptotics(x) => verify_asymptotics_cmd(x, &out)?,
        Command::Convergence(x) => convergence_cmd(x, &out)?,
        Command::Nls(x) => nls_cmd(x, &out)?,
        Command::NlsScatter(x) => nls_scatter_cmd(x, &out)?,
        Command::Scatter(x) => scatter_cmd(x, &out)?,
        Command::Odd(x) => odd_cmd(x, &out)?,
        Command::PlaneSpiral(x) => plane_spiral_cmd(x, &out)?,
        Command::Mixed(x) => mixed_cmd(x, &out)?,
        Command::SelfIntersect(x) => self_intersect_cmd(x, &out)?,
        Command::Singular(x) => singular_cmd(x, &out)?,
        Command::Nonuniqueness(x) => nonuniqueness_cmd(x, &out)?,
        Command::Figures(x) => figures::figures_cmd(x.which, x.c0, &out)?,
    };
    // run metadata lives beside, not inside, the data files
    arts.push(out.text("config.toml", &cfg.to_toml())?);
    let meta = json!({
        "tool": "binormal-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
    });
    arts.push(out.json("meta.json", &meta)?);
    Ok(arts)
}

/// Parse `argv`, run, and map the outcome to an exit code. Errors go to
/// standard error as one JSON object.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let err = RunError::Validation(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    let outcome = configure_threads()
        .and_then(|_| resolve(cli))
        .and_then(|cfg| execute(&cfg));
    match outcome {
        Ok(arts) => {
            for a in arts {
                println!("{}", a.display());
            }
            EXIT_OK
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}
