//! `cubiclab` command-line entry point.
//!
//! Exit codes: 0 success, 1 failure during compute, 2 usage (including a
//! missing config file), 3 invalid configuration. Errors are reported on
//! stderr as a single JSON line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "cubiclab", version, about = "Pseudo-spectral lab for cubic dispersive flows")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Single evolution with mass, corrected mass and Morawetz series.
    Run(Common),
    /// Scaling sweep of one experiment.
    Sweep {
        #[arg(long, value_enum)]
        experiment: Experiment,
        /// Comma separated sweep values; replaces `<experiment>.eps`.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Soliton saturation table.
    Soliton {
        /// Comma separated soliton parameters; replaces `soliton.lambdas`.
        #[arg(long = "lambda", value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        /// Horizon; replaces `soliton.t_end`.
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Theorem-window, bootstrap and interpolation audits.
    Audit(Common),
    /// Structure, strategy and hypothesis checks of the configured symbol.
    SymbolInspect(Common),
    /// Oracle-equivalence suite.
    Selftest(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Drift,
    Lifespan,
    Morawetz,
    Distance,
}

impl Experiment {
    fn section(self) -> &'static str {
        match self {
            Experiment::Drift => "drift",
            Experiment::Lifespan => "lifespan",
            Experiment::Morawetz => "morawetz",
            Experiment::Distance => "distance",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, default_value = "cubiclab-out")]
    out: PathBuf,
    /// `section.key=value` overrides, applied in order (last wins).
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config { key: String, reason: String },
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Config { .. } => 3,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Usage(m) => json!({ "error": "usage", "message": m, "code": self.code() }),
            CliError::Config { key, reason } => {
                json!({ "error": "config", "key": key, "message": reason, "code": self.code() })
            }
            CliError::Runtime(m) => json!({ "error": "runtime", "message": m, "code": self.code() }),
        }
    }
}

impl From<cubiclab::Error> for CliError {
    fn from(e: cubiclab::Error) -> Self {
        match e {
            cubiclab::Error::Config { key, reason } => CliError::Config { key, reason },
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.verb {
        Verb::Run(c) => commands::run(&c.prepare("run", Vec::new())?),
        Verb::Sweep { experiment, eps, common } => {
            let mut extra = Vec::new();
            if let Some(eps) = eps {
                if experiment == Experiment::Distance {
                    return Err(CliError::Usage("--eps does not apply to the distance sweep".into()));
                }
                extra.push(format!("{}.eps={}", experiment.section(), toml_list(&eps)));
            }
            commands::sweep(&common.prepare(&format!("sweep {}", experiment.section()), extra)?, experiment)
        }
        Verb::Soliton { lambdas, t_end, common } => {
            let mut extra = Vec::new();
            if let Some(l) = lambdas {
                extra.push(format!("soliton.lambdas={}", toml_list(&l)));
            }
            if let Some(t) = t_end {
                extra.push(format!("soliton.t_end={t:?}"));
            }
            commands::soliton(&common.prepare("soliton", extra)?)
        }
        Verb::Audit(c) => commands::audit(&c.prepare("audit", Vec::new())?),
        Verb::SymbolInspect(c) => commands::symbol_inspect(&c.prepare("symbol-inspect", Vec::new())?),
        Verb::Selftest(c) => commands::selftest(&c.prepare("selftest", Vec::new())?),
    }
}

fn toml_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let _ = e.print();
            let err = CliError::Usage(e.kind().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.code());
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if matches!(err, CliError::Usage(_)) {
                eprintln!("{}", Cli::command().render_usage());
            }
            eprintln!("{}", err.to_json());
            ExitCode::from(err.code())
        }
    }
}
