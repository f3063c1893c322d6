mod artifact;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use kseq_core::precision::Precision;

use artifact::{emit, Artifact, SCHEMA_VERSION};
use commands::{CmdError, Context};
use config::{Format, RunConfig};

/// Partitions without k-sequences: exact counts, spectral data and asymptotic checks.
#[derive(Debug, Parser)]
#[command(name = "kseq", version)]
struct Cli {
    /// JSON config file; defaults to ./kseq.json when it exists.
    #[arg(long, global = true, env = "KSEQ_CONFIG")]
    config: Option<PathBuf>,
    /// Significant decimal digits.
    #[arg(long, global = true)]
    precision: Option<u32>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Directory for artifact files instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count constrained partitions by dynamic programming.
    Count(commands::CountArgs),
    /// Coefficients of G_k(q) from both the recurrence and the transfer product.
    Series(commands::SeriesArgs),
    /// log G_k(e^{-s}) with a certified truncation bound.
    GkEval(commands::GkEvalArgs),
    /// Roots of the characteristic polynomial along n.
    Spectrum(commands::SpectrumArgs),
    /// Tail product of the transition entries T(n)^{1,1}.
    Transition(commands::TransitionArgs),
    /// Run-up vector entries against the enumeration oracle and main term.
    Runup(commands::RunupArgs),
    /// f_k and g_k at a point, optionally the integral of g_k.
    Fgk(commands::FgkArgs),
    /// Exact values against their main terms.
    Asymptotics(commands::AsymptoticsArgs),
    /// Monte Carlo estimate of the probability of no k-sequence.
    Simulate(commands::SimulateArgs),
    /// Exact coefficient checks of the partition identities.
    Identities(commands::IdentitiesArgs),
    /// Fit of the second-order correction to log G_k.
    FitConjecture(commands::FitArgs),
    /// All acceptance criteria.
    VerifyAll(commands::VerifyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Count(_) => "count",
            Command::Series(_) => "series",
            Command::GkEval(_) => "gk-eval",
            Command::Spectrum(_) => "spectrum",
            Command::Transition(_) => "transition",
            Command::Runup(_) => "runup",
            Command::Fgk(_) => "fgk",
            Command::Asymptotics(_) => "asymptotics",
            Command::Simulate(_) => "simulate",
            Command::Identities(_) => "identities",
            Command::FitConjecture(_) => "fit-conjecture",
            Command::VerifyAll(_) => "verify-all",
        }
    }

    fn arguments(&self) -> serde_json::Value {
        let v = match self {
            Command::Count(a) => serde_json::to_value(a),
            Command::Series(a) => serde_json::to_value(a),
            Command::GkEval(a) => serde_json::to_value(a),
            Command::Spectrum(a) => serde_json::to_value(a),
            Command::Transition(a) => serde_json::to_value(a),
            Command::Runup(a) => serde_json::to_value(a),
            Command::Fgk(a) => serde_json::to_value(a),
            Command::Asymptotics(a) => serde_json::to_value(a),
            Command::Simulate(a) => serde_json::to_value(a),
            Command::Identities(a) => serde_json::to_value(a),
            Command::FitConjecture(a) => serde_json::to_value(a),
            Command::VerifyAll(a) => serde_json::to_value(a),
        };
        v.unwrap_or(serde_json::Value::Null)
    }

    fn run(&self, ctx: &mut Context<'_>) -> commands::CmdResult {
        match self {
            Command::Count(a) => commands::count(a, ctx),
            Command::Series(a) => commands::series(a, ctx),
            Command::GkEval(a) => commands::gk_eval_cmd(a, ctx),
            Command::Spectrum(a) => commands::spectrum(a, ctx),
            Command::Transition(a) => commands::transition(a, ctx),
            Command::Runup(a) => commands::runup(a, ctx),
            Command::Fgk(a) => commands::fgk(a, ctx),
            Command::Asymptotics(a) => commands::asymptotics(a, ctx),
            Command::Simulate(a) => commands::simulate(a, ctx),
            Command::Identities(a) => commands::identities(a, ctx),
            Command::FitConjecture(a) => commands::fit_conjecture(a, ctx),
            Command::VerifyAll(a) => commands::verify_all(a, ctx),
        }
    }
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn merged_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut c = RunConfig::load(cli.config.as_deref())?;
    if let Some(p) = cli.precision {
        c.precision = p;
    }
    if let Some(t) = cli.tol {
        c.tol = t;
    }
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(f) = cli.format {
        c.format = f;
    }
    if let Some(o) = &cli.out {
        c.out = Some(o.clone());
    }
    if !(c.tol > 0.0 && c.tol < 1.0) {
        return Err(format!("tol = {} must lie in (0, 1)", c.tol));
    }
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let config = match merged_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let precision = match Precision::new(config.precision) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let mut ctx = Context {
        config: &config,
        precision,
        extra: Vec::new(),
    };
    let report = match cli.command.run(&mut ctx) {
        Ok(r) => r,
        Err(CmdError::Usage(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(CmdError::Failure(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    };
    let extra = std::mem::take(&mut ctx.extra);
    let artifact = Artifact {
        schema_version: SCHEMA_VERSION,
        tool: "kseq",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        config: &config,
        arguments: cli.command.arguments(),
        wall_seconds: start.elapsed().as_secs_f64(),
        pass: report.pass,
        result: &report.result,
    };
    if let Err(e) = emit(&artifact, &report.table, &config, &extra) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_FAIL);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
