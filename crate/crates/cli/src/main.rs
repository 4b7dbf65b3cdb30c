//! `relosc`: JSON specs in, CSV/JSON reports out.
//!
//! Exit codes: 0 success, 2 when the only outcome is an undecided verdict,
//! 1 on errors (including failed self-test suites).

mod commands;
mod config;
mod report;
mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use relosc::classify::WindowPolicy;
use relosc::coeffs::Interval;
use relosc::count::Snap;
use relosc::kneser::DEFAULT_MARGIN;
use relosc::pruefer::{PrueferOptions, Tolerances};

use crate::commands::Resolved;
use crate::config::{load, Loaded, SelftestConfig, Settings};
use crate::report::{Header, Report, Status};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: line {line}, column {column}: {message}")]
    Config { origin: String, line: usize, column: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("invalid setting: {0}")]
    Setting(String),
    #[error(transparent)]
    Lib(#[from] relosc::Error),
}

#[derive(Debug, Parser)]
#[command(name = "relosc", version, about = "Relative oscillation analyses for Sturm-Liouville expressions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration (optional for selftest).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the <command>.json / <command>.csv artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0: one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Minimum distance from -1/4 for a decisive Kneser verdict.
    #[arg(long, global = true)]
    margin: Option<f64>,
    #[arg(long, global = true)]
    rtol: Option<f64>,
    #[arg(long, global = true)]
    atol: Option<f64>,
    /// Testing aid: plant a known fault.
    #[arg(long, global = true, hide = true, value_enum)]
    inject_fault: Option<Fault>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Fault {
    /// Disable snapping of angles to multiples of pi.
    SnapZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
enum Command {
    /// Integrate one Prüfer trace and count its zeros.
    Trace,
    /// Relative count N(u0, u1) of two solutions.
    Relosc,
    /// Window/certificate (non)oscillation verdict, classical or relative.
    Classify,
    /// Kneser-type test of a tail quantity against -1/4.
    Kneser,
    /// Eigenvalue counts of truncated problems (shooting and finite differences).
    Eigencount,
    /// Essential-spectrum invariance and limit-point comparison of two expressions.
    Invariance,
    /// Reduced-scale invariant suites of every module.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Trace => "trace",
            Command::Relosc => "relosc",
            Command::Classify => "classify",
            Command::Kneser => "kneser",
            Command::Eigencount => "eigencount",
            Command::Invariance => "invariance",
            Command::Selftest => "selftest",
        }
    }
}

fn resolve(cli: &Cli, settings: &Settings, interval: &Interval) -> Result<Resolved, CliError> {
    let base = Tolerances::default();
    let rtol = cli.rtol.or(settings.rtol).unwrap_or(base.rtol);
    let atol = cli.atol.or(settings.atol).unwrap_or(base.atol);
    let tol = Tolerances::new(rtol, atol).map_err(|e| CliError::Setting(e.to_string()))?;
    let margin = cli.margin.or(settings.margin).unwrap_or(DEFAULT_MARGIN);
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(CliError::Setting(format!("margin must be positive, got {margin}")));
    }
    let mut opts = PrueferOptions { tol, ..PrueferOptions::default() };
    if cli.inject_fault == Some(Fault::SnapZero) {
        opts.snap = Snap::new(0.0);
    }
    let policy = match (settings.policy, settings.x_max) {
        (Some(p), _) => p,
        (None, Some(x_max)) => WindowPolicy::reaching(interval, x_max),
        (None, None) => WindowPolicy::default_for(interval),
    };
    policy.check(interval).map_err(|e| CliError::Setting(e.to_string()))?;
    Ok(Resolved { opts, margin, policy })
}

fn need_config(cli: &Cli) -> Result<&Path, CliError> {
    cli.config.as_deref().ok_or_else(|| CliError::Setting(format!("{} needs --config <path>", cli.command.name())))
}

fn header(cli: &Cli, sha256: String, r: &Resolved) -> Header {
    Header {
        tool: "relosc",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        config_sha256: sha256,
        seed: cli.seed,
        tolerances: r.opts.tol,
        snap_rtol: r.opts.snap.rtol,
        margin: r.margin,
        policy: r.policy,
    }
}

fn run(cli: &Cli) -> Result<(Header, Report), CliError> {
    macro_rules! with_config {
        ($ty:ty, $interval:expr, $f:path) => {{
            let Loaded { config, sha256 } = load::<$ty>(need_config(cli)?)?;
            #[allow(clippy::redundant_closure_call)]
            let interval: Interval = ($interval)(&config)?;
            let r = resolve(cli, &config.settings, &interval)?;
            let rep = $f(&config, &r)?;
            Ok((header(cli, sha256, &r), rep))
        }};
    }
    let doc_iv = |d: &relosc::coeffs::FamilyDocument| -> Result<Interval, CliError> { Ok(Interval::new(d.interval.a, d.interval.b)?) };
    match cli.command {
        Command::Trace => with_config!(config::TraceConfig, |c: &config::TraceConfig| doc_iv(&c.equation), commands::trace),
        Command::Relosc => with_config!(config::ReloscConfig, |c: &config::ReloscConfig| doc_iv(&c.equation0), commands::relosc),
        Command::Classify => with_config!(config::ClassifyConfig, |c: &config::ClassifyConfig| doc_iv(&c.equation), commands::classify),
        Command::Kneser => with_config!(
            config::KneserConfig,
            |c: &config::KneserConfig| match &c.source {
                config::KneserSource::Equation { equation, .. } => doc_iv(equation),
                config::KneserSource::Constant { interval, .. } | config::KneserSource::Samples { interval, .. } => {
                    Ok::<_, CliError>(Interval::new(interval.a, interval.b)?)
                }
            },
            commands::kneser
        ),
        Command::Eigencount => {
            with_config!(config::EigencountConfig, |c: &config::EigencountConfig| doc_iv(&c.equation), commands::eigencount)
        }
        Command::Invariance => {
            with_config!(config::InvarianceConfig, |c: &config::InvarianceConfig| doc_iv(&c.equation0), commands::invariance)
        }
        Command::Selftest => {
            let Loaded { config, sha256 } = match &cli.config {
                Some(path) => load::<SelftestConfig>(path)?,
                None => config::parse::<SelftestConfig>("{}", "<default>")?,
            };
            let r = resolve(cli, &config.settings, &Interval::half_line(1.0))?;
            let rep = selftest::report(cli.seed, r.opts);
            Ok((header(cli, sha256, &r), rep))
        }
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which would read as "inconclusive".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if cli.jobs > 0 {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let outcome = run(&cli).and_then(|(h, rep)| {
        report::write(&cli.out, &h, &rep)?;
        Ok(rep)
    });
    match outcome {
        Ok(rep) => {
            println!("{}: {}", cli.command.name(), rep.summary);
            if rep.status == Status::Failed {
                if let Some(suites) = rep.body.get("suites").and_then(|s| s.as_array()) {
                    for s in suites.iter().filter(|s| s["pass"] == false) {
                        println!("  FAIL {}: {}", s["suite"].as_str().unwrap_or("?"), s["detail"].as_str().unwrap_or(""));
                    }
                }
            }
            ExitCode::from(rep.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
