//! `dynspec`: spectra, Hölder scaling experiments and property checks for
//! dynamically defined operators.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 certified
//! bound violation.

mod cache;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::{ExperimentConfig, RawConfig};

#[derive(Parser, Debug)]
#[command(name = "dynspec", version, about = "Spectra of dynamically defined operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Band set of a periodic approximant.
    Spectrum(Flags),
    /// Scaling series, power-law fit and bound verdicts.
    Holder(Flags),
    /// Følner defects of tent cutoffs against (t/r)|h|.
    Folner(Flags),
    /// Hausdorff distance of two invariant sets.
    Hulldist(Flags),
    /// Kernel norms, Schur bound and self-adjointness.
    Normcheck(Flags),
}

#[derive(clap::Args, Debug)]
struct Flags {
    /// `key = value` configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override any key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    alpha2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    level2: Option<String>,
    /// Inclusive range `a..b`.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    dimension: Option<String>,
    #[arg(long)]
    radii: Option<String>,
    #[arg(long)]
    phase_grid: Option<String>,
    #[arg(long)]
    theta_mesh: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Defaults to $DYNSPEC_CACHE_DIR; no caching when neither is set.
    #[arg(long)]
    cache_dir: Option<String>,
}

impl Flags {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| anyhow::anyhow!("reading config {}: {e}", path.display()))?;
                RawConfig::parse(&text)?
            }
            None => RawConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
            raw.set(k.trim(), v)?;
        }
        let named = [
            ("model", &self.model),
            ("lambda", &self.lambda),
            ("alpha", &self.alpha),
            ("alpha2", &self.alpha2),
            ("theta", &self.theta),
            ("level", &self.level),
            ("level2", &self.level2),
            ("levels", &self.levels),
            ("dimension", &self.dimension),
            ("radii", &self.radii),
            ("phase_grid", &self.phase_grid),
            ("theta_mesh", &self.theta_mesh),
            ("window", &self.window),
            ("out", &self.out),
            ("cache_dir", &self.cache_dir),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                raw.set(k, v)?;
            }
        }
        Ok(ExperimentConfig::resolve(&raw)?)
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Spectrum(f) => commands::spectrum(&f.resolve()?),
        Command::Holder(f) => commands::holder(&f.resolve()?),
        Command::Folner(f) => commands::folner(&f.resolve()?),
        Command::Hulldist(f) => commands::hulldist(&f.resolve()?),
        Command::Normcheck(f) => commands::normcheck(&f.resolve()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => {
            eprintln!("certified bound violation");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
