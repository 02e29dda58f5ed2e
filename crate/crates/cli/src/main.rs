use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use topiary::config::{preset, presets, validate_config, ExperimentConfig};
use topiary::experiment::run_experiment;

#[derive(Parser)]
#[command(name = "topiary", version, about = "Run topic-aware overlay experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a preset name.
    Run {
        config: String,
        /// Run only this seed (repeatable); replaces the configured seed list.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        /// Output directory; replaces `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `key.path=value` with a TOML value (repeatable).
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check a config without running it.
    Validate {
        config: String,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Bundled presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// Print every preset name with a short description.
    List,
    /// Print a preset as a config file.
    Show { name: String },
}

/// A file path wins over a preset of the same name.
fn load(config: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let path = Path::new(config);
    if path.exists() {
        return Ok(ExperimentConfig::load(path, overrides)?);
    }
    match preset(config) {
        Some(cfg) => Ok(cfg.with_overrides(overrides)?),
        None => bail!("no config file or preset named {config:?} (see `topiary presets list`)"),
    }
}

fn run(config: &str, seeds: Vec<u64>, out: Option<PathBuf>, overrides: &[String]) -> Result<()> {
    let mut cfg = load(config, overrides).context("load")?;
    if !seeds.is_empty() {
        cfg.seeds = seeds;
    }
    if let Some(out) = out {
        cfg.output.dir = out;
    }
    let outcomes = run_experiment(&cfg)?;
    let mut failed = 0;
    for o in &outcomes {
        match &o.result {
            Ok(reports) => {
                let last = reports.last().map(|r| (r.receive_rate, r.avg_delay));
                let (rate, delay) = last.unwrap_or((None, None));
                println!(
                    "seed {}: {} epochs -> {} (final receive rate {}, avg delay {})",
                    o.seed,
                    reports.len(),
                    o.dir.display(),
                    topiary::report::fmt_opt(rate),
                    topiary::report::fmt_opt(delay),
                );
            }
            Err(e) => {
                failed += 1;
                eprintln!("seed {}: {e}", o.seed);
            }
        }
    }
    if failed > 0 {
        return Err(anyhow!("{failed} of {} seeds failed", outcomes.len()));
    }
    Ok(())
}

fn validate(config: &str, overrides: &[String]) -> Result<()> {
    let cfg = load(config, overrides).context("load")?;
    let violations = validate_config(&cfg);
    if violations.is_empty() {
        println!("ok: {} nodes, {} seeds, config hash {}", cfg.node_count()?, cfg.seeds.len(), cfg.hash());
        return Ok(());
    }
    for v in &violations {
        eprintln!("  {v}");
    }
    bail!("validate: {} violation(s)", violations.len())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seeds, out, overrides } => run(&config, seeds, out, &overrides),
        Command::Validate { config, overrides } => validate(&config, &overrides),
        Command::Presets { action: PresetAction::List } => {
            for p in presets() {
                println!("{:<20} {}", p.name, p.description);
            }
            Ok(())
        }
        Command::Presets { action: PresetAction::Show { name } } => match preset(&name) {
            Some(cfg) => {
                print!("{}", cfg.to_toml());
                Ok(())
            }
            None => Err(anyhow!("no preset named {name:?}")),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
