use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mlgcn::commands::{self, GRADCHECK_TOLERANCE, MODEL_FILE};
use mlgcn::config::RunConfig;

#[derive(Parser)]
#[command(name = "mlgcn", version, about = "Multi-label node classification with label co-embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (`key = value` lines) or a previous run's manifest.json.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the manifest, metrics and model.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and report train/test micro-F1.
    Train(Common),
    /// Score a saved model on the test split.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Model file; defaults to `<out>/model.bin`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Write the configured synthetic graph as a dataset directory.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference gradient check (built-in fixture without --config).
    Gradcheck {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Method comparison and training-set-size sweep over several seeds.
    Sweep(Common),
}

fn load(path: &Path) -> Result<RunConfig> {
    let cfg = RunConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
    for w in &cfg.warnings {
        log::warn!("{w}");
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut sink = stdout.lock();
    match cli.command {
        Command::Train(c) => {
            let cfg = load(&c.config)?;
            let summary = commands::cmd_train(&cfg, c.out.as_deref(), &mut sink)?;
            eprintln!("{summary}");
        }
        Command::Eval { common, model } => {
            let cfg = load(&common.config)?;
            let model = match (model, &common.out) {
                (Some(m), _) => m,
                (None, Some(out)) => out.join(MODEL_FILE),
                (None, None) => bail!("eval needs --model or --out"),
            };
            let (_, summary) = commands::cmd_eval(&cfg, &model, common.out.as_deref(), &mut sink)?;
            eprintln!("{summary}");
        }
        Command::Gen { config, out } => {
            let cfg = load(&config)?;
            let summary = commands::cmd_gen(&cfg, &out, &mut sink)?;
            eprintln!("{summary}");
        }
        Command::Gradcheck { config, out } => {
            let cfg = config.as_deref().map(load).transpose()?;
            let report = commands::cmd_gradcheck(cfg.as_ref(), out.as_deref(), &mut sink)?;
            eprintln!(
                "max relative error {:.3e} (W0 {:.3e}, W1 {:.3e}, Z {:.3e})",
                report.max(),
                report.w0,
                report.w1,
                report.z
            );
            if report.max() >= GRADCHECK_TOLERANCE {
                bail!("gradient check failed: {:.3e} >= {GRADCHECK_TOLERANCE:e}", report.max());
            }
        }
        Command::Sweep(c) => {
            let cfg = load(&c.config)?;
            let out = commands::cmd_sweep(&cfg, c.out.as_deref(), &mut sink)?;
            eprint!("{}", out.tables);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
