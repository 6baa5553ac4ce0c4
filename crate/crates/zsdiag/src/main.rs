use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zsdiag::commands::{self, CliError};
use zsdiag::config::RunConfig;

#[derive(Parser)]
#[command(name = "zsdiag", version, about = "Zero-shot cognitive diagnosis from textual learner profiles")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags below override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// local-hash or remote
    #[arg(long, global = true)]
    tem: Option<String>,
    #[arg(long, global = true)]
    tem_dim: Option<usize>,
    /// mirt, ncdm or kancd
    #[arg(long, global = true)]
    cdm: Option<String>,
    /// none, no_lcm or no_tcp
    #[arg(long, global = true)]
    ablation: Option<String>,
    #[arg(long, global = true)]
    min_responses: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    doa_weighted: bool,
    /// embedding cache file
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// extra `key=value` settings
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic domains with known ground truth
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Build textual profiles and embed them
    Embed {
        #[arg(required = true)]
        domains: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on source domains
    Train {
        #[arg(required = true)]
        domains: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Diagnose an unseen target domain with a frozen checkpoint
    Diagnose {
        #[arg(long)]
        checkpoint: PathBuf,
        target: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute metrics from exported predictions and mastery
    Evaluate {
        target: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        mastery: PathBuf,
        #[arg(long, default_value = "")]
        model_digest: String,
    },
    /// Append interactions to a student's profile and report the change
    Edit {
        #[arg(long)]
        checkpoint: PathBuf,
        target: PathBuf,
        #[arg(long)]
        student: String,
        /// lines of `exercise-or-concept, correct|incorrect`
        #[arg(long)]
        edits: PathBuf,
    },
}

fn build_config(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &c.config {
        cfg.apply_file(path)?;
    }
    let s = |v: &str| toml::Value::String(v.into());
    let i = |v: u64| toml::Value::Integer(v as i64);
    if let Some(v) = c.seed {
        cfg.set("seed", &i(v))?;
    }
    if let Some(v) = &c.tem {
        cfg.set("tem", &s(v))?;
    }
    if let Some(v) = c.tem_dim {
        cfg.set("tem_dim", &i(v as u64))?;
    }
    if let Some(v) = &c.cdm {
        cfg.set("cdm", &s(v))?;
    }
    if let Some(v) = &c.ablation {
        cfg.set("ablation", &s(v))?;
    }
    if let Some(v) = c.min_responses {
        cfg.set("min_responses", &i(v as u64))?;
    }
    if let Some(v) = c.alpha {
        cfg.set("alpha", &toml::Value::Float(v))?;
    }
    if c.doa_weighted {
        cfg.set("doa_weighted", &toml::Value::Boolean(true))?;
    }
    if let Some(v) = &c.cache {
        cfg.set("cache", &s(&v.display().to_string()))?;
    }
    for kv in &c.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        let value = format!("v = {v}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| s(v));
        cfg.set(k.trim(), &value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = build_config(&cli.common)?;
    match cli.command {
        Command::Synth { out } => {
            for dir in commands::cmd_synth(&cfg, &out)? {
                println!("{}", dir.display());
            }
        }
        Command::Embed { domains, out } => commands::cmd_embed(&domains, &cfg, &out)?,
        Command::Train { domains, out } => {
            let trained = commands::cmd_train(&domains, &cfg, &out)?;
            print_json(&serde_json::json!({
                "best_epoch": trained.best_epoch,
                "epochs_run": trained.epochs_run,
                "best_val_auc": trained.best_val_auc,
                "tem_id": trained.tem_id,
            }))?;
        }
        Command::Diagnose { checkpoint, target, out } => {
            print_json(&commands::cmd_diagnose(&checkpoint, &target, &cfg, &out)?)?
        }
        Command::Evaluate {
            target,
            predictions,
            mastery,
            model_digest,
        } => print_json(&commands::cmd_evaluate(
            &target,
            &predictions,
            &mastery,
            &model_digest,
            &cfg,
        )?)?,
        Command::Edit {
            checkpoint,
            target,
            student,
            edits,
        } => {
            let text = std::fs::read_to_string(&edits)
                .map_err(|e| CliError::Io(format!("{}: {e}", edits.display())))?;
            let lines = commands::parse_edits(&text)?;
            print_json(&commands::cmd_edit(&checkpoint, &target, &student, &lines, &cfg)?)?
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
