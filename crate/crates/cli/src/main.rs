use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shellrg::presets::{self, PRESETS};
use shellrg::{parse_config, run_to_dir, ExperimentConfig};
use shellrg_lab::pool::default_workers;

const CONFIG_ERROR: u8 = 1;
const RUNTIME_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(name = "shellrg", version, about = "Run renormalization experiments on regularized shell models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `outDir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; overrides the config and SHELLRG_WORKERS.
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a named figure preset; `shellrg preset list` shows them.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Parse a config, apply defaults and print the result.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Flag, then config, then SHELLRG_WORKERS, then the core count.
fn worker_count(flag: Option<usize>, cfg: Option<usize>) -> Result<usize, String> {
    if let Some(w) = flag.or(cfg) {
        return if w == 0 { Err("workers must be positive".into()) } else { Ok(w) };
    }
    match std::env::var("SHELLRG_WORKERS") {
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(format!("SHELLRG_WORKERS must be a positive integer, got {text:?}")),
        },
        Err(_) => Ok(default_workers()),
    }
}

fn load(path: &Path) -> Result<(String, ExperimentConfig), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg = parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((text, cfg))
}

fn execute(cfg: &ExperimentConfig, text: Option<&str>, out: &Path, workers: usize) -> u8 {
    match run_to_dir(cfg, text, out, workers) {
        Ok(summary) => {
            eprintln!(
                "{}: {} points, {} required failures -> {}",
                cfg.kind.name(),
                summary.points,
                summary.required_failures,
                out.display()
            );
            if summary.required_failures > 0 {
                RUNTIME_FAILURE
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error writing {}: {e}", out.display());
            RUNTIME_FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config_error = |msg: String| {
        eprintln!("config error: {msg}");
        ExitCode::from(CONFIG_ERROR)
    };
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok((_, cfg)) => {
                println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
                ExitCode::SUCCESS
            }
            Err(msg) => config_error(msg),
        },
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => {
            let (text, mut cfg) = match load(&config) {
                Ok(x) => x,
                Err(msg) => return config_error(msg),
            };
            let workers = match worker_count(workers, cfg.workers) {
                Ok(w) => w,
                Err(msg) => return config_error(msg),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let Some(out) = out.or_else(|| cfg.out_dir.clone()) else {
                return config_error("no output directory: pass --out or set outDir".into());
            };
            ExitCode::from(execute(&cfg, Some(&text), &out, workers))
        }
        Command::Preset { name, out, workers } => {
            if name == "list" {
                for p in PRESETS {
                    println!("{}\n    {}", p.name, p.description);
                }
                return ExitCode::SUCCESS;
            }
            let Some(preset) = presets::find(&name) else {
                let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
                return config_error(format!("unknown preset {name:?}; available: {}", names.join(", ")));
            };
            let workers = match worker_count(workers, None) {
                Ok(w) => w,
                Err(msg) => return config_error(msg),
            };
            let Some(out) = out else {
                return config_error("preset needs --out".into());
            };
            let mut code = 0;
            for (dir, cfg) in (preset.parts)() {
                code = code.max(execute(&cfg, None, &out.join(dir), workers));
            }
            ExitCode::from(code)
        }
    }
}
