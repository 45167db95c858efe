use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cfmec::harness::{self, report, ExperimentConfig, Scheme};
use cfmec::Result;

#[derive(Parser)]
#[command(
    name = "cfmec",
    about = "Cell-free MEC resource allocation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML). Defaults to the desk preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario used when no file is given.
    #[arg(long, default_value = "desk")]
    preset: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::preset(&self.preset)?,
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a learned scheme.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "maddpg")]
        scheme: String,
        /// Where to write the final checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Evaluate a checkpoint with exploration off.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
        /// Write per-step traces.
        #[arg(long)]
        trace: bool,
    },
    /// Compare all schemes; learned ones need `--checkpoint scheme=path`.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long = "checkpoint", value_name = "SCHEME=PATH")]
        checkpoints: Vec<String>,
    },
    /// Sweep cluster fraction or user count.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "local_first_fpc")]
        scheme: String,
        #[arg(long, value_delimiter = ',')]
        cluster_fractions: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        num_users: Option<Vec<usize>>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            common,
            scheme,
            checkpoint,
            episodes,
        } => {
            let mut cfg = common.load()?;
            if let Some(e) = episodes {
                cfg.train.episodes = e;
            }
            let art = harness::run_train(&cfg, Scheme::parse(&scheme)?, checkpoint.as_deref())?;
            report::write_training_curves(&art.dir, &art.records)?;
            let last = art.records.last().expect("at least one episode");
            println!(
                "trained {} episodes; last reward {:.4e}, success {:.4}",
                art.records.len(),
                last.total_reward,
                last.success_rate
            );
            println!("checkpoint {}", art.final_checkpoint.display());
        }
        Command::Eval {
            common,
            checkpoint,
            episodes,
            trace,
        } => {
            let mut cfg = common.load()?;
            if let Some(e) = episodes {
                cfg.eval.episodes = e;
            }
            cfg.eval.trace |= trace;
            let r = harness::run_eval(&checkpoint, &cfg)?;
            print!("{}", report::eval_summary(&r));
        }
        Command::Baseline {
            common,
            checkpoints,
        } => {
            let cfg = common.load()?;
            let mut map = BTreeMap::new();
            for item in &checkpoints {
                let (name, path) = item.split_once('=').ok_or_else(|| {
                    cfmec::Error::Config(format!("expected SCHEME=PATH, got {item:?}"))
                })?;
                map.insert(Scheme::parse(name)?, PathBuf::from(path));
            }
            let rows = harness::baseline_table(&cfg, &map)?;
            report::write_baseline(&cfg.output_dir, &rows)?;
            print!("{}", report::baseline_summary(&rows));
        }
        Command::Sweep {
            common,
            scheme,
            cluster_fractions,
            num_users,
        } => {
            let mut cfg = common.load()?;
            if let Some(f) = cluster_fractions {
                cfg.sweep = harness::SweepAxis::ClusterFraction(f);
            } else if let Some(k) = num_users {
                cfg.sweep = harness::SweepAxis::NumUsers(k);
            }
            let rows = harness::run_sweep(&cfg, Scheme::parse(&scheme)?)?;
            report::write_sweep(&cfg.output_dir, &rows)?;
            print!("{}", report::sweep_summary(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
