use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rmbsa::config::ExperimentConfig;
use rmbsa::experiment::{self, summarize, EvalRow};

#[derive(Debug, Parser)]
#[command(name = "rmbsa", version, about = "Multi-band EON provisioning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Precompute the connection QoT database and write it as CSV.
    Qotdb(Common),
    /// Evaluate one policy over the configured loads and seeds.
    Eval(Common),
    /// Train the actor-critic agent.
    Train(Common),
    /// Evaluate every baseline (and the agent, if a checkpoint is set).
    Compare(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fbff | daff | baff | random | drl
    #[arg(long)]
    policy: Option<String>,
    /// Trained network for `--policy drl`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Replace the seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Training episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Replace the load list with a single load (Erlang).
    #[arg(long)]
    load: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> rmbsa::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.policy {
            cfg.policy.name = p.clone();
        }
        if let Some(p) = &self.checkpoint {
            cfg.policy.checkpoint = Some(p.clone());
        }
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(e) = self.episodes {
            cfg.train.episodes = e;
        }
        if let Some(l) = self.load {
            cfg.traffic.loads = vec![l];
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_summary(rows: &[EvalRow]) {
    println!("{:>10}  {:<8} {:>10} {:>10} {:>5}", "load", "policy", "mean_bp", "std_bp", "runs");
    for s in summarize(rows) {
        println!("{:>10}  {:<8} {:>10.5} {:>10.5} {:>5}", s.load, s.policy, s.mean_bp, s.std_bp, s.runs);
    }
}

fn run(cli: Cli) -> rmbsa::Result<()> {
    match cli.command {
        Command::Qotdb(c) => {
            let cfg = c.resolve()?;
            let path = experiment::cmd_qotdb(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Eval(c) => {
            let cfg = c.resolve()?;
            print_summary(&experiment::cmd_eval(&cfg)?);
        }
        Command::Compare(c) => {
            let cfg = c.resolve()?;
            print_summary(&experiment::cmd_compare(&cfg)?);
        }
        Command::Train(c) => {
            let cfg = c.resolve()?;
            let out = experiment::cmd_train(&cfg)?;
            let last = out.smoothed_bp.last().copied().unwrap_or(f64::NAN);
            println!(
                "trained {} episodes; final smoothed BP {:.5}; best checkpoint from episode {}",
                out.log.len(),
                last,
                out.best_episode.map_or("-".to_string(), |e| e.to_string())
            );
            println!("outputs in {}", cfg.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

