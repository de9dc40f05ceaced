//! Experiment runs behind the command-line subcommands.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::agent::{self, AgentPolicy, PolicyValueNet, SelectMode, TrainOutcome};
use crate::config::ExperimentConfig;
use crate::env::{blocking_probability, EnvConfig, Environment, EpisodeLog, Scenario};
use crate::error::{Error, Result};
use crate::heuristics::{HeuristicKind, HeuristicPolicy, Policy, RandomPolicy};
use crate::qot::{ModulationTable, QotDatabase, QotEstimator};

/// Builds topology, band plan and QoT database from a config.
pub fn build_scenario(cfg: &ExperimentConfig) -> Result<Scenario> {
    let topo = cfg.topology()?;
    let plan = cfg.band_plan()?;
    let table = ModulationTable::derive(cfg.physical.target_ber)?;
    let est = QotEstimator::new(plan.clone(), cfg.physical.params.clone());
    let qdb = QotDatabase::build(&topo, &est, table, cfg.env.k)?;
    Ok(Scenario {
        topology: Arc::new(topo),
        plan,
        qdb: Arc::new(qdb),
    })
}

/// Policy to evaluate, resolved from its CLI name.
#[derive(Debug, Clone)]
pub enum PolicySpec {
    Heuristic(HeuristicKind),
    Random,
    Drl(PolicyValueNet),
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Heuristic(k) => k.name(),
            PolicySpec::Random => "random",
            PolicySpec::Drl(_) => "drl",
        }
    }

    pub fn resolve(name: &str, checkpoint: Option<&Path>) -> Result<Self> {
        match name {
            "random" => Ok(PolicySpec::Random),
            "drl" => {
                let path = checkpoint.ok_or_else(|| Error::Config("policy drl needs a checkpoint".into()))?;
                let file = File::open(path).map_err(|e| Error::io(path, e))?;
                Ok(PolicySpec::Drl(agent::read_checkpoint(std::io::BufReader::new(file))?))
            }
            other => Ok(PolicySpec::Heuristic(other.parse()?)),
        }
    }

    pub fn instantiate(&self, scenario: &Scenario, band_order: &[usize], seed: u64) -> Box<dyn Policy + Send> {
        match self {
            PolicySpec::Heuristic(kind) => Box::new(HeuristicPolicy::new(*kind, band_order.to_vec(), &scenario.qdb, &scenario.plan)),
            PolicySpec::Random => Box::new(RandomPolicy::new(seed)),
            PolicySpec::Drl(net) => Box::new(AgentPolicy::new(net.clone(), SelectMode::Greedy, seed)),
        }
    }
}

/// Plays one full episode with `policy`.
pub fn run_episode(env: &mut Environment, policy: &mut dyn Policy, seed: u64) -> Result<EpisodeLog> {
    let mut obs = env.reset(seed)?;
    loop {
        let ctx = env.context().expect("episode in progress");
        let mask = ctx.mask();
        let action = policy.select(&ctx, &obs, &mask);
        drop(ctx);
        let out = env.step(action)?;
        obs = out.observation;
        if out.done {
            break;
        }
    }
    Ok(env.log().clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub load: f64,
    pub seed: u64,
    pub policy: String,
    pub bp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub load: f64,
    pub policy: String,
    pub mean_bp: f64,
    pub std_bp: f64,
    pub runs: usize,
}

/// Blocking probability of every (load, seed, policy), in that nesting order.
pub fn evaluate(
    scenario: &Scenario,
    base_env: &EnvConfig,
    loads: &[f64],
    seeds: &[u64],
    policies: &[PolicySpec],
    band_order: &[usize],
) -> Result<Vec<EvalRow>> {
    let jobs: Vec<(f64, u64, &PolicySpec)> = loads
        .iter()
        .flat_map(|&l| seeds.iter().flat_map(move |&s| policies.iter().map(move |p| (l, s, p))))
        .collect();
    jobs.par_iter()
        .map(|&(load, seed, spec)| {
            let mut cfg = base_env.clone();
            cfg.traffic.load_erlang = load;
            let mut env = Environment::new(scenario.clone(), cfg)?;
            let mut policy = spec.instantiate(scenario, band_order, seed);
            let log = run_episode(&mut env, policy.as_mut(), seed)?;
            Ok(EvalRow {
                load,
                seed,
                policy: spec.name().to_string(),
                bp: blocking_probability(&log)?,
            })
        })
        .collect()
}

/// Mean and sample standard deviation per (load, policy), first-seen order.
pub fn summarize(rows: &[EvalRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(f64, String)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(l, p)| *l == r.load && *p == r.policy) {
            keys.push((r.load, r.policy.clone()));
        }
    }
    keys.into_iter()
        .map(|(load, policy)| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.load == load && r.policy == policy)
                .map(|r| r.bp)
                .collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = if v.len() > 1 {
                v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            SummaryRow {
                load,
                policy,
                mean_bp: mean,
                std_bp: var.sqrt(),
                runs: v.len(),
            }
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_hash_line<W: Write>(w: &mut W, hash: &str, path: &Path) -> Result<()> {
    writeln!(w, "# config_sha256={hash}").map_err(|e| Error::io(path, e))
}

fn write_manifest(cfg: &ExperimentConfig, command: &str) -> Result<()> {
    let path = cfg.output_dir.join(format!("{command}.manifest.toml"));
    let mut w = create(&path)?;
    write!(w, "# config_sha256={}\n{}", cfg.hash(), cfg.to_toml()).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Writes `qotdb.csv` into the output directory; returns its path.
pub fn cmd_qotdb(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let scenario = build_scenario(cfg)?;
    let path = cfg.output_dir.join("qotdb.csv");
    let mut w = create(&path)?;
    write_hash_line(&mut w, &cfg.hash(), &path)?;
    scenario.qdb.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_manifest(cfg, "qotdb")?;
    Ok(path)
}

fn write_eval(cfg: &ExperimentConfig, stem: &str, rows: &[EvalRow]) -> Result<(PathBuf, PathBuf)> {
    let hash = cfg.hash();
    let rows_path = cfg.output_dir.join(format!("{stem}.csv"));
    let mut w = create(&rows_path)?;
    write_hash_line(&mut w, &hash, &rows_path)?;
    {
        let mut c = csv::Writer::from_writer(&mut w);
        c.write_record(["load", "seed", "policy", "bp"])?;
        for r in rows {
            c.write_record([r.load.to_string(), r.seed.to_string(), r.policy.clone(), r.bp.to_string()])?;
        }
        c.flush().map_err(|e| Error::io(&rows_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&rows_path, e))?;

    let sum_path = cfg.output_dir.join(format!("{stem}_summary.csv"));
    let mut w = create(&sum_path)?;
    write_hash_line(&mut w, &hash, &sum_path)?;
    {
        let mut c = csv::Writer::from_writer(&mut w);
        c.write_record(["load", "policy", "mean_bp", "std_bp", "runs"])?;
        for s in summarize(rows) {
            c.write_record([
                s.load.to_string(),
                s.policy,
                s.mean_bp.to_string(),
                s.std_bp.to_string(),
                s.runs.to_string(),
            ])?;
        }
        c.flush().map_err(|e| Error::io(&sum_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&sum_path, e))?;
    Ok((rows_path, sum_path))
}

/// Evaluates the configured policy over every load and seed.
pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<Vec<EvalRow>> {
    cfg.validate()?;
    let spec = PolicySpec::resolve(&cfg.policy.name, cfg.policy.checkpoint.as_deref())?;
    let scenario = build_scenario(cfg)?;
    let order = cfg.band_order(&scenario.plan)?;
    let rows = evaluate(&scenario, &cfg.env_config(cfg.traffic.loads[0]), &cfg.traffic.loads, &cfg.seeds, std::slice::from_ref(&spec), &order)?;
    write_eval(cfg, &format!("eval_{}", spec.name()), &rows)?;
    write_manifest(cfg, "eval")?;
    Ok(rows)
}

/// Evaluates all heuristics, the random policy and, when a checkpoint is
/// configured, the trained agent.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<Vec<EvalRow>> {
    cfg.validate()?;
    let mut specs = vec![
        PolicySpec::Heuristic(HeuristicKind::FirstBand),
        PolicySpec::Heuristic(HeuristicKind::DistanceAdaptive),
        PolicySpec::Heuristic(HeuristicKind::BitRateAdaptive),
        PolicySpec::Random,
    ];
    if let Some(p) = &cfg.policy.checkpoint {
        specs.push(PolicySpec::resolve("drl", Some(p))?);
    }
    let scenario = build_scenario(cfg)?;
    let order = cfg.band_order(&scenario.plan)?;
    let rows = evaluate(&scenario, &cfg.env_config(cfg.traffic.loads[0]), &cfg.traffic.loads, &cfg.seeds, &specs, &order)?;
    write_eval(cfg, "compare", &rows)?;
    write_manifest(cfg, "compare")?;
    Ok(rows)
}

/// Trains at the first configured load with the first seed; writes
/// `train_log.csv`, `bp_curve.csv`, `checkpoint.bin` (best smoothed BP) and
/// `checkpoint_last.bin`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let scenario = build_scenario(cfg)?;
    let mut env = Environment::new(scenario, cfg.env_config(cfg.traffic.loads[0]))?;
    let outcome = agent::train(&mut env, &cfg.train.config, cfg.train.episodes, cfg.seeds[0])?;
    write_training_outputs(cfg, &outcome)?;
    write_manifest(cfg, "train")?;
    Ok(outcome)
}

pub fn write_training_outputs(cfg: &ExperimentConfig, outcome: &TrainOutcome) -> Result<()> {
    let hash = cfg.hash();
    let dir = &cfg.output_dir;

    let path = dir.join("train_log.csv");
    let mut w = create(&path)?;
    write_hash_line(&mut w, &hash, &path)?;
    {
        let mut c = csv::Writer::from_writer(&mut w);
        c.write_record(["episode", "bp", "policy_loss", "value_loss", "entropy"])?;
        for s in &outcome.log {
            let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            c.write_record([
                s.episode.to_string(),
                s.bp.to_string(),
                f(s.losses.map(|l| l.policy_loss)),
                f(s.losses.map(|l| l.value_loss)),
                f(s.losses.map(|l| l.entropy)),
            ])?;
        }
        c.flush().map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("bp_curve.csv");
    let mut w = create(&path)?;
    write_hash_line(&mut w, &hash, &path)?;
    {
        let mut c = csv::Writer::from_writer(&mut w);
        c.write_record(["episode", "bp", "bp_smoothed"])?;
        for (s, sm) in outcome.log.iter().zip(&outcome.smoothed_bp) {
            c.write_record([s.episode.to_string(), s.bp.to_string(), sm.to_string()])?;
        }
        c.flush().map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    for (name, net) in [("checkpoint.bin", &outcome.best), ("checkpoint_last.bin", &outcome.last)] {
        let path = dir.join(name);
        let w = create(&path)?;
        agent::write_checkpoint(net, w)?;
    }
    Ok(())
}
