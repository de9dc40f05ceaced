//! Actor-critic agent: network, A2C updates, training loop and checkpoints.

pub mod a2c;
pub mod net;

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use a2c::{
    a2c_update, discounted_returns, loss, loss_and_grad, masked_policy, select_action, Adam, ExperienceBuffer,
    LossReport, Sample, SelectMode, TrainConfig, Transition,
};
pub use net::{masked_softmax, PolicyValueNet};

use crate::env::{blocking_probability, ActionMask, DecisionContext, Environment};
use crate::error::{Error, Result};
use crate::heuristics::Policy;

/// Network plus optimizer state.
#[derive(Debug, Clone)]
pub struct A2cAgent {
    pub net: PolicyValueNet,
    opt: Adam,
    config: TrainConfig,
    rng: ChaCha8Rng,
}

impl A2cAgent {
    pub fn new(input_dim: usize, num_actions: usize, config: TrainConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = PolicyValueNet::new(input_dim, &config.hidden(), num_actions).init(&mut rng);
        let opt = Adam::new(net.num_params(), config.learning_rate);
        Ok(A2cAgent { net, opt, config, rng })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn act(&mut self, observation: &[f64], mask: &ActionMask, mode: SelectMode) -> (usize, f64) {
        let trace = self.net.forward(observation);
        let p = masked_softmax(&trace.logits, mask);
        (select_action(&p, mode, &mut self.rng), trace.value)
    }

    pub fn value(&self, observation: &[f64]) -> f64 {
        self.net.forward(observation).value
    }

    pub fn update(&mut self, buffer: &mut ExperienceBuffer, bootstrap_value: f64) -> Result<LossReport> {
        a2c_update(&mut self.net, &mut self.opt, buffer, bootstrap_value, &self.config, &mut self.rng)
    }
}

/// A trained network used as an environment policy.
#[derive(Debug, Clone)]
pub struct AgentPolicy {
    net: PolicyValueNet,
    mode: SelectMode,
    rng: ChaCha8Rng,
}

impl AgentPolicy {
    pub fn new(net: PolicyValueNet, mode: SelectMode, seed: u64) -> Self {
        AgentPolicy {
            net,
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for AgentPolicy {
    fn select(&mut self, _ctx: &DecisionContext<'_>, observation: &[f64], mask: &ActionMask) -> usize {
        let p = masked_policy(&self.net, observation, mask);
        select_action(&p, self.mode, &mut self.rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub bp: f64,
    /// Mean losses of the updates that ran during the episode, if any.
    pub losses: Option<LossReport>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub log: Vec<EpisodeStats>,
    pub smoothed_bp: Vec<f64>,
    pub best: PolicyValueNet,
    pub best_episode: Option<usize>,
    pub last: PolicyValueNet,
}

/// Trailing mean over `window` entries (shorter at the start).
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Seed of training episode `episode` for a run seeded with `seed`.
pub fn episode_seed(seed: u64, episode: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (episode as u64).wrapping_add(1 << 40)
}

/// Runs `episodes` training episodes of the collect / store / update loop
/// and keeps the network with the lowest smoothed blocking probability.
pub fn train(env: &mut Environment, config: &TrainConfig, episodes: usize, seed: u64) -> Result<TrainOutcome> {
    let mut agent = A2cAgent::new(env.observation_len(), env.num_actions(), config.clone(), seed)?;
    train_agent(env, &mut agent, episodes, seed)
}

pub fn train_agent(env: &mut Environment, agent: &mut A2cAgent, episodes: usize, seed: u64) -> Result<TrainOutcome> {
    let window = agent.config.smoothing_window;
    let mut buffer = ExperienceBuffer::new(agent.config.buffer_size);
    let mut log = Vec::with_capacity(episodes);
    let mut raw = Vec::with_capacity(episodes);
    let mut best = agent.net.clone();
    let mut best_score = f64::INFINITY;
    let mut best_episode = None;

    for ep in 0..episodes {
        let mut obs = env.reset(episode_seed(seed, ep))?;
        let mut reports = Vec::new();
        loop {
            let mask = env.action_mask();
            let (action, value) = agent.act(&obs, &mask, SelectMode::Sample);
            let out = env.step(action)?;
            let full = buffer.push(Transition {
                observation: obs,
                action,
                reward: out.reward,
                mask,
                value,
                done: out.done,
            });
            if full {
                let boot = if out.done { 0.0 } else { agent.value(&out.observation) };
                reports.push(agent.update(&mut buffer, boot)?);
            }
            obs = out.observation;
            if out.done {
                break;
            }
        }
        let bp = blocking_probability(env.log())?;
        raw.push(bp);
        let losses = (!reports.is_empty()).then(|| {
            let n = reports.len() as f64;
            LossReport {
                policy_loss: reports.iter().map(|r| r.policy_loss).sum::<f64>() / n,
                value_loss: reports.iter().map(|r| r.value_loss).sum::<f64>() / n,
                entropy: reports.iter().map(|r| r.entropy).sum::<f64>() / n,
            }
        });
        log.push(EpisodeStats { episode: ep, bp, losses });

        let smoothed = smooth(&raw, window);
        let current = *smoothed.last().unwrap();
        if ep + 1 >= window.min(episodes) && current < best_score {
            best_score = current;
            best = agent.net.clone();
            best_episode = Some(ep);
        }
    }
    Ok(TrainOutcome {
        smoothed_bp: smooth(&raw, window),
        log,
        best,
        best_episode,
        last: agent.net.clone(),
    })
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"RMBSANET";
const CHECKPOINT_VERSION: u32 = 1;

/// Serializes a network. Layout (little-endian):
///
/// ```text
/// magic    8 bytes  "RMBSANET"
/// version  u32      1
/// input    u32      observation length
/// actions  u32      policy head width
/// hidden   u32      number of hidden layers H
/// widths   H x u32
/// count    u64      number of parameters P
/// params   P x f64  flat parameters, see `net` module docs
/// ```
pub fn write_checkpoint<W: Write>(net: &PolicyValueNet, mut out: W) -> Result<()> {
    let io = |e| Error::io("<checkpoint>", e);
    out.write_all(CHECKPOINT_MAGIC).map_err(io)?;
    let mut header = vec![CHECKPOINT_VERSION, net.input_dim() as u32, net.num_actions() as u32, net.hidden().len() as u32];
    header.extend(net.hidden().iter().map(|&h| h as u32));
    for v in header {
        out.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    out.write_all(&(net.num_params() as u64).to_le_bytes()).map_err(io)?;
    for p in net.params() {
        out.write_all(&p.to_le_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<PolicyValueNet> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(|e| Error::io("<checkpoint>", e))?;
    let mut cur = bytes.as_slice();
    let mut take = |n: usize| -> Result<&[u8]> {
        if cur.len() < n {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let (head, tail) = cur.split_at(n);
        cur = tail;
        Ok(head)
    };
    if take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let mut u32_at = || -> Result<u32> { Ok(u32::from_le_bytes(take(4)?.try_into().unwrap())) };
    let version = u32_at()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let input_dim = u32_at()? as usize;
    let actions = u32_at()? as usize;
    let nh = u32_at()? as usize;
    let hidden = (0..nh).map(|_| u32_at().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    if input_dim == 0 || actions == 0 || hidden.contains(&0) {
        return Err(Error::Checkpoint("zero-sized layer".into()));
    }
    let count = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let params = (0..count)
        .map(|_| take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())))
        .collect::<Result<Vec<_>>>()?;
    if !cur.is_empty() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    PolicyValueNet::from_parts(input_dim, &hidden, actions, params)
        .ok_or_else(|| Error::Checkpoint("parameter count does not match layer sizes".into()))
}
