//! Advantage actor-critic: experience buffer, loss, gradients and the
//! optimizer step.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{masked_softmax, ForwardTrace, PolicyValueNet};
use crate::env::ActionMask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub buffer_size: usize,
    pub minibatch_size: usize,
    pub value_loss_weight: f64,
    pub entropy_weight: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    pub grad_clip: f64,
    pub hidden_layers: usize,
    pub hidden_units: usize,
    /// Window for the smoothed blocking curve and best-checkpoint selection.
    pub smoothing_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.95,
            learning_rate: 5e-5,
            buffer_size: 1000,
            minibatch_size: 500,
            value_loss_weight: 0.5,
            entropy_weight: 0.01,
            grad_clip: 0.5,
            hidden_layers: 5,
            hidden_units: 128,
            smoothing_window: 75,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.buffer_size == 0 || self.minibatch_size == 0 || self.minibatch_size > self.buffer_size {
            return Err(Error::Config("need 0 < minibatch size <= buffer size".into()));
        }
        if self.value_loss_weight < 0.0 || self.entropy_weight < 0.0 || self.grad_clip < 0.0 {
            return Err(Error::Config("loss weights and clip must be non-negative".into()));
        }
        if self.hidden_layers == 0 || self.hidden_units == 0 {
            return Err(Error::Config("network needs at least one hidden layer".into()));
        }
        if self.smoothing_window == 0 {
            return Err(Error::Config("smoothing window must be at least 1".into()));
        }
        Ok(())
    }

    pub fn hidden(&self) -> Vec<usize> {
        vec![self.hidden_units; self.hidden_layers]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub mask: ActionMask,
    /// Value estimate at collection time.
    pub value: f64,
    /// Episode ended after this transition.
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ExperienceBuffer {
    items: Vec<Transition>,
    capacity: usize,
}

impl ExperienceBuffer {
    pub fn new(capacity: usize) -> Self {
        ExperienceBuffer {
            items: Vec::with_capacity(capacity),
            capacity,
        }
    }

    /// Returns true once the buffer is full.
    pub fn push(&mut self, t: Transition) -> bool {
        assert!(!self.is_full(), "push into a full experience buffer");
        self.items.push(t);
        self.is_full()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn items(&self) -> &[Transition] {
        &self.items
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }
}

/// `G_t = r_t + gamma * G_{t+1}`, restarting at episode ends and seeded
/// with `bootstrap` after the last transition.
pub fn discounted_returns(rewards: &[f64], dones: &[bool], gamma: f64, bootstrap: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut next = bootstrap;
    for t in (0..rewards.len()).rev() {
        if dones[t] {
            next = 0.0;
        }
        next = rewards[t] + gamma * next;
        out[t] = next;
    }
    out
}

/// One training sample with its fixed targets.
#[derive(Debug, Clone)]
pub struct Sample<'a> {
    pub observation: &'a [f64],
    pub action: usize,
    pub mask: &'a ActionMask,
    pub ret: f64,
    pub advantage: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossReport {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

impl LossReport {
    pub fn total(&self, cfg: &TrainConfig) -> f64 {
        self.policy_loss + cfg.value_loss_weight * self.value_loss - cfg.entropy_weight * self.entropy
    }
}

fn sample_terms(trace: &ForwardTrace, s: &Sample<'_>, value_w: f64, entropy_w: f64) -> (LossReport, Vec<f64>, f64) {
    let p = masked_softmax(&trace.logits, s.mask);
    let logp_a = p[s.action].ln();
    let entropy: f64 = -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>();
    let diff = trace.value - s.ret;
    let mut d_logits = vec![0.0; p.len()];
    for (j, d) in d_logits.iter_mut().enumerate() {
        if !s.mask.is_valid(j) {
            continue;
        }
        let indicator = if j == s.action { 1.0 } else { 0.0 };
        // -A log pi(a)
        *d = -s.advantage * (indicator - p[j]);
        // -beta H, with dH/dz_j = -p_j (ln p_j + H)
        *d += entropy_w * p[j] * (p[j].ln() + entropy);
    }
    let report = LossReport {
        policy_loss: -s.advantage * logp_a,
        value_loss: diff * diff,
        entropy,
    };
    (report, d_logits, 2.0 * value_w * diff)
}

/// Mean loss over `batch` and its gradient w.r.t. every parameter:
/// `mean(-A log pi(a)) + c_v mean((V - G)^2) - c_e mean(H)`.
pub fn loss_and_grad(net: &PolicyValueNet, batch: &[Sample<'_>], cfg: &TrainConfig) -> (LossReport, Vec<f64>) {
    let mut grads = vec![0.0; net.num_params()];
    let mut acc = LossReport::default();
    let n = batch.len() as f64;
    for s in batch {
        let trace = net.forward(s.observation);
        let (r, d_logits, d_value) = sample_terms(&trace, s, cfg.value_loss_weight, cfg.entropy_weight);
        acc.policy_loss += r.policy_loss / n;
        acc.value_loss += r.value_loss / n;
        acc.entropy += r.entropy / n;
        let d_logits: Vec<f64> = d_logits.iter().map(|d| d / n).collect();
        net.backward(&trace, &d_logits, d_value / n, &mut grads);
    }
    (acc, grads)
}

/// Loss only; used by finite-difference checks.
pub fn loss(net: &PolicyValueNet, batch: &[Sample<'_>], cfg: &TrainConfig) -> f64 {
    let n = batch.len() as f64;
    batch
        .iter()
        .map(|s| {
            let trace = net.forward(s.observation);
            sample_terms(&trace, s, cfg.value_loss_weight, cfg.entropy_weight).0.total(cfg) / n
        })
        .sum()
}

/// Adaptive-moment optimizer over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

/// One A2C training pass: discounted returns over the buffer, advantages
/// from the stored value estimates, then one optimizer step per shuffled
/// mini-batch. Clears the buffer.
///
/// `bootstrap_value` is the critic's estimate for the state following the
/// last transition (ignored when that transition ended an episode).
pub fn a2c_update<R: Rng>(
    net: &mut PolicyValueNet,
    opt: &mut Adam,
    buffer: &mut ExperienceBuffer,
    bootstrap_value: f64,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<LossReport> {
    if !buffer.is_full() {
        return Err(Error::BufferNotFull {
            len: buffer.len(),
            capacity: buffer.capacity(),
        });
    }
    let items = buffer.items();
    let rewards: Vec<f64> = items.iter().map(|t| t.reward).collect();
    let dones: Vec<bool> = items.iter().map(|t| t.done).collect();
    let returns = discounted_returns(&rewards, &dones, cfg.gamma, bootstrap_value);
    let samples: Vec<Sample<'_>> = items
        .iter()
        .zip(&returns)
        .map(|(t, &ret)| Sample {
            observation: &t.observation,
            action: t.action,
            mask: &t.mask,
            ret,
            advantage: ret - t.value,
        })
        .collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(rng);
    let mut report = LossReport::default();
    let mut batches = 0.0;
    for chunk in order.chunks(cfg.minibatch_size) {
        let batch: Vec<Sample<'_>> = chunk.iter().map(|&i| samples[i].clone()).collect();
        let (r, mut grads) = loss_and_grad(net, &batch, cfg);
        clip_grad_norm(&mut grads, cfg.grad_clip);
        opt.step(net.params_mut(), &grads);
        report.policy_loss += r.policy_loss;
        report.value_loss += r.value_loss;
        report.entropy += r.entropy;
        batches += 1.0;
    }
    buffer.clear();
    Ok(LossReport {
        policy_loss: report.policy_loss / batches,
        value_loss: report.value_loss / batches,
        entropy: report.entropy / batches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMode {
    Sample,
    Greedy,
}

/// Masked action choice: a categorical draw or the most likely valid action
/// (lowest index on ties).
pub fn select_action<R: Rng>(probs: &[f64], mode: SelectMode, rng: &mut R) -> usize {
    match mode {
        SelectMode::Greedy => {
            let mut best = 0;
            for (i, &p) in probs.iter().enumerate() {
                if p > probs[best] {
                    best = i;
                }
            }
            best
        }
        SelectMode::Sample => {
            let dist = WeightedIndex::new(probs).expect("masked policy has positive mass");
            dist.sample(rng)
        }
    }
}

pub fn masked_policy(net: &PolicyValueNet, observation: &[f64], mask: &ActionMask) -> Vec<f64> {
    masked_softmax(&net.forward(observation).logits, mask)
}
