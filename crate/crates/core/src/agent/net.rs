//! Fully connected policy/value network with hand-written backpropagation.
//!
//! All parameters live in one flat vector. Each dense layer stores its
//! weights row-major (`out x in`) followed by its biases; layers are laid
//! out trunk first, then the policy head, then the value head.

use rand::Rng;

use crate::env::ActionMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub in_dim: usize,
    pub out_dim: usize,
    offset: usize,
}

impl LayerShape {
    pub fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.in_dim * self.out_dim
    }

    pub fn bias_range(&self) -> std::ops::Range<usize> {
        let w = self.offset + self.in_dim * self.out_dim;
        w..w + self.out_dim
    }

    fn len(&self) -> usize {
        self.in_dim * self.out_dim + self.out_dim
    }
}

/// Shared ReLU trunk with a policy-logit head and a scalar value head.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValueNet {
    input_dim: usize,
    hidden: Vec<usize>,
    num_actions: usize,
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input followed by every hidden activation (post-ReLU).
    pub activations: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub value: f64,
}

impl PolicyValueNet {
    /// Zero-initialized network; see [`init`](Self::init).
    pub fn new(input_dim: usize, hidden: &[usize], num_actions: usize) -> Self {
        assert!(input_dim > 0 && num_actions > 0, "network needs inputs and actions");
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        let last = *dims.last().unwrap();
        let mut layers = Vec::new();
        let mut offset = 0;
        let mut push = |in_dim: usize, out_dim: usize| {
            let l = LayerShape { in_dim, out_dim, offset };
            offset += l.len();
            layers.push(l);
        };
        for w in dims.windows(2) {
            push(w[0], w[1]);
        }
        push(last, num_actions);
        push(last, 1);
        PolicyValueNet {
            input_dim,
            hidden: hidden.to_vec(),
            num_actions,
            params: vec![0.0; offset],
            layers,
        }
    }

    /// Weights and biases drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn init<R: Rng>(mut self, rng: &mut R) -> Self {
        for l in self.layers.clone() {
            let bound = 1.0 / (l.in_dim as f64).sqrt();
            for p in &mut self.params[l.offset..l.offset + l.len()] {
                *p = rng.gen_range(-bound..bound);
            }
        }
        self
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn num_trunk(&self) -> usize {
        self.hidden.len()
    }

    fn dense(&self, l: &LayerShape, x: &[f64], out: &mut Vec<f64>) {
        let w = &self.params[l.weight_range()];
        let b = &self.params[l.bias_range()];
        out.clear();
        out.extend(b.iter().enumerate().map(|(o, &bias)| {
            let row = &w[o * l.in_dim..(o + 1) * l.in_dim];
            bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        }));
    }

    pub fn forward(&self, input: &[f64]) -> ForwardTrace {
        assert_eq!(input.len(), self.input_dim, "observation length");
        let mut activations = Vec::with_capacity(self.num_trunk() + 1);
        activations.push(input.to_vec());
        for l in &self.layers[..self.num_trunk()] {
            let mut h = Vec::with_capacity(l.out_dim);
            self.dense(l, activations.last().unwrap(), &mut h);
            for v in &mut h {
                *v = v.max(0.0);
            }
            activations.push(h);
        }
        let top = activations.last().unwrap();
        let mut logits = Vec::new();
        self.dense(&self.layers[self.num_trunk()], top, &mut logits);
        let mut value = Vec::new();
        self.dense(&self.layers[self.num_trunk() + 1], top, &mut value);
        ForwardTrace {
            activations,
            logits,
            value: value[0],
        }
    }

    /// Accumulates into `grads` the parameter gradient of a scalar loss whose
    /// derivatives w.r.t. the logits and the value are given.
    pub fn backward(&self, trace: &ForwardTrace, d_logits: &[f64], d_value: f64, grads: &mut [f64]) {
        debug_assert_eq!(grads.len(), self.params.len());
        let nt = self.num_trunk();
        let top = trace.activations.last().unwrap();
        let mut d_top = vec![0.0; top.len()];
        let heads = [(&self.layers[nt], d_logits), (&self.layers[nt + 1], std::slice::from_ref(&d_value))];
        for (l, dout) in heads {
            self.accumulate_layer(l, top, dout, grads, &mut d_top);
        }
        let mut d_out = d_top;
        for i in (0..nt).rev() {
            let l = &self.layers[i];
            // through the ReLU: activation > 0 iff pre-activation > 0
            for (d, &a) in d_out.iter_mut().zip(&trace.activations[i + 1]) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
            let mut d_in = vec![0.0; l.in_dim];
            self.accumulate_layer(l, &trace.activations[i], &d_out, grads, &mut d_in);
            d_out = d_in;
        }
    }

    fn accumulate_layer(&self, l: &LayerShape, x: &[f64], d_out: &[f64], grads: &mut [f64], d_in: &mut [f64]) {
        let w = &self.params[l.weight_range()];
        let (gw, gb) = grads[l.offset..l.offset + l.len()].split_at_mut(l.in_dim * l.out_dim);
        for (o, &g) in d_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            gb[o] += g;
            let row = o * l.in_dim;
            for i in 0..l.in_dim {
                gw[row + i] += g * x[i];
                d_in[i] += g * w[row + i];
            }
        }
    }

    /// Rebuilds a network from its shape and flat parameters.
    pub fn from_parts(input_dim: usize, hidden: &[usize], num_actions: usize, params: Vec<f64>) -> Option<Self> {
        let mut net = PolicyValueNet::new(input_dim, hidden, num_actions);
        if params.len() != net.params.len() {
            return None;
        }
        net.params = params;
        Some(net)
    }
}

/// Softmax restricted to the valid entries of `mask`; masked entries get
/// probability exactly 0.
pub fn masked_softmax(logits: &[f64], mask: &ActionMask) -> Vec<f64> {
    assert_eq!(logits.len(), mask.len(), "mask length");
    let max = logits
        .iter()
        .zip(mask.as_slice())
        .filter(|(_, &v)| v)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(max > f64::NEG_INFINITY, "mask has no valid action");
    let mut p: Vec<f64> = logits
        .iter()
        .zip(mask.as_slice())
        .map(|(&z, &v)| if v { (z - max).exp() } else { 0.0 })
        .collect();
    let sum: f64 = p.iter().sum();
    for x in &mut p {
        *x /= sum;
    }
    p
}
