//! Small fully connected value network (tanh hidden layers, linear output),
//! trained with Adam on mean squared error, plus its replay buffer.
//!
//! Weight file layout (plain text, one record per line):
//!
//! ```text
//! vrptw-valuenet 1
//! sizes 12 6 3 1
//! episodes 700
//! layer 0 weights 6 12
//! <6 lines of 12 numbers, row-major: row = output unit>
//! layer 0 bias 6
//! <1 line of 6 numbers>
//! ...
//! end
//! ```
//!
//! `episodes` counts the training episodes behind the parameters, so a run
//! resumed from the file continues the numbering. Numbers use the shortest
//! representation that parses back to the same `f64`, so a save/load cycle
//! is exact.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ContractError, FormatError};
use crate::features::{FeatureVector, N_FEATURES};

pub const LAYER_SIZES: [usize; 4] = [N_FEATURES, 6, 3, 1];
pub const WEIGHTS_MAGIC: &str = "vrptw-valuenet";
pub const WEIGHTS_VERSION: u32 = 1;

/// All parameters live in one flat vector: for each layer the `out x in`
/// weight matrix row by row, then its `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    sizes: Vec<usize>,
    params: Vec<f64>,
    /// Training episodes already applied to these parameters.
    pub trained_episodes: u64,
}

impl Network {
    pub fn zeros() -> Self {
        let n = Self::param_len(&LAYER_SIZES);
        Self { sizes: LAYER_SIZES.to_vec(), params: vec![0.0; n], trained_episodes: 0 }
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases alike.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut net = Self::zeros();
        let mut off = 0;
        for l in 0..net.sizes.len() - 1 {
            let (fan_in, out) = (net.sizes[l], net.sizes[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut net.params[off..off + out * fan_in + out] {
                *p = rng.gen_range(-bound..=bound);
            }
            off += out * fan_in + out;
        }
        net
    }

    fn param_len(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64, ContractError> {
        if x.len() != self.sizes[0] {
            return Err(ContractError::InputLength { expected: self.sizes[0], got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ContractError::NonFinite("network input"));
        }
        Ok(self.eval(x))
    }

    /// Forward pass on a feature vector of the right length.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut act = x.to_vec();
        let mut off = 0;
        let last = self.sizes.len() - 2;
        for l in 0..=last {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.params[off..off + n_out * n_in + n_out].split_at(n_out * n_in);
            let next: Vec<f64> = (0..n_out)
                .map(|o| {
                    let z = b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(&act).map(|(wi, ai)| wi * ai).sum::<f64>();
                    if l == last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            act = next;
            off += n_out * n_in + n_out;
        }
        act[0]
    }

    /// Output and the gradient of the output with respect to every parameter.
    pub fn output_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let layers = self.sizes.len() - 1;
        let mut acts: Vec<Vec<f64>> = vec![x.to_vec()];
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            offsets.push(off);
            let w = &self.params[off..off + n_out * n_in];
            let b = &self.params[off + n_out * n_in..off + n_out * n_in + n_out];
            let a = &acts[l];
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let z = b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(a).map(|(wi, ai)| wi * ai).sum::<f64>();
                    if l == layers - 1 {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(out);
            off += n_out * n_in + n_out;
        }

        let mut grad = vec![0.0; self.params.len()];
        // d output / d z for the current layer.
        let mut delta = vec![1.0];
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let a_in = &acts[l];
            for o in 0..n_out {
                for i in 0..n_in {
                    grad[off + o * n_in + i] = delta[o] * a_in[i];
                }
                grad[off + n_out * n_in + o] = delta[o];
            }
            if l > 0 {
                let w = &self.params[off..off + n_out * n_in];
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = (0..n_out).map(|o| w[o * n_in + i] * delta[o]).sum();
                        back * (1.0 - a_in[i] * a_in[i])
                    })
                    .collect();
            }
        }
        (acts[layers][0], grad)
    }

    /// Mean squared error over the batch and its gradient.
    pub fn loss_and_gradient(&self, batch: &[(FeatureVector, f64)]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for (x, target) in batch {
            let (q, g) = self.output_gradient(x);
            let err = q - target;
            loss += err * err;
            for (acc, gi) in grad.iter_mut().zip(g) {
                *acc += 2.0 * err * gi * scale;
            }
        }
        (loss * scale, grad)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{WEIGHTS_MAGIC} {WEIGHTS_VERSION}");
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "sizes {}", sizes.join(" "));
        let _ = writeln!(out, "episodes {}", self.trained_episodes);
        let mut off = 0;
        for l in 0..self.sizes.len() - 1 {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let _ = writeln!(out, "layer {l} weights {n_out} {n_in}");
            for o in 0..n_out {
                let row: Vec<String> = self.params[off + o * n_in..off + (o + 1) * n_in].iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
            off += n_out * n_in;
            let _ = writeln!(out, "layer {l} bias {n_out}");
            let row: Vec<String> = self.params[off..off + n_out].iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
            off += n_out;
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self, FormatError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| FormatError::parse(0, format!("truncated file: missing {what}")));

        let (ln, header) = next("header")?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(WEIGHTS_MAGIC) {
            return Err(FormatError::parse(ln, format!("expected `{WEIGHTS_MAGIC}` header")));
        }
        let version: u32 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| FormatError::parse(ln, "missing version"))?;
        if version != WEIGHTS_VERSION {
            return Err(FormatError::parse(ln, format!("unsupported version {version}")));
        }

        let (ln, sizes_line) = next("sizes")?;
        let sizes: Vec<usize> = match sizes_line.strip_prefix("sizes") {
            Some(rest) => rest
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| FormatError::parse(ln, format!("bad layer size `{t}`"))))
                .collect::<Result<_, _>>()?,
            None => return Err(FormatError::parse(ln, "expected `sizes` line")),
        };
        if sizes != LAYER_SIZES {
            return Err(FormatError::Shape { expected: LAYER_SIZES.to_vec(), found: sizes });
        }

        let (ln, ep_line) = next("episodes")?;
        let trained_episodes = ep_line
            .strip_prefix("episodes")
            .and_then(|t| t.trim().parse::<u64>().ok())
            .ok_or_else(|| FormatError::parse(ln, "expected `episodes <count>` line"))?;

        let read_row = |ln: usize, line: &str, len: usize| -> Result<Vec<f64>, FormatError> {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| FormatError::parse(ln, format!("non-numeric value `{t}`"))))
                .collect::<Result<_, _>>()?;
            if row.len() != len {
                return Err(FormatError::parse(ln, format!("expected {len} values, found {}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(FormatError::parse(ln, "non-finite parameter"));
            }
            Ok(row)
        };

        let mut params = Vec::with_capacity(Self::param_len(&sizes));
        for l in 0..sizes.len() - 1 {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let (ln, tag) = next("layer weights")?;
            if tag != format!("layer {l} weights {n_out} {n_in}") {
                return Err(FormatError::parse(ln, format!("expected `layer {l} weights {n_out} {n_in}`")));
            }
            for _ in 0..n_out {
                let (ln, line) = next("weight row")?;
                params.extend(read_row(ln, line, n_in)?);
            }
            let (ln, tag) = next("layer bias")?;
            if tag != format!("layer {l} bias {n_out}") {
                return Err(FormatError::parse(ln, format!("expected `layer {l} bias {n_out}`")));
            }
            let (ln, line) = next("bias row")?;
            params.extend(read_row(ln, line, n_out)?);
        }
        let (ln, end) = next("end marker")?;
        if end != "end" {
            return Err(FormatError::parse(ln, "expected `end`"));
        }
        Ok(Self { sizes, params, trained_episodes })
    }
}

pub fn save_weights(net: &Network, path: &Path) -> Result<(), FormatError> {
    std::fs::write(path, net.to_text()).map_err(|e| FormatError::io(path, e))
}

pub fn load_weights(path: &Path) -> Result<Network, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    Network::from_text(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(net: &Network, cfg: AdamConfig) -> Self {
        let n = net.params.len();
        Self { cfg, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, net: &mut Network, grad: &[f64]) {
        assert_eq!(grad.len(), self.m.len(), "gradient shape");
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for (((p, g), m), v) in net.params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

/// One Adam step on the batch's mean squared error; returns the loss before the step.
pub fn train_batch(net: &mut Network, adam: &mut Adam, batch: &[(FeatureVector, f64)]) -> Result<f64, ContractError> {
    if batch.is_empty() {
        return Err(ContractError::Other("empty training batch".into()));
    }
    if batch.iter().any(|(x, y)| !y.is_finite() || x.iter().any(|v| !v.is_finite())) {
        return Err(ContractError::NonFinite("training batch"));
    }
    let (loss, grad) = net.loss_and_gradient(batch);
    adam.step(net, &grad);
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub features: FeatureVector,
    pub step_reward: f64,
    /// Value predicted when the decision was taken; diagnostic only.
    pub q_pred: f64,
    pub episode: u64,
    pub stage: usize,
    pub vehicle: usize,
    /// Discounted fulfilment bonus, filled in once the episode ends.
    pub terminal_bonus: f64,
}

impl Experience {
    pub fn target(&self) -> f64 {
        self.step_reward + self.terminal_bonus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotReady {
    pub have: usize,
    pub need: usize,
}

pub const DEFAULT_BUFFER_CAPACITY: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Experience>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: VecDeque::with_capacity(capacity.min(1 << 16)) }
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

    pub fn push(&mut self, e: Experience) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(e);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items.iter()
    }

    /// Uniform sample of `batch` distinct entries.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Experience>, NotReady> {
        if batch == 0 || self.items.len() < batch {
            return Err(NotReady { have: self.items.len(), need: batch.max(1) });
        }
        Ok(index::sample(rng, self.items.len(), batch).into_iter().map(|i| &self.items[i]).collect())
    }
}
