use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// Logits over `n` discrete actions.
    Categorical(usize),
    /// Diagonal Gaussian over `n` dims with state-independent log-std.
    Gaussian(usize),
}

impl Head {
    pub fn output_dim(self) -> usize {
        match self {
            Head::Categorical(n) | Head::Gaussian(n) => n,
        }
    }
}

/// Separate policy and value MLPs over the same input, same hidden sizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub head: Head,
}

impl Architecture {
    pub fn mlp(input_dim: usize, hidden: &[usize], head: Head) -> Self {
        Architecture { input_dim, hidden: hidden.to_vec(), activation: Activation::Tanh, head }
    }

    fn layer_dims(&self, out: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(self.input_dim);
        dims.extend(&self.hidden);
        dims.push(out);
        dims
    }

    pub(crate) fn layout(&self) -> Layout {
        let policy = Mlp::new(self.layer_dims(self.head.output_dim()), 0, self.activation);
        let log_std_offset = policy.offset + policy.len;
        let log_std_len = match self.head {
            Head::Gaussian(n) => n,
            Head::Categorical(_) => 0,
        };
        let value = Mlp::new(self.layer_dims(1), log_std_offset + log_std_len, self.activation);
        Layout { policy, log_std_offset, log_std_len, value }
    }

    pub fn param_count(&self) -> usize {
        let l = self.layout();
        l.value.offset + l.value.len
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub policy: Mlp,
    pub log_std_offset: usize,
    pub log_std_len: usize,
    pub value: Mlp,
}

/// Dense layers stored as `[W (fan_out x fan_in, row-major), b]` per layer,
/// starting at `offset` in the flat parameter vector.
#[derive(Debug, Clone)]
pub(crate) struct Mlp {
    dims: Vec<usize>,
    offset: usize,
    len: usize,
    activation: Activation,
}

/// Per-layer outputs of a forward pass; `acts[0]` is the input and the last
/// entry is the linear output.
pub(crate) struct MlpCache {
    acts: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

impl Mlp {
    fn new(dims: Vec<usize>, offset: usize, activation: Activation) -> Self {
        let len = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Mlp { dims, offset, len, activation }
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> MlpCache {
        let mut acts = Vec::with_capacity(self.dims.len());
        acts.push(input.to_vec());
        let mut off = self.offset;
        let last = self.dims.len() - 2;
        for (l, w) in self.dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &params[off..off + fan_in * fan_out];
            let bias = &params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
            let x = acts.last().unwrap();
            let mut z: Vec<f64> = bias.to_vec();
            for (j, zj) in z.iter_mut().enumerate() {
                let row = &weights[j * fan_in..(j + 1) * fan_in];
                *zj += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
            if l < last {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            acts.push(z);
            off += fan_in * fan_out + fan_out;
        }
        MlpCache { acts }
    }

    /// Accumulate `d loss / d params` into `grad` given `d loss / d output`.
    pub fn backward(&self, params: &[f64], cache: &MlpCache, d_out: &[f64], grad: &mut [f64]) {
        let n_layers = self.dims.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = self.offset;
        for w in self.dims.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        let mut delta = d_out.to_vec();
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let off = offsets[l];
            let x = &cache.acts[l];
            for j in 0..fan_out {
                let dj = delta[j];
                if dj == 0.0 {
                    continue;
                }
                let row = &mut grad[off + j * fan_in..off + (j + 1) * fan_in];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g += dj * xi;
                }
                grad[off + fan_in * fan_out + j] += dj;
            }
            if l > 0 {
                let weights = &params[off..off + fan_in * fan_out];
                let mut prev = vec![0.0; fan_in];
                for (j, &dj) in delta.iter().enumerate() {
                    if dj == 0.0 {
                        continue;
                    }
                    let row = &weights[j * fan_in..(j + 1) * fan_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * dj;
                    }
                }
                for (p, a) in prev.iter_mut().zip(x) {
                    *p *= self.activation.derivative_from_output(*a);
                }
                delta = prev;
            }
        }
    }

    fn init<R: rand::Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R, output_gain: f64) {
        let mut off = self.offset;
        let n_layers = self.dims.len() - 1;
        for (l, w) in self.dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let gain = if l + 1 == n_layers { output_gain } else { std::f64::consts::SQRT_2 };
            let std = gain / (fan_in as f64).sqrt();
            for p in &mut params[off..off + fan_in * fan_out] {
                *p = std * rng.sample::<f64, _>(StandardNormal);
            }
            for p in &mut params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out] {
                *p = 0.0;
            }
            off += fan_in * fan_out + fan_out;
        }
    }
}

/// Policy and value weights in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub arch: Architecture,
    pub params: Vec<f64>,
}

pub const INITIAL_LOG_STD: f64 = -0.5;

impl PolicyParams {
    pub fn zeros(arch: Architecture) -> Self {
        let params = vec![0.0; arch.param_count()];
        PolicyParams { arch, params }
    }

    /// Scaled-normal weights, zero biases, small policy output layer.
    pub fn init<R: rand::Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        let mut p = Self::zeros(arch);
        let layout = p.arch.layout();
        layout.policy.init(&mut p.params, rng, 0.01);
        for v in &mut p.params[layout.log_std_offset..layout.log_std_offset + layout.log_std_len] {
            *v = INITIAL_LOG_STD;
        }
        layout.value.init(&mut p.params, rng, 1.0);
        p
    }

    pub fn from_vec(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        let p = PolicyParams { arch, params };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.arch.param_count();
        if self.params.len() != expected {
            return Err(Error::ShapeMismatch { expected, actual: self.params.len() });
        }
        if self.log_std().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite log-std"));
        }
        Ok(())
    }

    pub fn log_std(&self) -> &[f64] {
        let l = self.arch.layout();
        &self.params[l.log_std_offset..l.log_std_offset + l.log_std_len]
    }

    /// Bit-level fingerprint of the weights.
    pub fn fingerprint(&self) -> u64 {
        self.params.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
            (h ^ v.to_bits()).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActionDist {
    Categorical { logits: Vec<f64>, log_probs: Vec<f64> },
    Gaussian { mean: Vec<f64>, log_std: Vec<f64> },
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

impl ActionDist {
    pub fn categorical(logits: Vec<f64>) -> Self {
        let log_probs = log_softmax(&logits);
        ActionDist::Categorical { logits, log_probs }
    }

    pub fn probs(&self) -> Option<Vec<f64>> {
        match self {
            ActionDist::Categorical { log_probs, .. } => Some(log_probs.iter().map(|l| l.exp()).collect()),
            ActionDist::Gaussian { .. } => None,
        }
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Action {
        match self {
            ActionDist::Categorical { log_probs, .. } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, lp) in log_probs.iter().enumerate() {
                    acc += lp.exp();
                    if u < acc {
                        return Action::Discrete(i);
                    }
                }
                Action::Discrete(log_probs.len() - 1)
            }
            ActionDist::Gaussian { mean, log_std } => Action::Continuous(
                mean.iter()
                    .zip(log_std)
                    .map(|(m, s)| m + s.exp() * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            ),
        }
    }

    /// Greedy action: argmax (ties to the lowest id) or the mean.
    pub fn mode(&self) -> Action {
        match self {
            ActionDist::Categorical { logits, .. } => {
                let mut best = 0;
                for (i, z) in logits.iter().enumerate() {
                    if *z > logits[best] {
                        best = i;
                    }
                }
                Action::Discrete(best)
            }
            ActionDist::Gaussian { mean, .. } => Action::Continuous(mean.clone()),
        }
    }

    pub fn log_prob(&self, action: &Action) -> Result<f64> {
        match (self, action) {
            (ActionDist::Categorical { log_probs, .. }, Action::Discrete(a)) => log_probs
                .get(*a)
                .copied()
                .ok_or_else(|| Error::InvalidAction(format!("action {a} outside {} choices", log_probs.len()))),
            (ActionDist::Gaussian { mean, log_std }, Action::Continuous(a)) => {
                if a.len() != mean.len() {
                    return Err(Error::ShapeMismatch { expected: mean.len(), actual: a.len() });
                }
                Ok(mean
                    .iter()
                    .zip(log_std)
                    .zip(a)
                    .map(|((m, s), x)| {
                        let z = (x - m) / s.exp();
                        -0.5 * z * z - s - 0.5 * LN_2PI
                    })
                    .sum())
            }
            _ => Err(Error::InvalidAction("action type does not match the policy head".into())),
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            ActionDist::Categorical { logits, log_probs } => {
                // log-sum-exp minus the expected logit
                let lse = logits[0] - log_probs[0];
                lse - log_probs.iter().zip(logits).map(|(l, z)| l.exp() * z).sum::<f64>()
            }
            ActionDist::Gaussian { log_std, .. } => log_std.iter().map(|s| s + 0.5 * (1.0 + LN_2PI)).sum(),
        }
    }
}

/// Full forward pass with the intermediate activations needed for backprop.
pub(crate) struct Forward {
    pub policy: MlpCache,
    pub value: MlpCache,
    pub dist: ActionDist,
}

pub(crate) fn forward_cached(params: &PolicyParams, layout: &Layout, obs: &[f64]) -> Result<Forward> {
    if obs.len() != params.arch.input_dim {
        return Err(Error::ShapeMismatch { expected: params.arch.input_dim, actual: obs.len() });
    }
    let policy = layout.policy.forward(&params.params, obs);
    let value = layout.value.forward(&params.params, obs);
    let dist = match params.arch.head {
        Head::Categorical(_) => ActionDist::categorical(policy.output().to_vec()),
        Head::Gaussian(_) => ActionDist::Gaussian {
            mean: policy.output().to_vec(),
            log_std: params.params[layout.log_std_offset..layout.log_std_offset + layout.log_std_len].to_vec(),
        },
    };
    Ok(Forward { policy, value, dist })
}

pub fn policy_forward(params: &PolicyParams, obs: &[f64]) -> Result<(ActionDist, f64)> {
    let layout = params.arch.layout();
    let f = forward_cached(params, &layout, obs)?;
    Ok((f.dist, f.value.output()[0]))
}
