use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::gae::compute_gae;
use super::network::{forward_cached, ActionDist, Head, PolicyParams};
use crate::error::{Error, Result};
use crate::trajectory::{Action, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub rollout_length: usize,
    pub epochs: usize,
    pub minibatches: usize,
    pub clip_range: f64,
    pub workers: usize,
    pub learning_rate: f64,
    pub adam_eps: f64,
    pub max_grad_norm: f64,
    pub value_clip: bool,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub return_normalization: bool,
}

impl PpoConfig {
    /// Lava and maze settings.
    pub fn grid() -> Self {
        PpoConfig {
            gamma: 0.995,
            gae_lambda: 0.95,
            rollout_length: 256,
            epochs: 5,
            minibatches: 1,
            clip_range: 0.2,
            workers: 32,
            learning_rate: 1e-4,
            adam_eps: 1e-5,
            max_grad_norm: 0.5,
            value_clip: true,
            value_coef: 0.5,
            entropy_coef: 0.0,
            return_normalization: false,
        }
    }

    /// Walker settings.
    pub fn terrain() -> Self {
        PpoConfig {
            gamma: 0.99,
            gae_lambda: 0.9,
            rollout_length: 2000,
            epochs: 5,
            minibatches: 32,
            clip_range: 0.2,
            workers: 16,
            learning_rate: 3e-4,
            adam_eps: 1e-5,
            max_grad_norm: 0.5,
            value_clip: false,
            value_coef: 0.5,
            entropy_coef: 1e-3,
            return_normalization: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("gamma", self.gamma)?;
        unit("gae_lambda", self.gae_lambda)?;
        if !(self.clip_range > 0.0) {
            return Err(Error::Config(format!("clip_range must be > 0, got {}", self.clip_range)));
        }
        for (name, v) in [
            ("rollout_length", self.rollout_length),
            ("epochs", self.epochs),
            ("minibatches", self.minibatches),
            ("workers", self.workers),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("adam_eps", self.adam_eps),
            ("max_grad_norm", self.max_grad_norm),
            ("value_coef", self.value_coef),
            ("entropy_coef", self.entropy_coef),
        ] {
            if !(v >= 0.0) || v.is_nan() {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::Config("adam_eps must be > 0".into()));
        }
        Ok(())
    }
}

/// One transition prepared for the surrogate loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub observation: Vec<f64>,
    pub action: Action,
    pub old_log_prob: f64,
    pub old_value: f64,
    pub advantage: f64,
    pub ret: f64,
}

/// Flatten trajectories into samples with GAE targets; advantages are
/// normalized over the whole batch.
pub fn build_batch(trajectories: &[Trajectory], config: &PpoConfig) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    for traj in trajectories {
        traj.validate()?;
        let gae = compute_gae(traj, config.gamma, config.gae_lambda);
        for t in 0..traj.len() {
            samples.push(Sample {
                observation: traj.observations[t].clone(),
                action: traj.actions[t].clone(),
                old_log_prob: traj.log_probs[t],
                old_value: traj.values[t],
                advantage: gae.advantages[t],
                ret: gae.returns[t],
            });
        }
    }
    if samples.is_empty() {
        return Err(Error::invalid("empty training batch"));
    }
    normalize_advantages(&mut samples);
    Ok(samples)
}

pub fn normalize_advantages(samples: &mut [Sample]) {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.advantage).sum::<f64>() / n;
    let var = samples.iter().map(|s| (s.advantage - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for s in samples {
        s.advantage = (s.advantage - mean) / (std + 1e-8);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Total PPO loss over `samples` (means over the minibatch) and its exact
/// gradient with respect to every parameter:
/// `-min(r A, clip(r) A) + c_v * value_loss - c_e * entropy`.
pub fn loss_and_grad(params: &PolicyParams, samples: &[Sample], config: &PpoConfig) -> Result<(LossBreakdown, Vec<f64>)> {
    let layout = params.arch.layout();
    let n = samples.len() as f64;
    let eps = config.clip_range;
    let mut grad = vec![0.0; params.params.len()];
    let mut out = LossBreakdown::default();
    let mut d_log_std = vec![0.0; layout.log_std_len];

    for s in samples {
        let f = forward_cached(params, &layout, &s.observation)?;
        let log_prob = f.dist.log_prob(&s.action)?;
        let entropy = f.dist.entropy();
        let ratio = (log_prob - s.old_log_prob).exp();
        let a = s.advantage;
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
        let unclipped_obj = ratio * a;
        let clipped_obj = clipped * a;
        let surrogate = unclipped_obj.min(clipped_obj);
        let d_surr_d_ratio = if unclipped_obj <= clipped_obj || (ratio - clipped) == 0.0 { a } else { 0.0 };
        if (ratio - 1.0).abs() > eps {
            out.clip_fraction += 1.0 / n;
        }
        out.approx_kl += (s.old_log_prob - log_prob) / n;
        out.policy_loss -= surrogate / n;
        out.entropy += entropy / n;

        let v = f.value.output()[0];
        let (vloss, d_v) = if config.value_clip {
            let v_clipped = s.old_value + (v - s.old_value).clamp(-eps, eps);
            let l1 = (v - s.ret).powi(2);
            let l2 = (v_clipped - s.ret).powi(2);
            if l1 >= l2 {
                (0.5 * l1, v - s.ret)
            } else {
                let inside = (v - s.old_value).abs() < eps;
                (0.5 * l2, if inside { v_clipped - s.ret } else { 0.0 })
            }
        } else {
            (0.5 * (v - s.ret).powi(2), v - s.ret)
        };
        out.value_loss += vloss / n;

        // d total / d log_prob
        let d_logp = -d_surr_d_ratio * ratio / n;
        let ent_w = -config.entropy_coef / n;
        let d_head: Vec<f64> = match (&f.dist, &s.action) {
            (ActionDist::Categorical { log_probs, .. }, Action::Discrete(act)) => log_probs
                .iter()
                .enumerate()
                .map(|(k, lp)| {
                    let p = lp.exp();
                    let onehot = if k == *act { 1.0 } else { 0.0 };
                    d_logp * (onehot - p) + ent_w * (-p * (lp + entropy))
                })
                .collect(),
            (ActionDist::Gaussian { mean, log_std }, Action::Continuous(x)) => {
                let mut d_mean = Vec::with_capacity(mean.len());
                for i in 0..mean.len() {
                    let var = (2.0 * log_std[i]).exp();
                    let diff = x[i] - mean[i];
                    d_mean.push(d_logp * diff / var);
                    d_log_std[i] += d_logp * (diff * diff / var - 1.0) + ent_w;
                }
                d_mean
            }
            _ => return Err(Error::InvalidAction("action type does not match the policy head".into())),
        };
        layout.policy.backward(&params.params, &f.policy, &d_head, &mut grad);
        layout.value.backward(&params.params, &f.value, &[config.value_coef * d_v / n], &mut grad);
    }
    if let Head::Gaussian(_) = params.arch.head {
        for (g, d) in grad[layout.log_std_offset..layout.log_std_offset + layout.log_std_len].iter_mut().zip(&d_log_std) {
            *g += d;
        }
    }
    out.total = out.policy_loss + config.value_coef * out.value_loss - config.entropy_coef * out.entropy;
    Ok((out, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(n: usize, eps: f64) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0, beta1: 0.9, beta2: 0.999, eps }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powf(self.t as f64);
        let bc2 = 1.0 - self.beta2.powf(self.t as f64);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

pub fn global_norm(grad: &[f64]) -> f64 {
    grad.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Rescale `grad` so its L2 norm is at most `max_norm`; returns the norm
/// before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = global_norm(grad);
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
    pub samples: usize,
}

/// PPO optimizer state. The Adam moments persist across updates.
#[derive(Debug, Clone)]
pub struct Ppo {
    pub config: PpoConfig,
    pub adam: Adam,
}

impl Ppo {
    pub fn new(config: PpoConfig, n_params: usize) -> Self {
        let adam = Adam::new(n_params, config.adam_eps);
        Ppo { config, adam }
    }

    /// `epochs` passes over `minibatches` shuffled splits. On a non-finite
    /// loss or gradient the update is abandoned and `params` is untouched.
    pub fn update<R: rand::Rng + ?Sized>(
        &mut self,
        params: &mut PolicyParams,
        trajectories: &[Trajectory],
        rng: &mut R,
    ) -> Result<UpdateStats> {
        let samples = build_batch(trajectories, &self.config)?;
        self.update_samples(params, &samples, rng)
    }

    pub fn update_samples<R: rand::Rng + ?Sized>(
        &mut self,
        params: &mut PolicyParams,
        samples: &[Sample],
        rng: &mut R,
    ) -> Result<UpdateStats> {
        let cfg = &self.config;
        let mut working = params.clone();
        let mut adam = self.adam.clone();
        let mut stats = UpdateStats { samples: samples.len(), ..Default::default() };
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let splits = cfg.minibatches.min(samples.len());
        let mut steps = 0usize;
        for epoch in 0..cfg.epochs {
            order.shuffle(rng);
            for mb in 0..splits {
                let lo = mb * samples.len() / splits;
                let hi = (mb + 1) * samples.len() / splits;
                let batch: Vec<Sample> = order[lo..hi].iter().map(|&i| samples[i].clone()).collect();
                let (loss, mut grad) = loss_and_grad(&working, &batch, cfg)?;
                let norm = clip_grad_norm(&mut grad, cfg.max_grad_norm);
                if !loss.total.is_finite() || !norm.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "epoch {epoch} minibatch {mb}: policy_loss={} value_loss={} entropy={} grad_norm={norm}",
                        loss.policy_loss, loss.value_loss, loss.entropy
                    )));
                }
                adam.step(&mut working.params, &grad, cfg.learning_rate);
                stats.policy_loss += loss.policy_loss;
                stats.value_loss += loss.value_loss;
                stats.entropy += loss.entropy;
                stats.clip_fraction += loss.clip_fraction;
                stats.approx_kl += loss.approx_kl;
                stats.grad_norm += norm;
                steps += 1;
            }
        }
        if working.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("parameters left the finite range".into()));
        }
        let k = steps.max(1) as f64;
        stats.policy_loss /= k;
        stats.value_loss /= k;
        stats.entropy /= k;
        stats.clip_fraction /= k;
        stats.approx_kl /= k;
        stats.grad_norm /= k;
        *params = working;
        self.adam = adam;
        Ok(stats)
    }
}
