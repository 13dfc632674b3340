use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp::Mlp;
use super::PpoError;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Actor mean network, state-independent log-std, and critic `V(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub log_std: Vec<f64>,
    pub critic: Mlp,
}

impl PolicyParams {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        init_log_std: f64,
        rng: &mut R,
    ) -> Self {
        let sizes = |out: usize| {
            let mut s = vec![obs_dim];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        let actor = Mlp::init(&sizes(action_dim), 0.01, rng);
        let critic = Mlp::init(&sizes(1), 1.0, rng);
        Self {
            actor,
            log_std: vec![init_log_std; action_dim],
            critic,
        }
    }

    pub fn zeros(obs_dim: usize, action_dim: usize, hidden: &[usize]) -> Self {
        let sizes = |out: usize| {
            let mut s = vec![obs_dim];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        Self {
            actor: Mlp::zeros(&sizes(action_dim)),
            log_std: vec![0.0; action_dim],
            critic: Mlp::zeros(&sizes(1)),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            actor: self.actor.zeros_like(),
            log_std: vec![0.0; self.log_std.len()],
            critic: self.critic.zeros_like(),
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn n_params(&self) -> usize {
        self.actor.n_params() + self.log_std.len() + self.critic.n_params()
    }

    /// Actor, then log-std, then critic.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        self.actor.flatten_into(&mut v);
        v.extend_from_slice(&self.log_std);
        self.critic.flatten_into(&mut v);
        v
    }

    pub fn assign_flat(&mut self, values: &[f64]) -> Result<(), PpoError> {
        if values.len() != self.n_params() {
            return Err(PpoError::Shape {
                expected: self.n_params(),
                found: values.len(),
            });
        }
        let rest = self.actor.assign_from(values);
        let (ls, rest) = rest.split_at(self.log_std.len());
        self.log_std.copy_from_slice(ls);
        self.critic.assign_from(rest);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite() && self.critic.is_finite() && self.log_std.iter().all(|v| v.is_finite())
    }

    /// Log-std as used by the distribution, clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub fn effective_log_std(&self) -> Vec<f64> {
        self.log_std
            .iter()
            .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect()
    }

    pub fn check_obs(&self, obs: &[f64]) -> Result<(), PpoError> {
        if obs.len() != self.obs_dim() {
            return Err(PpoError::Shape {
                expected: self.obs_dim(),
                found: obs.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub value: f64,
}

pub fn forward(params: &PolicyParams, obs: &[f64]) -> Result<PolicyOutput, PpoError> {
    params.check_obs(obs)?;
    Ok(PolicyOutput {
        mean: params.actor.forward(obs),
        log_std: params.effective_log_std(),
        value: params.critic.forward(obs)[0],
    })
}

/// Log density of `x` under a diagonal Gaussian.
pub fn diag_gaussian_log_prob(mean: &[f64], log_std: &[f64], x: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(x)
        .map(|((m, s), x)| {
            let z = (x - m) / s.exp();
            -0.5 * z * z - s - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

pub fn diag_gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|s| s + 0.5 * (1.0 + (2.0 * PI).ln())).sum()
}

pub fn clip_to_bounds(raw: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    raw.iter()
        .zip(bounds)
        .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    /// Unclipped Gaussian sample; the log-probability refers to this.
    pub raw: Vec<f64>,
    /// `raw` clipped into the environment's action box.
    pub env_action: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
}

pub fn sample_action<R: Rng + ?Sized>(
    params: &PolicyParams,
    obs: &[f64],
    bounds: &[(f64, f64)],
    rng: &mut R,
) -> Result<ActionSample, PpoError> {
    let out = forward(params, obs)?;
    if bounds.len() != out.mean.len() {
        return Err(PpoError::Shape {
            expected: out.mean.len(),
            found: bounds.len(),
        });
    }
    let raw: Vec<f64> = out
        .mean
        .iter()
        .zip(&out.log_std)
        .map(|(m, s)| {
            let z: f64 = rng.sample(StandardNormal);
            m + s.exp() * z
        })
        .collect();
    let log_prob = diag_gaussian_log_prob(&out.mean, &out.log_std, &raw);
    Ok(ActionSample {
        env_action: clip_to_bounds(&raw, bounds),
        raw,
        log_prob,
        value: out.value,
    })
}
