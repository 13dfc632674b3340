//! Actor-critic PPO for continuous actions, written without an autodiff
//! framework: the networks carry their own backward pass.

mod buffer;
mod gae;
mod gradcheck;
mod loss;
mod mlp;
mod model_io;
mod optim;
mod policy;
mod train;

use thiserror::Error;

use crate::env::EnvError;

pub use buffer::RolloutBuffer;
pub use gae::compute_gae;
pub use gradcheck::{grad_check, max_relative_error, numerical_gradient, reference_loss, FD_STEP};
pub use loss::{normalize_advantages, ppo_loss, LossBreakdown, Minibatch};
pub use mlp::{Layer, Mlp, Trace};
pub use model_io::{load_model, parse_model, render_model, save_model, MODEL_HEADER};
pub use optim::{clip_grad_norm, Optimizer, OptimizerKind};
pub use policy::{
    clip_to_bounds, diag_gaussian_entropy, diag_gaussian_log_prob, forward, sample_action,
    ActionSample, PolicyOutput, PolicyParams, LOG_STD_MAX, LOG_STD_MIN,
};
pub use train::{render_training_log, train, write_training_log, IterationLog, TrainedModel, TRAINING_LOG_HEADER};

#[derive(Debug, Error)]
pub enum PpoError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("invalid PPO config: {0}")]
    InvalidConfig(String),
    #[error("numeric failure: {0}")]
    NonFinite(String),
    #[error("unsupported model version `{0}`")]
    Version(String),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("model payload truncated: expected {expected} values, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub learning_rate: f64,
    pub rollout_horizon: usize,
    pub update_epochs: usize,
    pub minibatch_size: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub grad_clip_norm: f64,
    pub total_timesteps: usize,
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
    pub optimizer: OptimizerKind,
    /// Environments stepped per rollout; the horizon is split between them.
    pub num_envs: usize,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            learning_rate: 3e-4,
            rollout_horizon: 2048,
            update_epochs: 10,
            minibatch_size: 64,
            value_coef: 0.5,
            entropy_coef: 0.0,
            grad_clip_norm: 0.5,
            total_timesteps: 20_000,
            hidden: vec![64, 64],
            init_log_std: -0.5,
            optimizer: OptimizerKind::Sgd,
            num_envs: 1,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: String| Err(PpoError::InvalidConfig(m));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad(format!("gae_lambda must lie in [0, 1], got {}", self.gae_lambda));
        }
        for (name, v) in [
            ("clip_eps", self.clip_eps),
            ("learning_rate", self.learning_rate),
            ("grad_clip_norm", self.grad_clip_norm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("value_coef", self.value_coef), ("entropy_coef", self.entropy_coef)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        for (name, v) in [
            ("rollout_horizon", self.rollout_horizon),
            ("update_epochs", self.update_epochs),
            ("minibatch_size", self.minibatch_size),
            ("total_timesteps", self.total_timesteps),
            ("num_envs", self.num_envs),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.num_envs > self.rollout_horizon {
            return bad(format!(
                "num_envs ({}) exceeds rollout_horizon ({})",
                self.num_envs, self.rollout_horizon
            ));
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive".into());
        }
        if !(LOG_STD_MIN..=LOG_STD_MAX).contains(&self.init_log_std) {
            return bad(format!("init_log_std must lie in [{LOG_STD_MIN}, {LOG_STD_MAX}]"));
        }
        Ok(())
    }

    /// Number of collect-then-update phases `train` will run.
    pub fn iterations(&self) -> usize {
        self.total_timesteps.div_ceil(self.rollout_horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_arithmetic() {
        let cfg = PpoConfig { total_timesteps: 256, rollout_horizon: 128, ..Default::default() };
        assert_eq!(cfg.iterations(), 2);
        let cfg = PpoConfig { total_timesteps: 2048, ..Default::default() };
        assert_eq!(cfg.iterations(), 1);
        assert_eq!(PpoConfig::default().iterations(), 10);
    }

    #[test]
    fn config_bounds() {
        assert!(PpoConfig::default().validate().is_ok());
        assert!(PpoConfig { gamma: 0.0, ..Default::default() }.validate().is_err());
        assert!(PpoConfig { gae_lambda: 1.5, ..Default::default() }.validate().is_err());
        assert!(PpoConfig { minibatch_size: 0, ..Default::default() }.validate().is_err());
        assert!(PpoConfig { hidden: vec![8, 0], ..Default::default() }.validate().is_err());
    }
}
