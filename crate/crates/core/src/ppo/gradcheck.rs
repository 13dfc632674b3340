//! Finite-difference verification of the analytic PPO gradient.
//!
//! [`reference_loss`] re-derives the scalar objective from plain forward
//! passes so the numeric route shares nothing with the backward code.

use std::f64::consts::PI;

use super::loss::{ppo_loss, Minibatch};
use super::policy::PolicyParams;
use super::{PpoConfig, PpoError};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Scalar PPO objective evaluated with forward passes only.
pub fn reference_loss(params: &PolicyParams, batch: &Minibatch, cfg: &PpoConfig) -> f64 {
    let m = batch.obs.len() as f64;
    let ls = params.effective_log_std();
    let mut surrogate = 0.0;
    let mut sq_err = 0.0;
    for i in 0..batch.obs.len() {
        let mean = params.actor.forward(&batch.obs[i]);
        let mut log_prob = 0.0;
        for d in 0..ls.len() {
            let sigma = ls[d].exp();
            let diff = batch.actions[i][d] - mean[d];
            log_prob += -(diff * diff) / (2.0 * sigma * sigma) - (sigma * (2.0 * PI).sqrt()).ln();
        }
        let ratio = (log_prob - batch.old_log_probs[i]).exp();
        let a = batch.advantages[i];
        let clipped = ratio.max(1.0 - cfg.clip_eps).min(1.0 + cfg.clip_eps);
        surrogate += (ratio * a).min(clipped * a);
        let v = params.critic.forward(&batch.obs[i])[0];
        sq_err += (v - batch.returns[i]).powi(2);
    }
    let entropy: f64 = ls.iter().map(|s| 0.5 * (2.0 * PI * std::f64::consts::E).ln() + s).sum();
    -surrogate / m + cfg.value_coef * sq_err / m - cfg.entropy_coef * entropy
}

/// Central differences of [`reference_loss`] over the flattened parameters.
pub fn numerical_gradient(params: &PolicyParams, batch: &Minibatch, cfg: &PpoConfig, h: f64) -> Vec<f64> {
    let base = params.flatten();
    let mut probe = params.clone();
    let mut theta = base.clone();
    (0..base.len())
        .map(|k| {
            theta[k] = base[k] + h;
            probe.assign_flat(&theta).expect("same shape");
            let up = reference_loss(&probe, batch, cfg);
            theta[k] = base[k] - h;
            probe.assign_flat(&theta).expect("same shape");
            let down = reference_loss(&probe, batch, cfg);
            theta[k] = base[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `max_k |a_k − n_k| / max(1e-8, |a_k| + |n_k|)`; zero for empty inputs.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / (a.abs() + n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

/// Largest relative disagreement between the analytic and numeric gradients.
pub fn grad_check(params: &PolicyParams, batch: &Minibatch, cfg: &PpoConfig) -> Result<f64, PpoError> {
    let (_, grads) = ppo_loss(params, batch, cfg)?;
    let numeric = numerical_gradient(params, batch, cfg, FD_STEP);
    Ok(max_relative_error(&grads.flatten(), &numeric))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_parameter_set_has_zero_error() {
        assert_eq!(max_relative_error(&[], &[]), 0.0);
    }

    #[test]
    fn reference_matches_analytic_loss_value() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let params = PolicyParams::new(3, 2, &[4], -0.3, &mut rng);
        let batch = Minibatch {
            obs: vec![vec![0.1, -0.4, 0.9], vec![1.0, 0.5, -0.2]],
            actions: vec![vec![0.2, 0.1], vec![-0.5, 0.3]],
            old_log_probs: vec![-1.5, -2.0],
            advantages: vec![0.7, -1.1],
            returns: vec![0.3, -0.6],
        };
        let cfg = PpoConfig { entropy_coef: 0.01, ..Default::default() };
        let (l, _) = ppo_loss(&params, &batch, &cfg).unwrap();
        assert!((l.total - reference_loss(&params, &batch, &cfg)).abs() < 1e-12);
    }
}
