use super::policy::{diag_gaussian_entropy, PolicyParams, LOG_STD_MAX, LOG_STD_MIN};
use super::{PpoConfig, PpoError};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Minibatch {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    /// Share of samples whose ratio left `[1-ε, 1+ε]`.
    pub clip_fraction: f64,
}

/// Shifts to zero mean and scales to unit (population) std, with a 1e-8 guard.
pub fn normalize_advantages(advantages: &mut [f64]) {
    let n = advantages.len();
    if n == 0 {
        return;
    }
    let mean = advantages.iter().sum::<f64>() / n as f64;
    let var = advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    advantages.iter_mut().for_each(|a| *a = (*a - mean) / (std + 1e-8));
}

/// Clipped-surrogate PPO loss and its gradient with respect to every parameter.
///
/// Advantages are used as given; callers normalise per minibatch.
pub fn ppo_loss(
    params: &PolicyParams,
    batch: &Minibatch,
    cfg: &PpoConfig,
) -> Result<(LossBreakdown, PolicyParams), PpoError> {
    let m = batch.len();
    if m == 0 {
        return Err(PpoError::Shape { expected: 1, found: 0 });
    }
    for len in [
        batch.actions.len(),
        batch.old_log_probs.len(),
        batch.advantages.len(),
        batch.returns.len(),
    ] {
        if len != m {
            return Err(PpoError::Shape { expected: m, found: len });
        }
    }

    let log_std = params.effective_log_std();
    let inv_var: Vec<f64> = log_std.iter().map(|s| (-2.0 * s).exp()).collect();
    let mut grads = params.zeros_like();
    let scale = 1.0 / m as f64;
    let (lo, hi) = (1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);

    let mut policy_sum = 0.0;
    let mut value_sum = 0.0;
    let mut clipped = 0usize;

    for i in 0..m {
        let obs = &batch.obs[i];
        params.check_obs(obs)?;
        let action = &batch.actions[i];
        if action.len() != log_std.len() {
            return Err(PpoError::Shape {
                expected: log_std.len(),
                found: action.len(),
            });
        }
        let adv = batch.advantages[i];

        let actor_trace = params.actor.forward_trace(obs);
        let mean = actor_trace.output();
        let log_prob = super::policy::diag_gaussian_log_prob(mean, &log_std, action);
        let ratio = (log_prob - batch.old_log_probs[i]).exp();
        let unclipped = ratio * adv;
        let clipped_obj = ratio.clamp(lo, hi) * adv;
        if !(lo..=hi).contains(&ratio) {
            clipped += 1;
        }
        policy_sum += unclipped.min(clipped_obj);

        // d(-surrogate)/d(log_prob); zero when the clipped branch is active
        let d_logp = if unclipped <= clipped_obj { -unclipped * scale } else { 0.0 };
        if d_logp != 0.0 {
            let grad_mean: Vec<f64> = mean
                .iter()
                .zip(action)
                .zip(&inv_var)
                .map(|((mu, a), iv)| d_logp * (a - mu) * iv)
                .collect();
            params.actor.backward(&actor_trace, &grad_mean, &mut grads.actor);
            for d in 0..log_std.len() {
                let z2 = (action[d] - mean[d]).powi(2) * inv_var[d];
                grads.log_std[d] += d_logp * (z2 - 1.0);
            }
        }

        let critic_trace = params.critic.forward_trace(obs);
        let value = critic_trace.output()[0];
        let err = value - batch.returns[i];
        value_sum += err * err;
        let d_value = cfg.value_coef * 2.0 * err * scale;
        params.critic.backward(&critic_trace, &[d_value], &mut grads.critic);
    }

    // state-independent entropy: identical for every sample
    let entropy = diag_gaussian_entropy(&log_std);
    for g in &mut grads.log_std {
        *g -= cfg.entropy_coef;
    }
    for (g, raw) in grads.log_std.iter_mut().zip(&params.log_std) {
        if !(LOG_STD_MIN..=LOG_STD_MAX).contains(raw) {
            *g = 0.0;
        }
    }

    let policy = -policy_sum * scale;
    let value = value_sum * scale;
    let total = policy + cfg.value_coef * value - cfg.entropy_coef * entropy;
    if !total.is_finite() {
        return Err(PpoError::NonFinite(format!(
            "loss is not finite (policy {policy}, value {value}, entropy {entropy})"
        )));
    }
    Ok((
        LossBreakdown {
            total,
            policy,
            value,
            entropy,
            clip_fraction: clipped as f64 * scale,
        },
        grads,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::policy::diag_gaussian_log_prob;

    fn unit_batch(old_log_prob_shift: f64, adv: f64) -> (PolicyParams, Minibatch) {
        let params = PolicyParams::zeros(1, 1, &[]);
        let lp = diag_gaussian_log_prob(&[0.0], &[0.0], &[0.0]);
        let batch = Minibatch {
            obs: vec![vec![0.0]],
            actions: vec![vec![0.0]],
            old_log_probs: vec![lp - old_log_prob_shift],
            advantages: vec![adv],
            returns: vec![0.0],
        };
        (params, batch)
    }

    #[test]
    fn unit_ratio_gives_negative_mean_advantage() {
        let params = PolicyParams::zeros(1, 1, &[]);
        let lp = diag_gaussian_log_prob(&[0.0], &[0.0], &[0.0]);
        let batch = Minibatch {
            obs: vec![vec![0.0]; 3],
            actions: vec![vec![0.0]; 3],
            old_log_probs: vec![lp; 3],
            advantages: vec![1.0, -2.0, 4.0],
            returns: vec![0.0; 3],
        };
        let (l, _) = ppo_loss(&params, &batch, &PpoConfig::default()).unwrap();
        assert_eq!(l.policy, -1.0);
    }

    #[test]
    fn ratio_two_is_clipped() {
        let (params, batch) = unit_batch(std::f64::consts::LN_2, 1.0);
        let (l, g) = ppo_loss(&params, &batch, &PpoConfig::default()).unwrap();
        assert!((l.policy - (-1.2)).abs() < 1e-12, "{}", l.policy);
        assert_eq!(l.clip_fraction, 1.0);
        // clipped branch carries no policy gradient
        assert_eq!(g.log_std, vec![0.0]);
    }

    #[test]
    fn only_entropy_survives() {
        let params = PolicyParams::zeros(1, 1, &[]);
        let lp = diag_gaussian_log_prob(&[0.0], &[0.0], &[0.3]);
        let batch = Minibatch {
            obs: vec![vec![0.5]],
            actions: vec![vec![0.3]],
            old_log_probs: vec![lp],
            advantages: vec![0.0],
            returns: vec![0.0],
        };
        let cfg = PpoConfig { entropy_coef: 0.05, ..Default::default() };
        let (l, _) = ppo_loss(&params, &batch, &cfg).unwrap();
        assert_eq!(l.total, -0.05 * diag_gaussian_entropy(&[0.0]));
    }

    #[test]
    fn normalized_advantages_have_unit_moments() {
        let mut a = vec![1.0, 5.0, -3.0, 2.5];
        normalize_advantages(&mut a);
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-12);
        assert!((std - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_batch_rejected() {
        let params = PolicyParams::zeros(1, 1, &[]);
        assert!(ppo_loss(&params, &Minibatch::default(), &PpoConfig::default()).is_err());
    }
}
