//! Collect-then-update PPO loop.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::buffer::RolloutBuffer;
use super::gae::compute_gae;
use super::loss::{normalize_advantages, ppo_loss, Minibatch};
use super::optim::{clip_grad_norm, Optimizer};
use super::policy::{forward, sample_action, PolicyParams};
use super::{PpoConfig, PpoError};
use crate::env::{EnvError, Environment};

pub const TRAINING_LOG_HEADER: &str = "iteration,timesteps,mean_ep_reward,policy_loss,value_loss,entropy";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    /// Environment steps collected so far.
    pub timesteps: usize,
    /// Mean return of episodes finished this iteration, or of the running
    /// episodes when none finished.
    pub mean_ep_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: PolicyParams,
    pub log: Vec<IterationLog>,
}

pub fn render_training_log(log: &[IterationLog]) -> String {
    let mut out = String::from(TRAINING_LOG_HEADER);
    out.push('\n');
    for row in log {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.iteration, row.timesteps, row.mean_ep_reward, row.policy_loss, row.value_loss, row.entropy
        )
        .unwrap();
    }
    out
}

pub fn write_training_log(log: &[IterationLog], path: &Path) -> Result<(), PpoError> {
    std::fs::write(path, render_training_log(log)).map_err(|source| PpoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Worker<E> {
    env: E,
    obs: Vec<f64>,
    rng: ChaCha8Rng,
    episode_return: f64,
    finished: Vec<f64>,
    buffer: RolloutBuffer,
    bootstrap: f64,
}

impl<E: Environment> Worker<E> {
    fn collect(&mut self, params: &PolicyParams, bounds: &[(f64, f64)], steps: usize) -> Result<(), PpoError> {
        self.buffer = RolloutBuffer::with_capacity(steps);
        self.finished.clear();
        for _ in 0..steps {
            let sample = sample_action(params, &self.obs, bounds, &mut self.rng)?;
            let tr = self.env.step(&sample.env_action)?;
            if !tr.reward.is_finite() {
                return Err(PpoError::NonFinite(format!("environment returned reward {}", tr.reward)));
            }
            self.episode_return += tr.reward;
            let obs = if tr.done {
                self.finished.push(self.episode_return);
                self.episode_return = 0.0;
                self.env.reset(None)
            } else {
                tr.observation
            };
            let prev = std::mem::replace(&mut self.obs, obs);
            self.buffer
                .push(prev, sample.raw, sample.log_prob, tr.reward, tr.done, sample.value);
        }
        self.bootstrap = match self.buffer.dones.last() {
            Some(false) => forward(params, &self.obs)?.value,
            _ => 0.0,
        };
        Ok(())
    }
}

/// Flattened rollout ready for minibatching.
#[derive(Default)]
struct Batch {
    obs: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    log_probs: Vec<f64>,
    advantages: Vec<f64>,
    returns: Vec<f64>,
}

impl Batch {
    fn extend(&mut self, buf: RolloutBuffer, bootstrap: f64, cfg: &PpoConfig) {
        let (adv, ret) = compute_gae(&buf.rewards, &buf.values, &buf.dones, bootstrap, cfg.gamma, cfg.gae_lambda);
        self.obs.extend(buf.observations);
        self.actions.extend(buf.actions);
        self.log_probs.extend(buf.log_probs);
        self.advantages.extend(adv);
        self.returns.extend(ret);
    }

    fn select(&self, idx: &[usize]) -> Minibatch {
        Minibatch {
            obs: idx.iter().map(|&i| self.obs[i].clone()).collect(),
            actions: idx.iter().map(|&i| self.actions[i].clone()).collect(),
            old_log_probs: idx.iter().map(|&i| self.log_probs[i]).collect(),
            advantages: idx.iter().map(|&i| self.advantages[i]).collect(),
            returns: idx.iter().map(|&i| self.returns[i]).collect(),
        }
    }
}

fn collect_all<E: Environment + Send>(
    workers: &mut [Worker<E>],
    params: &PolicyParams,
    bounds: &[(f64, f64)],
    steps: &[usize],
    jobs: usize,
) -> Result<(), PpoError> {
    if jobs <= 1 || workers.len() == 1 {
        for (w, &n) in workers.iter_mut().zip(steps) {
            w.collect(params, bounds, n)?;
        }
        return Ok(());
    }
    let per_thread = workers.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let handles: Vec<_> = workers
            .chunks_mut(per_thread)
            .zip(steps.chunks(per_thread))
            .map(|(ws, ns)| {
                scope.spawn(move || {
                    ws.iter_mut()
                        .zip(ns)
                        .try_for_each(|(w, &n)| w.collect(params, bounds, n))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("rollout worker panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(())
}

/// Trains a policy on environments produced by `make_env(index)`.
///
/// Runs `ceil(total_timesteps / rollout_horizon)` iterations; the last one
/// collects only the remaining steps. Each of the `num_envs` environments
/// has its own sampling stream, so results depend on the seed and
/// `num_envs` but not on `jobs`, which only sets the thread count.
pub fn train<E, F>(mut make_env: F, cfg: &PpoConfig, jobs: usize) -> Result<TrainedModel, PpoError>
where
    E: Environment + Send,
    F: FnMut(usize) -> Result<E, EnvError>,
{
    cfg.validate()?;
    let envs = (0..cfg.num_envs).map(&mut make_env).collect::<Result<Vec<_>, _>>()?;
    let obs_dim = envs[0].observation_dim();
    let bounds = envs[0].action_bounds();
    for e in &envs[1..] {
        if e.observation_dim() != obs_dim || e.action_bounds() != bounds {
            return Err(PpoError::InvalidConfig("environment factory produced differing shapes".into()));
        }
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = PolicyParams::new(obs_dim, bounds.len(), &cfg.hidden, cfg.init_log_std, &mut init_rng);
    let mut update_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    update_rng.set_stream(u64::MAX);

    let mut workers: Vec<Worker<E>> = envs
        .into_iter()
        .enumerate()
        .map(|(k, mut env)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64 + 1);
            Worker {
                obs: env.reset(None),
                env,
                rng,
                episode_return: 0.0,
                finished: Vec::new(),
                buffer: RolloutBuffer::default(),
                bootstrap: 0.0,
            }
        })
        .collect();

    let mut optimizer = Optimizer::new(cfg.optimizer, params.n_params());
    let mut flat = params.flatten();
    let mut log = Vec::with_capacity(cfg.iterations());
    let mut timesteps = 0;

    for iteration in 0..cfg.iterations() {
        let n = cfg.rollout_horizon.min(cfg.total_timesteps - timesteps);
        let steps: Vec<usize> = (0..cfg.num_envs)
            .map(|k| n / cfg.num_envs + usize::from(k < n % cfg.num_envs))
            .collect();
        collect_all(&mut workers, &params, &bounds, &steps, jobs)?;
        timesteps += n;

        let finished: Vec<f64> = workers.iter().flat_map(|w| w.finished.iter().copied()).collect();
        let mean_ep_reward = if finished.is_empty() {
            workers.iter().map(|w| w.episode_return).sum::<f64>() / workers.len() as f64
        } else {
            finished.iter().sum::<f64>() / finished.len() as f64
        };

        let mut batch = Batch::default();
        for w in &mut workers {
            let buf = std::mem::take(&mut w.buffer);
            if !buf.is_empty() {
                if !buf.is_finite() {
                    return Err(PpoError::NonFinite(format!("rollout contains non-finite values at iteration {iteration}")));
                }
                batch.extend(buf, w.bootstrap, cfg);
            }
        }

        let mut idx: Vec<usize> = (0..batch.obs.len()).collect();
        let (mut pl, mut vl, mut ent, mut updates) = (0.0, 0.0, 0.0, 0usize);
        for _ in 0..cfg.update_epochs {
            idx.shuffle(&mut update_rng);
            for chunk in idx.chunks(cfg.minibatch_size) {
                let mut mb = batch.select(chunk);
                normalize_advantages(&mut mb.advantages);
                let (loss, grads) = ppo_loss(&params, &mb, cfg)?;
                let mut g = grads.flatten();
                clip_grad_norm(&mut g, cfg.grad_clip_norm);
                optimizer.step(&mut flat, &g, cfg.learning_rate);
                params.assign_flat(&flat)?;
                if !params.is_finite() {
                    return Err(PpoError::NonFinite(format!(
                        "parameters became non-finite at iteration {iteration}"
                    )));
                }
                pl += loss.policy;
                vl += loss.value;
                ent += loss.entropy;
                updates += 1;
            }
        }
        let u = updates.max(1) as f64;
        let row = IterationLog {
            iteration,
            timesteps,
            mean_ep_reward,
            policy_loss: pl / u,
            value_loss: vl / u,
            entropy: ent / u,
        };
        log::debug!("ppo iteration {row:?}");
        log.push(row);
    }

    Ok(TrainedModel { params, log })
}
