//! Episode runner, buy-and-hold baseline, summary statistics and reports.

mod report;
mod svg;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::{EnvError, Environment};
use crate::ppo::{clip_to_bounds, forward, sample_action, PolicyParams, PpoError};

pub use report::{
    emit_report, read_episodes_csv, read_summary_csv, render_episodes_csv, render_summary_csv,
    render_timeseries_csv, ReportFiles, EPISODES_HEADER, SUMMARY_HEADER, TIMESERIES_HEADER,
};

pub const DEFAULT_EPISODES: usize = 100;
pub const DEFAULT_EPISODE_STEPS: usize = 2000;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0}")]
    Empty(String),
    #[error("non-positive price {price} at index {index}")]
    BadPrice { index: usize, price: f64 },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PpoError),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Anything that maps observations to environment actions.
pub trait Policy: Sync {
    fn act(
        &self,
        obs: &[f64],
        bounds: &[(f64, f64)],
        deterministic: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>, PpoError>;
}

impl Policy for PolicyParams {
    fn act(
        &self,
        obs: &[f64],
        bounds: &[(f64, f64)],
        deterministic: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>, PpoError> {
        if deterministic {
            Ok(clip_to_bounds(&forward(self, obs)?.mean, bounds))
        } else {
            Ok(sample_action(self, obs, bounds, rng)?.env_action)
        }
    }
}

/// Always holds: action kind 1 with zero amount for every asset.
#[derive(Debug, Clone, Copy, Default)]
pub struct HoldPolicy;

impl Policy for HoldPolicy {
    fn act(&self, _: &[f64], bounds: &[(f64, f64)], _: bool, _: &mut ChaCha8Rng) -> Result<Vec<f64>, PpoError> {
        Ok((0..bounds.len()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPoint {
    pub net_worth: f64,
    pub balance: f64,
    pub profit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub initial_balance: f64,
    pub final_net_worth: f64,
    pub final_balance: f64,
    /// Always `final_net_worth - initial_balance`.
    pub cumulative_profit: f64,
    /// State after reset followed by the state after every step.
    pub step_series: Vec<StepPoint>,
}

impl EpisodeMetrics {
    pub fn from_series(initial_balance: f64, step_series: Vec<StepPoint>) -> Result<Self, EvalError> {
        let last = *step_series
            .last()
            .ok_or_else(|| EvalError::Empty("episode has no recorded states".into()))?;
        Ok(Self {
            initial_balance,
            final_net_worth: last.net_worth,
            final_balance: last.balance,
            cumulative_profit: last.net_worth - initial_balance,
            step_series,
        })
    }

    pub fn steps(&self) -> usize {
        self.step_series.len() - 1
    }
}

/// Resets `env` with `seed`, then acts until the episode ends or `max_steps` elapse.
///
/// Stochastic actions draw from a generator seeded by `seed` as well, so a
/// repeat with the same seed is identical in either mode.
pub fn run_episode<P: Policy + ?Sized, E: Environment + ?Sized>(
    policy: &P,
    env: &mut E,
    seed: u64,
    deterministic: bool,
    max_steps: usize,
) -> Result<EpisodeMetrics, EvalError> {
    let mut obs = env.reset(Some(seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let bounds = env.action_bounds();
    let snap = env.snapshot();
    let point = |net_worth: f64, balance: f64| StepPoint {
        net_worth,
        balance,
        profit: net_worth - snap.initial_balance,
    };
    let mut series = Vec::with_capacity(max_steps + 1);
    series.push(point(snap.net_worth, snap.balance));
    for _ in 0..max_steps {
        let action = policy.act(&obs, &bounds, deterministic, &mut rng)?;
        let tr = env.step(&action)?;
        series.push(point(tr.info.net_worth, tr.info.balance));
        if tr.done {
            break;
        }
        obs = tr.observation;
    }
    EpisodeMetrics::from_series(snap.initial_balance, series)
}

/// Runs `episodes` episodes; episode `i` uses seed `master_seed + i` and a
/// fresh environment from `make_env(i)`. Results are ordered by episode
/// index whatever the thread count.
pub fn evaluate<P, E, F>(
    policy: &P,
    make_env: F,
    episodes: usize,
    steps: usize,
    master_seed: u64,
    deterministic: bool,
    jobs: usize,
) -> Result<(Vec<EpisodeMetrics>, SummaryStats), EvalError>
where
    P: Policy + ?Sized,
    E: Environment,
    F: Fn(usize) -> Result<E, EnvError> + Sync,
{
    if episodes == 0 {
        return Err(EvalError::Empty("evaluation needs at least one episode".into()));
    }
    let one = |i: usize| -> Result<EpisodeMetrics, EvalError> {
        let mut env = make_env(i)?;
        run_episode(policy, &mut env, master_seed.wrapping_add(i as u64), deterministic, steps)
    };
    let metrics = if jobs <= 1 {
        (0..episodes).map(one).collect::<Result<Vec<_>, _>>()?
    } else {
        let per_thread = episodes.div_ceil(jobs);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..episodes)
                .step_by(per_thread)
                .map(|start| {
                    let one = &one;
                    scope.spawn(move || {
                        (start..(start + per_thread).min(episodes))
                            .map(one)
                            .collect::<Result<Vec<_>, _>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("evaluation worker panicked"))
                .collect::<Result<Vec<_>, _>>()
        })?
        .into_iter()
        .flatten()
        .collect()
    };
    let stats = summarize(&metrics)?;
    Ok((metrics, stats))
}

/// `initial × close_t / close_0` for every t.
pub fn buy_and_hold(closes: &[f64], initial: f64) -> Result<Vec<f64>, EvalError> {
    let first = *closes
        .first()
        .ok_or_else(|| EvalError::Empty("buy-and-hold needs at least one close".into()))?;
    if let Some((index, &price)) = closes.iter().enumerate().find(|(_, p)| !p.is_finite() || **p <= 0.0) {
        return Err(EvalError::BadPrice { index, price });
    }
    Ok(closes.iter().map(|c| initial * c / first).collect())
}

/// Equal-dollar split across assets at the first index, then held.
pub fn equal_split_buy_and_hold(closes: &[Vec<f64>], initial: f64) -> Result<Vec<f64>, EvalError> {
    if closes.is_empty() {
        return Err(EvalError::Empty("equal split needs at least one asset".into()));
    }
    let len = closes[0].len();
    if closes.iter().any(|c| c.len() != len) {
        return Err(EvalError::Empty("asset price series differ in length".into()));
    }
    let share = initial / closes.len() as f64;
    let legs = closes
        .iter()
        .map(|c| buy_and_hold(c, share))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..len).map(|t| legs.iter().map(|leg| leg[t]).sum()).collect())
}

/// Order statistics of one quantity across episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

impl Distribution {
    /// Quartiles interpolate linearly between order statistics.
    pub fn of(values: &[f64]) -> Result<Self, EvalError> {
        if values.is_empty() {
            return Err(EvalError::Empty("cannot summarize zero values".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            median: quantile(&sorted, 0.5),
            q1: quantile(&sorted, 0.25),
            q3: quantile(&sorted, 0.75),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Linear interpolation at rank `(n - 1) p` of an ascending slice.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub episodes: usize,
    pub net_worth: Distribution,
    pub profit: Distribution,
}

pub fn summarize(metrics: &[EpisodeMetrics]) -> Result<SummaryStats, EvalError> {
    let nw: Vec<f64> = metrics.iter().map(|m| m.final_net_worth).collect();
    let profit: Vec<f64> = metrics.iter().map(|m| m.cumulative_profit).collect();
    Ok(SummaryStats {
        episodes: metrics.len(),
        net_worth: Distribution::of(&nw)?,
        profit: Distribution::of(&profit)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;
    use crate::marketdata::{AssetSeries, OhlcvBar};
    use crate::TradingEnv;
    use chrono::NaiveDate;
    use std::sync::Arc;

    fn flat_env() -> TradingEnv {
        let d0 = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let bars = (0..30)
            .map(|i| OhlcvBar::flat(d0 + chrono::Days::new(i), 50.0, 1000.0))
            .collect();
        let series = AssetSeries::without_sentiment("FLAT", bars).unwrap();
        TradingEnv::new(Arc::new(series), EnvConfig::default()).unwrap()
    }

    fn metrics_with_profit(p: f64) -> EpisodeMetrics {
        let pt = StepPoint { net_worth: 100.0 + p, balance: 100.0, profit: p };
        EpisodeMetrics::from_series(100.0, vec![pt]).unwrap()
    }

    #[test]
    fn zero_steps_is_reset_state() {
        let m = run_episode(&HoldPolicy, &mut flat_env(), 1, true, 0).unwrap();
        assert_eq!(m.cumulative_profit, 0.0);
        assert_eq!(m.final_net_worth, 10_000.0);
        assert_eq!(m.steps(), 0);
    }

    #[test]
    fn hold_on_flat_prices_keeps_balance() {
        let m = run_episode(&HoldPolicy, &mut flat_env(), 1, false, 50).unwrap();
        assert_eq!(m.steps(), 50);
        assert!(m.step_series.iter().all(|p| p.balance == 10_000.0 && p.profit == 0.0));
    }

    #[test]
    fn seeded_episodes_repeat() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = PolicyParams::new(29, 2, &[8], -0.5, &mut rng);
        for det in [true, false] {
            let a = run_episode(&params, &mut flat_env(), 5, det, 40).unwrap();
            let b = run_episode(&params, &mut flat_env(), 5, det, 40).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn evaluate_is_independent_of_jobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = PolicyParams::new(29, 2, &[8], -0.5, &mut rng);
        let a = evaluate(&params, |_| Ok(flat_env()), 7, 20, 3, false, 1).unwrap();
        let b = evaluate(&params, |_| Ok(flat_env()), 7, 20, 3, false, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn buy_and_hold_closed_form() {
        assert_eq!(buy_and_hold(&[100.0, 110.0, 121.0], 10_000.0).unwrap(), vec![10_000.0, 11_000.0, 12_100.0]);
        assert_eq!(buy_and_hold(&[7.0; 4], 500.0).unwrap(), vec![500.0; 4]);
        assert!(buy_and_hold(&[], 1.0).is_err());
        assert!(buy_and_hold(&[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn equal_split_closed_form() {
        let nw = equal_split_buy_and_hold(&[vec![100.0, 110.0], vec![20.0, 20.0]], 10_000.0).unwrap();
        assert_eq!(nw, vec![10_000.0, 10_500.0]);
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[metrics_with_profit(0.0), metrics_with_profit(100.0)]).unwrap();
        assert_eq!(s.profit.mean, 50.0);
        assert_eq!(s.profit.median, 50.0);
        let four: Vec<_> = [1.0, 2.0, 3.0, 4.0].map(metrics_with_profit).to_vec();
        assert_eq!(summarize(&four).unwrap().profit.median, 2.5);
        let one = summarize(&[metrics_with_profit(7.0)]).unwrap().profit;
        assert!([one.mean, one.median, one.q1, one.q3, one.min, one.max].iter().all(|v| *v == 7.0));
        assert!(summarize(&[]).is_err());
    }
}
