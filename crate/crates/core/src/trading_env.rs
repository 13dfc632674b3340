//! Single-stock trading environment.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{
    self, advance_index, alignment, apply_sentiment_bias, combine_reward, decode_action,
    AccountSnapshot, EnvConfig, EnvError, Environment, Position, RawAction, StepInfo,
    TradeDecision, Transition,
};
use crate::marketdata::{normalize_window, rolling_volatility, AssetSeries};

/// Number of account features appended after the price window.
pub const ACCOUNT_FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccountState {
    pub balance: f64,
    pub shares_held: f64,
    pub cost_basis: f64,
    pub net_worth: f64,
    pub initial_balance: f64,
}

impl AccountState {
    pub fn new(initial_balance: f64) -> Self {
        Self {
            balance: initial_balance,
            shares_held: 0.0,
            cost_basis: 0.0,
            net_worth: initial_balance,
            initial_balance,
        }
    }

    pub fn position(&self) -> Position {
        Position {
            shares: self.shares_held,
            cost_basis: self.cost_basis,
        }
    }

    /// Re-marks net worth at `price`.
    pub fn marked(mut self, price: f64) -> Self {
        self.net_worth = self.balance + self.shares_held * price;
        self
    }

    /// `|net_worth − (balance + shares·price)|` relative to `max(1, net_worth)`.
    pub fn identity_error(&self, price: f64) -> f64 {
        (self.net_worth - (self.balance + self.shares_held * price)).abs() / self.net_worth.abs().max(1.0)
    }
}

/// Applies a decision at `price`; returns the new account and the traded notional.
pub fn execute_trade(account: &AccountState, decision: TradeDecision, price: f64) -> (AccountState, f64) {
    let f = env::fill(account.balance, account.position(), decision, price);
    let next = AccountState {
        balance: f.balance,
        shares_held: f.position.shares,
        cost_basis: f.position.cost_basis,
        net_worth: account.net_worth,
        initial_balance: account.initial_balance,
    }
    .marked(price);
    (next, f.notional)
}

/// Step reward for the single-stock environment.
#[allow(clippy::too_many_arguments)]
pub fn compute_reward(
    prev: &AccountState,
    curr: &AccountState,
    notional: f64,
    score: f64,
    price_delta: f64,
    volatility: f64,
    cfg: &EnvConfig,
) -> f64 {
    let align = alignment(score, price_delta, volatility, cfg.vol_damping);
    combine_reward(prev.net_worth, curr.net_worth, curr.balance, notional, align, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
pub struct TradingEnv {
    series: Arc<AssetSeries>,
    cfg: EnvConfig,
    account: AccountState,
    t: usize,
    steps: usize,
    done: bool,
    rng: ChaCha8Rng,
}

impl TradingEnv {
    pub fn new(series: Arc<AssetSeries>, cfg: EnvConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        if series.len() < cfg.min_series_len() {
            return Err(EnvError::SeriesTooShort {
                len: series.len(),
                required: cfg.min_series_len(),
            });
        }
        let mut env = Self {
            account: AccountState::new(cfg.initial_balance),
            t: cfg.window - 1,
            steps: 0,
            done: false,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            series,
            cfg,
        };
        env.reset(None);
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn series(&self) -> &AssetSeries {
        &self.series
    }

    pub fn account(&self) -> &AccountState {
        &self.account
    }

    pub fn time_index(&self) -> usize {
        self.t
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn current_close(&self) -> f64 {
        self.series.close(self.t)
    }

    pub fn obs_len(&self) -> usize {
        self.cfg.window * 5 + ACCOUNT_FEATURES + usize::from(self.cfg.sentiment_enabled)
    }

    pub fn reset(&mut self, seed: Option<u64>) -> Vec<f64> {
        if let Some(s) = seed {
            self.rng = ChaCha8Rng::seed_from_u64(s);
        }
        self.account = AccountState::new(self.cfg.initial_balance);
        self.t = self.rng.random_range(self.cfg.window - 1..=self.series.len() - 2);
        self.steps = 0;
        self.done = false;
        self.observation()
    }

    /// The decision the environment will execute for `raw` at the current index.
    pub fn effective_decision(&self, raw: RawAction) -> Result<TradeDecision, EnvError> {
        let decision = decode_action(raw)?;
        Ok(if self.cfg.sentiment_enabled {
            apply_sentiment_bias(decision, self.series.score(self.t))
        } else {
            decision
        })
    }

    pub fn step(&mut self, raw: RawAction) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        let decision = self.effective_decision(raw)?;
        self.step_decision(decision)
    }

    /// Executes an already decoded (and biased) decision.
    pub fn step_decision(&mut self, decision: TradeDecision) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        let t0 = self.t;
        let price = self.series.close(t0);
        let prev = self.account.marked(price);
        let (traded, notional) = execute_trade(&prev, decision, price);

        self.t = advance_index(t0, self.series.len(), self.cfg.window);
        let new_price = self.series.close(self.t);
        self.account = traded.marked(new_price);

        let score = self.series.score(t0);
        let volatility = rolling_volatility(&self.series, t0, self.cfg.window);
        let reward = compute_reward(
            &prev,
            &self.account,
            notional,
            score,
            new_price - price,
            volatility,
            &self.cfg,
        );

        self.steps += 1;
        self.done = self.account.net_worth <= self.cfg.net_worth_floor_frac * self.cfg.initial_balance
            || self.steps >= self.cfg.max_steps;

        Ok(StepResult {
            observation: self.observation(),
            reward,
            done: self.done,
            info: self.info(),
        })
    }

    pub fn info(&self) -> StepInfo {
        StepInfo {
            net_worth: self.account.net_worth,
            balance: self.account.balance,
            cumulative_profit: self.account.net_worth - self.cfg.initial_balance,
        }
    }

    /// Normalised price window, account ratios, then the score when enabled.
    pub fn observation(&self) -> Vec<f64> {
        let b0 = self.cfg.initial_balance;
        let close = self.current_close();
        let mut obs = normalize_window(&self.series, self.t, self.cfg.window)
            .expect("time index always covers a full window")
            .flatten();
        obs.reserve(ACCOUNT_FEATURES + 1);
        obs.push(self.account.balance / b0);
        obs.push(self.account.net_worth / b0);
        obs.push(self.account.shares_held * close / b0);
        obs.push(if self.account.shares_held > 0.0 {
            self.account.cost_basis / close
        } else {
            0.0
        });
        if self.cfg.sentiment_enabled {
            obs.push(self.series.score(self.t));
        }
        obs
    }
}

impl Environment for TradingEnv {
    fn observation_dim(&self) -> usize {
        self.obs_len()
    }

    fn action_bounds(&self) -> Vec<(f64, f64)> {
        env::interleaved_bounds(1)
    }

    fn reset(&mut self, seed: Option<u64>) -> Vec<f64> {
        TradingEnv::reset(self, seed)
    }

    fn step(&mut self, action: &[f64]) -> Result<Transition, EnvError> {
        let [kind, amount] = action else {
            return Err(EnvError::ActionDimension {
                expected: 2,
                found: action.len(),
            });
        };
        let r = TradingEnv::step(self, RawAction::new(*kind, *amount))?;
        Ok(Transition {
            observation: r.observation,
            reward: r.reward,
            done: r.done,
            info: r.info,
        })
    }

    fn snapshot(&self) -> AccountSnapshot {
        AccountSnapshot {
            net_worth: self.account.net_worth,
            balance: self.account.balance,
            initial_balance: self.cfg.initial_balance,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::{OhlcvBar, SentimentScore};
    use chrono::{Duration, NaiveDate};

    fn series(closes: &[f64], scores: Option<&[f64]>) -> Arc<AssetSeries> {
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let bars = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| OhlcvBar::flat(start + Duration::days(i as i64), c, 1000.0))
            .collect();
        let scores = match scores {
            Some(s) => s.iter().map(|&v| SentimentScore::new(v).unwrap()).collect(),
            None => vec![SentimentScore::NEUTRAL; closes.len()],
        };
        Arc::new(AssetSeries::new("T", bars, scores).unwrap())
    }

    #[test]
    fn reset_is_seeded() {
        let s = series(&(0..50).map(|i| 100.0 + i as f64).collect::<Vec<_>>(), None);
        let mut a = TradingEnv::new(s.clone(), EnvConfig::default()).unwrap();
        let mut b = TradingEnv::new(s, EnvConfig::default()).unwrap();
        let oa = a.reset(Some(7));
        let ob = b.reset(Some(7));
        assert_eq!(a.time_index(), b.time_index());
        assert_eq!(oa, ob);
        assert_eq!(a.info().net_worth, 10_000.0);
        assert!((4..=48).contains(&a.time_index()));
    }

    #[test]
    fn too_short_series_rejected() {
        let s = series(&[100.0; 6], None);
        assert!(matches!(
            TradingEnv::new(s, EnvConfig::default()),
            Err(EnvError::SeriesTooShort { len: 6, required: 7 })
        ));
    }

    #[test]
    fn execute_trade_examples() {
        let acct = AccountState::new(10_000.0);
        let (a, n) = execute_trade(&acct, TradeDecision::buy(0.2), 100.0);
        assert_eq!((a.shares_held, a.balance, n), (20.0, 8000.0, 2000.0));
        assert_eq!(a.net_worth, 10_000.0);

        let (b, n) = execute_trade(&a, TradeDecision::sell(0.5), 110.0);
        assert_eq!((b.shares_held, b.balance, n), (10.0, 9100.0, 1100.0));

        let (c, n) = execute_trade(&b, TradeDecision::HOLD, 110.0);
        assert_eq!((c, n), (b, 0.0));
    }

    #[test]
    fn compute_reward_examples() {
        let cfg = EnvConfig::default();
        let a = AccountState::new(10_000.0);
        assert_eq!(compute_reward(&a, &a, 0.0, 0.0, 0.0, 0.0, &cfg), 0.0);
        let up = AccountState { net_worth: 10_100.0, ..a };
        assert_eq!(compute_reward(&a, &up, 0.0, 0.0, 0.0, 0.0, &cfg), 0.01);
        let on = EnvConfig { sentiment_enabled: true, ..cfg };
        assert_eq!(compute_reward(&a, &a, 0.0, 1.0, 1.0, 0.0, &on), 0.01);
        // disabled: alignment is ignored
        assert_eq!(compute_reward(&a, &a, 0.0, 1.0, 1.0, 0.0, &cfg), 0.0);
    }

    #[test]
    fn one_step_budget() {
        let s = series(&[100.0; 20], None);
        let cfg = EnvConfig { max_steps: 1, ..Default::default() };
        let mut env = TradingEnv::new(s, cfg).unwrap();
        let r = env.step(RawAction::new(0.3, 0.4)).unwrap();
        assert!(r.done);
        assert!(matches!(env.step(RawAction::new(1.0, 0.0)), Err(EnvError::EpisodeFinished)));
    }

    #[test]
    fn hold_on_constant_prices() {
        let s = series(&[100.0; 20], None);
        let mut env = TradingEnv::new(s, EnvConfig::default()).unwrap();
        for _ in 0..50 {
            let r = env.step(RawAction::new(1.0, 0.5)).unwrap();
            assert_eq!(r.reward, 0.0);
            assert_eq!(r.info.net_worth, 10_000.0);
        }
    }

    #[test]
    fn buying_on_rising_closes_grows_net_worth() {
        let closes: Vec<f64> = (0..40).map(|i| 100.0 + i as f64).collect();
        let s = series(&closes, None);
        let mut env = TradingEnv::new(s, EnvConfig::default()).unwrap();
        env.reset(Some(1));
        // keep clear of the wrap-around
        while env.time_index() > 30 {
            env.reset(None);
        }
        let mut last = env.info().net_worth;
        for _ in 0..5 {
            let r = env.step(RawAction::new(0.0, 0.5)).unwrap();
            assert!(r.info.net_worth > last);
            last = r.info.net_worth;
        }
    }

    #[test]
    fn observation_layout() {
        let s = series(&[100.0; 20], Some(&[0.5; 20]));
        let env = TradingEnv::new(s.clone(), EnvConfig::default()).unwrap();
        let obs = env.observation();
        assert_eq!(obs.len(), 29);
        assert!(obs[..25].iter().all(|&v| v == 1.0));
        assert_eq!(&obs[25..], &[1.0, 1.0, 0.0, 0.0]);

        let on = EnvConfig { sentiment_enabled: true, ..Default::default() };
        let env = TradingEnv::new(s, on).unwrap();
        let obs = env.observation();
        assert_eq!(obs.len(), 30);
        assert_eq!(obs[29], 0.5);
    }

    #[test]
    fn wraps_at_series_end() {
        let closes: Vec<f64> = (0..8).map(|i| 100.0 + i as f64).collect();
        let s = series(&closes, None);
        let mut env = TradingEnv::new(s, EnvConfig::default()).unwrap();
        while env.time_index() != 6 {
            env.reset(None);
        }
        env.step(RawAction::new(1.0, 0.0)).unwrap();
        assert_eq!(env.time_index(), 7);
        env.step(RawAction::new(1.0, 0.0)).unwrap();
        assert_eq!(env.time_index(), 4);
    }

    #[test]
    fn sentiment_bias_applies_only_when_enabled() {
        let s = series(&[100.0; 20], Some(&[1.0; 20]));
        let off = TradingEnv::new(s.clone(), EnvConfig::default()).unwrap();
        let on = TradingEnv::new(s, EnvConfig { sentiment_enabled: true, ..Default::default() }).unwrap();
        let raw = RawAction::new(0.2, 0.2);
        assert_eq!(off.effective_decision(raw).unwrap(), TradeDecision::buy(0.2));
        assert_eq!(on.effective_decision(raw).unwrap().fraction, 0.2 + 0.1);
    }

    #[test]
    fn trait_rejects_wrong_action_length() {
        let s = series(&[100.0; 20], None);
        let mut env = TradingEnv::new(s, EnvConfig::default()).unwrap();
        assert!(matches!(
            Environment::step(&mut env, &[0.5]),
            Err(EnvError::ActionDimension { expected: 2, found: 1 })
        ));
    }
}
