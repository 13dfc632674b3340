//! Multi-asset environment over an aligned [`MarketDataset`].
//!
//! Each asset takes its own `(kind, amount)` pair. Within a step all sells
//! execute first, then all buys, both in the dataset's symbol order; buys draw
//! sequentially on whatever cash remains.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{
    self, advance_index, alignment, apply_sentiment_bias, combine_reward, decode_action,
    AccountSnapshot, EnvConfig, EnvError, Environment, Position, RawAction, Side, StepInfo,
    TradeDecision, Transition,
};
use crate::marketdata::{normalize_window, rolling_volatility, MarketDataset};

/// Per-row account features: position value, cost basis ratio, cash.
pub const ROW_ACCOUNT_FEATURES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioAccount {
    pub balance: f64,
    pub positions: Vec<Position>,
    pub net_worth: f64,
    pub initial_balance: f64,
}

impl PortfolioAccount {
    pub fn new(initial_balance: f64, n_assets: usize) -> Self {
        Self {
            balance: initial_balance,
            positions: vec![Position::default(); n_assets],
            net_worth: initial_balance,
            initial_balance,
        }
    }

    pub fn holdings_value(&self, closes: &[f64]) -> f64 {
        self.positions
            .iter()
            .zip(closes)
            .map(|(p, c)| p.shares * c)
            .sum()
    }

    pub fn mark(&mut self, closes: &[f64]) {
        self.net_worth = self.balance + self.holdings_value(closes);
    }

    pub fn identity_error(&self, closes: &[f64]) -> f64 {
        (self.net_worth - (self.balance + self.holdings_value(closes))).abs() / self.net_worth.abs().max(1.0)
    }
}

/// Observation: one row per asset plus the portfolio net-worth ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioObservation {
    pub rows: Vec<Vec<f64>>,
    pub net_worth_ratio: f64,
}

impl PortfolioObservation {
    /// Rows in order, then the net-worth slot.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.rows.iter().flatten().copied().collect();
        v.push(self.net_worth_ratio);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioInfo {
    pub net_worth: f64,
    pub balance: f64,
    pub holdings: Vec<f64>,
    pub cumulative_profit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioStepResult {
    pub observation: PortfolioObservation,
    pub reward: f64,
    pub done: bool,
    pub info: PortfolioInfo,
    /// Per-asset traded notional, in dataset order.
    pub notionals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PortfolioEnv {
    data: Arc<MarketDataset>,
    cfg: EnvConfig,
    account: PortfolioAccount,
    t: usize,
    steps: usize,
    done: bool,
    rng: ChaCha8Rng,
}

impl PortfolioEnv {
    pub fn new(data: Arc<MarketDataset>, cfg: EnvConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        if data.len() < cfg.min_series_len() {
            return Err(EnvError::SeriesTooShort {
                len: data.len(),
                required: cfg.min_series_len(),
            });
        }
        let mut env = Self {
            account: PortfolioAccount::new(cfg.initial_balance, data.n_assets()),
            t: cfg.window - 1,
            steps: 0,
            done: false,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            data,
            cfg,
        };
        env.preset(None);
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn dataset(&self) -> &MarketDataset {
        &self.data
    }

    pub fn account(&self) -> &PortfolioAccount {
        &self.account
    }

    pub fn n_assets(&self) -> usize {
        self.data.n_assets()
    }

    pub fn time_index(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn closes_at(&self, t: usize) -> Vec<f64> {
        self.data.assets().iter().map(|a| a.close(t)).collect()
    }

    pub fn row_len(&self) -> usize {
        self.cfg.window * 5 + ROW_ACCOUNT_FEATURES + usize::from(self.cfg.sentiment_enabled)
    }

    pub fn obs_len(&self) -> usize {
        self.n_assets() * self.row_len() + 1
    }

    /// Portfolio reset; all assets share the drawn start index.
    pub fn preset(&mut self, seed: Option<u64>) -> PortfolioObservation {
        if let Some(s) = seed {
            self.rng = ChaCha8Rng::seed_from_u64(s);
        }
        self.account = PortfolioAccount::new(self.cfg.initial_balance, self.n_assets());
        self.t = self.rng.random_range(self.cfg.window - 1..=self.data.len() - 2);
        self.steps = 0;
        self.done = false;
        self.pobservation()
    }

    /// Decodes a flat `[kind₀, amount₀, kind₁, amount₁, …]` action.
    pub fn decisions(&self, action: &[f64]) -> Result<Vec<TradeDecision>, EnvError> {
        let expected = 2 * self.n_assets();
        if action.len() != expected {
            return Err(EnvError::ActionDimension {
                expected,
                found: action.len(),
            });
        }
        action
            .chunks_exact(2)
            .zip(self.data.assets())
            .map(|(pair, asset)| {
                let d = decode_action(RawAction::new(pair[0], pair[1]))?;
                Ok(if self.cfg.sentiment_enabled {
                    apply_sentiment_bias(d, asset.score(self.t))
                } else {
                    d
                })
            })
            .collect()
    }

    pub fn pstep(&mut self, action: &[f64]) -> Result<PortfolioStepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        let decisions = self.decisions(action)?;
        self.step_decisions(&decisions)
    }

    /// Executes already decoded (and biased) per-asset decisions.
    pub fn step_decisions(&mut self, decisions: &[TradeDecision]) -> Result<PortfolioStepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        let n = self.n_assets();
        if decisions.len() != n {
            return Err(EnvError::ActionDimension {
                expected: 2 * n,
                found: 2 * decisions.len(),
            });
        }
        let t0 = self.t;
        let closes = self.closes_at(t0);
        self.account.mark(&closes);
        let prev_net_worth = self.account.net_worth;

        let mut notionals = vec![0.0; n];
        for side in [Side::Sell, Side::Buy] {
            for i in (0..n).filter(|&i| decisions[i].side == side) {
                let f = env::fill(self.account.balance, self.account.positions[i], decisions[i], closes[i]);
                self.account.balance = f.balance;
                self.account.positions[i] = f.position;
                notionals[i] = f.notional;
            }
        }
        let total_notional: f64 = notionals.iter().sum();

        self.t = advance_index(t0, self.data.len(), self.cfg.window);
        let new_closes = self.closes_at(self.t);
        self.account.mark(&new_closes);

        let align_sum: f64 = self
            .data
            .assets()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let vol = rolling_volatility(a, t0, self.cfg.window);
                alignment(a.score(t0), new_closes[i] - closes[i], vol, self.cfg.vol_damping)
            })
            .sum();
        let reward = combine_reward(
            prev_net_worth,
            self.account.net_worth,
            self.account.balance,
            total_notional,
            align_sum / n as f64,
            &self.cfg,
        );

        self.steps += 1;
        self.done = self.account.net_worth <= self.cfg.net_worth_floor_frac * self.cfg.initial_balance
            || self.steps >= self.cfg.max_steps;

        Ok(PortfolioStepResult {
            observation: self.pobservation(),
            reward,
            done: self.done,
            info: self.info(),
            notionals,
        })
    }

    pub fn info(&self) -> PortfolioInfo {
        PortfolioInfo {
            net_worth: self.account.net_worth,
            balance: self.account.balance,
            holdings: self.account.positions.iter().map(|p| p.shares).collect(),
            cumulative_profit: self.account.net_worth - self.cfg.initial_balance,
        }
    }

    pub fn pobservation(&self) -> PortfolioObservation {
        let b0 = self.cfg.initial_balance;
        let rows = self
            .data
            .assets()
            .iter()
            .zip(&self.account.positions)
            .map(|(asset, pos)| {
                let close = asset.close(self.t);
                let mut row = normalize_window(asset, self.t, self.cfg.window)
                    .expect("time index always covers a full window")
                    .flatten();
                row.push(pos.shares * close / b0);
                row.push(if pos.shares > 0.0 { pos.cost_basis / close } else { 0.0 });
                row.push(self.account.balance / b0);
                if self.cfg.sentiment_enabled {
                    row.push(asset.score(self.t));
                }
                row
            })
            .collect();
        PortfolioObservation {
            rows,
            net_worth_ratio: self.account.net_worth / b0,
        }
    }
}

impl Environment for PortfolioEnv {
    fn observation_dim(&self) -> usize {
        self.obs_len()
    }

    fn action_bounds(&self) -> Vec<(f64, f64)> {
        env::interleaved_bounds(self.n_assets())
    }

    fn reset(&mut self, seed: Option<u64>) -> Vec<f64> {
        self.preset(seed).flatten()
    }

    fn step(&mut self, action: &[f64]) -> Result<Transition, EnvError> {
        let r = self.pstep(action)?;
        Ok(Transition {
            observation: r.observation.flatten(),
            reward: r.reward,
            done: r.done,
            info: StepInfo {
                net_worth: r.info.net_worth,
                balance: r.info.balance,
                cumulative_profit: r.info.cumulative_profit,
            },
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
