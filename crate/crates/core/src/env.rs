//! Configuration, action decoding, trade arithmetic and reward terms shared by
//! the single-stock and portfolio environments.

use thiserror::Error;

use crate::marketdata::DataError;

/// Upper bound of a trade fraction after the sentiment bias.
pub const MAX_TRADE_FRACTION: f64 = 0.6;
pub const ACTION_KIND_BOUNDS: (f64, f64) = (0.0, 2.0);
pub const ACTION_AMOUNT_BOUNDS: (f64, f64) = (0.0, 0.5);
/// Share of the raw amount moved per unit of sentiment score.
pub const SENTIMENT_BIAS: f64 = 0.1;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("series too short: {len} bars, need at least {required}")]
    SeriesTooShort { len: usize, required: usize },
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("action has {found} values, expected {expected}")]
    ActionDimension { expected: usize, found: usize },
    #[error("episode already finished; call reset first")]
    EpisodeFinished,
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub initial_balance: f64,
    pub window: usize,
    pub max_steps: usize,
    pub tx_cost_rate: f64,
    pub stability_coef: f64,
    pub sentiment_coef: f64,
    pub vol_damping: f64,
    pub net_worth_floor_frac: f64,
    pub sentiment_enabled: bool,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            initial_balance: 10_000.0,
            window: 5,
            max_steps: 2000,
            tx_cost_rate: 0.001,
            stability_coef: 0.01,
            sentiment_coef: 0.01,
            vol_damping: 10.0,
            net_worth_floor_frac: 0.0,
            sentiment_enabled: false,
            seed: 0,
        }
    }
}

impl EnvConfig {
    /// Portfolio defaults: episodes end below 10% of the starting balance.
    pub fn portfolio() -> Self {
        Self {
            net_worth_floor_frac: 0.1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidConfig(m));
        if !(self.initial_balance.is_finite() && self.initial_balance > 0.0) {
            return bad(format!("initial_balance must be positive, got {}", self.initial_balance));
        }
        if self.window < 2 {
            return bad(format!("window must be at least 2, got {}", self.window));
        }
        for (name, v) in [
            ("tx_cost_rate", self.tx_cost_rate),
            ("stability_coef", self.stability_coef),
            ("sentiment_coef", self.sentiment_coef),
            ("vol_damping", self.vol_damping),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.net_worth_floor_frac) {
            return bad(format!(
                "net_worth_floor_frac must lie in [0, 1), got {}",
                self.net_worth_floor_frac
            ));
        }
        Ok(())
    }

    pub fn min_series_len(&self) -> usize {
        self.window + 2
    }
}

/// Continuous action as emitted by the policy: `kind ∈ [0,2]`, `amount ∈ [0,0.5]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawAction {
    pub kind: f64,
    pub amount: f64,
}

impl RawAction {
    pub fn new(kind: f64, amount: f64) -> Self {
        Self { kind, amount }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Buy,
    Sell,
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeDecision {
    pub side: Side,
    pub fraction: f64,
}

impl TradeDecision {
    pub const HOLD: TradeDecision = TradeDecision {
        side: Side::Hold,
        fraction: 0.0,
    };

    pub fn buy(fraction: f64) -> Self {
        Self {
            side: Side::Buy,
            fraction,
        }
    }

    pub fn sell(fraction: f64) -> Self {
        Self {
            side: Side::Sell,
            fraction,
        }
    }
}

/// Clamps into the action box, then maps `kind < 1` to buy, `kind == 1` to
/// hold and `kind > 1` to sell.
pub fn decode_action(raw: RawAction) -> Result<TradeDecision, EnvError> {
    if !raw.kind.is_finite() || !raw.amount.is_finite() {
        return Err(EnvError::InvalidAction(format!(
            "non-finite action ({}, {})",
            raw.kind, raw.amount
        )));
    }
    let kind = raw.kind.clamp(ACTION_KIND_BOUNDS.0, ACTION_KIND_BOUNDS.1);
    let amount = raw.amount.clamp(ACTION_AMOUNT_BOUNDS.0, ACTION_AMOUNT_BOUNDS.1);
    Ok(if kind < 1.0 {
        TradeDecision::buy(amount)
    } else if kind > 1.0 {
        TradeDecision::sell(amount)
    } else {
        TradeDecision::HOLD
    })
}

/// Leans the trade size toward the sentiment: positive scores enlarge buys
/// and shrink sells, negative scores do the opposite.
pub fn apply_sentiment_bias(decision: TradeDecision, score: f64) -> TradeDecision {
    let shift = SENTIMENT_BIAS * score;
    match decision.side {
        Side::Buy => TradeDecision::buy((decision.fraction + shift).clamp(0.0, MAX_TRADE_FRACTION)),
        Side::Sell => TradeDecision::sell((decision.fraction - shift).clamp(0.0, MAX_TRADE_FRACTION)),
        Side::Hold => decision,
    }
}

/// Holdings in one asset.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub shares: f64,
    pub cost_basis: f64,
}

/// Result of filling one decision against cash and a position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fill {
    pub balance: f64,
    pub position: Position,
    pub notional: f64,
}

/// Buys spend `fraction` of the cash, sells release `fraction` of the shares,
/// all at `price`. Fractional shares are allowed.
pub fn fill(balance: f64, position: Position, decision: TradeDecision, price: f64) -> Fill {
    debug_assert!(price > 0.0);
    let fraction = decision.fraction.clamp(0.0, 1.0);
    match decision.side {
        Side::Buy if fraction > 0.0 => {
            let bought = balance / price * fraction;
            let cost = bought * price;
            let shares = position.shares + bought;
            let cost_basis = if shares > 0.0 {
                (position.shares * position.cost_basis + cost) / shares
            } else {
                0.0
            };
            Fill {
                balance: (balance - cost).max(0.0),
                position: Position { shares, cost_basis },
                notional: cost,
            }
        }
        Side::Sell if fraction > 0.0 && position.shares > 0.0 => {
            let sold = position.shares * fraction;
            let proceeds = sold * price;
            let shares = (position.shares - sold).max(0.0);
            Fill {
                balance: balance + proceeds,
                position: Position {
                    shares,
                    cost_basis: if shares == 0.0 { 0.0 } else { position.cost_basis },
                },
                notional: proceeds,
            }
        }
        _ => Fill {
            balance,
            position,
            notional: 0.0,
        },
    }
}

/// Sentiment alignment bonus: `|score|` when the score and the realised price
/// move share a (non-zero) sign, damped by `1 + κ·volatility`.
pub fn alignment(score: f64, price_delta: f64, volatility: f64, vol_damping: f64) -> f64 {
    let agree = score != 0.0 && price_delta != 0.0 && score.signum() == price_delta.signum();
    if !agree {
        return 0.0;
    }
    score.abs() / (1.0 + vol_damping * volatility)
}

/// Reward from its parts; every term is scaled by the initial balance.
pub fn combine_reward(
    prev_net_worth: f64,
    net_worth: f64,
    balance: f64,
    notional: f64,
    mean_alignment: f64,
    cfg: &EnvConfig,
) -> f64 {
    let b0 = cfg.initial_balance;
    let mut r = (net_worth - prev_net_worth) / b0
        - cfg.stability_coef * (balance - b0).abs() / b0
        - cfg.tx_cost_rate * notional / b0;
    if cfg.sentiment_enabled {
        r += cfg.sentiment_coef * mean_alignment;
    }
    r
}

/// Next time index; runs off the end wrap back to the first full window.
pub fn advance_index(t: usize, len: usize, window: usize) -> usize {
    if t + 1 >= len {
        window - 1
    } else {
        t + 1
    }
}

/// Per-step bookkeeping surfaced to callers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub net_worth: f64,
    pub balance: f64,
    pub cumulative_profit: f64,
}

/// Environment-agnostic step output with a flat observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccountSnapshot {
    pub net_worth: f64,
    pub balance: f64,
    pub initial_balance: f64,
}

/// Gym-style interface the trainer and evaluator drive.
pub trait Environment {
    fn observation_dim(&self) -> usize;

    /// Per-dimension `(low, high)` box the raw action is clipped into.
    fn action_bounds(&self) -> Vec<(f64, f64)>;

    fn action_dim(&self) -> usize {
        self.action_bounds().len()
    }

    /// Starts a new episode. `Some(seed)` reseeds the start-index RNG.
    fn reset(&mut self, seed: Option<u64>) -> Vec<f64>;

    fn step(&mut self, action: &[f64]) -> Result<Transition, EnvError>;

    fn snapshot(&self) -> AccountSnapshot;
}

/// `[kind, amount]` bounds repeated for each asset.
pub fn interleaved_bounds(n_assets: usize) -> Vec<(f64, f64)> {
    (0..n_assets)
        .flat_map(|_| [ACTION_KIND_BOUNDS, ACTION_AMOUNT_BOUNDS])
        .collect()
}
