//! Sentiment-aware reinforcement-learning trading.
//!
//! The crate is organised bottom-up:
//!
//! - [`marketdata`]: OHLCV/sentiment ingestion, date alignment, window normalisation.
//! - [`sentiment`]: label providers (a deterministic keyword lexicon ships by default).
//! - [`env`]: the shared [`env::Environment`] trait, configuration and account arithmetic.
//! - [`trading_env`] / [`portfolio_env`]: single-stock and multi-asset simulators.
//! - [`ppo`]: a dependency-free actor-critic PPO trainer for continuous actions.
//! - [`evalkit`]: episode runner, buy-and-hold baseline, summary statistics and reports.
//! - [`synthetic`]: deterministic price/sentiment generators for experiments and tests.

pub mod env;
pub mod evalkit;
pub mod marketdata;
pub mod portfolio_env;
pub mod ppo;
pub mod sentiment;
pub mod synthetic;
pub mod trading_env;

pub use env::{EnvConfig, EnvError, Environment};
pub use marketdata::{AssetSeries, DataError, MarketDataset, OhlcvBar, SentimentLabel, SentimentScore};
pub use portfolio_env::PortfolioEnv;
pub use ppo::{PolicyParams, PpoConfig, PpoError, TrainedModel};
pub use trading_env::TradingEnv;
