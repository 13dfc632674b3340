//! Account bookkeeping under random action streams.

mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentio::env::Environment;
use sentio::{EnvConfig, MarketDataset, PortfolioEnv, TradingEnv};

fn random_cfg(rng: &mut ChaCha8Rng, portfolio: bool) -> EnvConfig {
    EnvConfig {
        initial_balance: rng.random_range(100.0..1e6),
        window: rng.random_range(2..=6),
        max_steps: rng.random_range(1..=300),
        tx_cost_rate: rng.random_range(0.0..0.01),
        sentiment_enabled: rng.random_bool(0.5),
        seed: rng.random(),
        ..if portfolio { EnvConfig::portfolio() } else { EnvConfig::default() }
    }
}

/// Actions drawn past the bounds on both sides so clamping is exercised too.
fn random_action(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| if i % 2 == 0 { rng.random_range(-0.5..2.5) } else { rng.random_range(-0.2..0.7) })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_stock_identity_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_cfg(&mut rng, false);
        let len = rng.random_range(cfg.window + 2..60);
        let series = Arc::new(common::random_series("X", len, &mut rng));
        let mut env = TradingEnv::new(series, cfg).unwrap();
        for _ in 0..400 {
            let tr = Environment::step(&mut env, &random_action(&mut rng, 2)).unwrap();
            let acct = env.account();
            prop_assert!(acct.identity_error(env.current_close()) <= 1e-9);
            prop_assert!(acct.balance >= 0.0 && acct.shares_held >= 0.0);
            prop_assert!(tr.reward.is_finite());
            if tr.done {
                Environment::reset(&mut env, None);
            }
        }
    }

    #[test]
    fn portfolio_identity_and_cash_conservation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_cfg(&mut rng, true);
        let len = rng.random_range(cfg.window + 2..60);
        let assets = (0..3).map(|i| common::random_series(&format!("S{i}"), len, &mut rng)).collect();
        let data = Arc::new(MarketDataset::new(assets).unwrap());
        let mut env = PortfolioEnv::new(data, cfg).unwrap();
        for _ in 0..400 {
            let before = env.account().balance;
            let closes = env.closes_at(env.time_index());
            let held: Vec<f64> = env.account().positions.iter().map(|p| p.shares).collect();
            let r = env.pstep(&random_action(&mut rng, 6)).unwrap();
            let acct = env.account();
            prop_assert!(acct.identity_error(&env.closes_at(env.time_index())) <= 1e-9);
            prop_assert!(acct.balance >= 0.0);
            prop_assert!(acct.positions.iter().all(|p| p.shares >= 0.0));
            // cash moved equals the signed traded notional
            let flow: f64 = (0..3)
                .map(|i| (held[i] - acct.positions[i].shares) * closes[i])
                .sum();
            prop_assert!((acct.balance - before - flow).abs() <= 1e-9 * before.max(1.0));
            let traded: f64 = r.notionals.iter().sum();
            prop_assert!(traded >= 0.0);
            if r.done {
                env.preset(None);
            }
        }
    }

    #[test]
    fn identical_inputs_replay_bit_for_bit(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_cfg(&mut rng, false);
        let series = Arc::new(common::random_series("X", 40, &mut rng));
        let actions: Vec<Vec<f64>> = (0..50).map(|_| random_action(&mut rng, 2)).collect();
        let run = || {
            let mut env = TradingEnv::new(series.clone(), cfg.clone()).unwrap();
            let mut out = Vec::new();
            for a in &actions {
                let tr = Environment::step(&mut env, a).unwrap();
                let done = tr.done;
                out.push(tr);
                if done {
                    Environment::reset(&mut env, None);
                }
            }
            out
        };
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn all_hold_on_constant_prices_earns_nothing() {
    let series = Arc::new(common::constant_series("C", &[42.0; 30]));
    let mut env = TradingEnv::new(series, EnvConfig::default()).unwrap();
    for _ in 0..100 {
        let tr = Environment::step(&mut env, &[1.0, 0.3]).unwrap();
        assert_eq!(tr.reward, 0.0);
        assert_eq!(tr.info.net_worth, 10_000.0);
    }
}

#[test]
fn buying_into_a_rising_series_raises_net_worth() {
    let closes: Vec<f64> = (0..20).map(|i| 100.0 + i as f64).collect();
    let series = Arc::new(common::constant_series("UP", &closes));
    let mut env = TradingEnv::new(series, EnvConfig::default()).unwrap();
    env.reset(Some(0));
    // keep clear of the wrap-around at the end of the series
    while env.time_index() + 6 >= closes.len() {
        env.reset(None);
    }
    let mut last = env.account().net_worth;
    for _ in 0..5 {
        let tr = Environment::step(&mut env, &[0.0, 0.5]).unwrap();
        assert!(tr.info.net_worth > last);
        last = tr.info.net_worth;
    }
}
