//! GAE against brute-force returns computed straight from the definition.

use proptest::prelude::*;
use sentio::ppo::compute_gae;

/// Discounted sum of rewards until the episode ends (or the segment does,
/// in which case the bootstrap value closes the sum), minus `V(s_t)`.
fn monte_carlo_advantage(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    (0..rewards.len())
        .map(|t| {
            let mut ret = 0.0;
            let mut discount = 1.0;
            let mut k = t;
            loop {
                ret += discount * rewards[k];
                discount *= gamma;
                if dones[k] {
                    break;
                }
                k += 1;
                if k == rewards.len() {
                    ret += discount * bootstrap;
                    break;
                }
            }
            ret - values[t]
        })
        .collect()
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<bool>, f64, f64)> {
    (1usize..=16).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(prop::bool::weighted(0.2), n),
            -5.0f64..5.0,
            0.5f64..=1.0,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lambda_one_is_discounted_return_minus_value((r, v, d, boot, gamma) in instance()) {
        let (adv, ret) = compute_gae(&r, &v, &d, boot, gamma, 1.0);
        let oracle = monte_carlo_advantage(&r, &v, &d, boot, gamma);
        for t in 0..r.len() {
            prop_assert!((adv[t] - oracle[t]).abs() <= 1e-8, "t={t}: {} vs {}", adv[t], oracle[t]);
            prop_assert_eq!(ret[t], adv[t] + v[t]);
        }
    }

    #[test]
    fn lambda_zero_is_one_step_td((r, v, d, boot, gamma) in instance()) {
        let (adv, _) = compute_gae(&r, &v, &d, boot, gamma, 0.0);
        for t in 0..r.len() {
            let next = if t + 1 < r.len() { v[t + 1] } else { boot };
            let td = if d[t] { r[t] - v[t] } else { r[t] + gamma * next - v[t] };
            prop_assert_eq!(adv[t], td);
        }
    }
}

#[test]
fn done_blocks_bootstrap_and_later_rewards() {
    let (adv, _) = compute_gae(&[1.0, 100.0], &[0.0, 0.0], &[true, false], 1000.0, 0.9, 1.0);
    assert_eq!(adv[0], 1.0);
    assert_eq!(adv[1], 100.0 + 0.9 * 1000.0);
}
