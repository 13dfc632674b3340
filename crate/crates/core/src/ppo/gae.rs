/// Generalised advantage estimation over one trajectory segment.
///
/// `dones[t]` marks that the episode ended after step `t`; the value of the
/// following state is then ignored. `bootstrap_value` stands in for
/// `V(s_T)` after the last step. Returns `(advantages, returns)`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert!(
        rewards.len() == values.len() && values.len() == dones.len(),
        "GAE inputs must have equal length"
    );
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut next_value = bootstrap_value;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let nonterminal = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * nonterminal - values[t];
        next_adv = delta + gamma * lambda * nonterminal * next_adv;
        advantages[t] = next_adv;
        next_value = values[t];
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_terminal_step() {
        let (a, r) = compute_gae(&[1.0], &[0.0], &[true], 5.0, 0.99, 0.95);
        assert_eq!(a, vec![1.0]);
        assert_eq!(r, vec![1.0]);
    }

    #[test]
    fn two_rewards_undiscounted() {
        let (a, _) = compute_gae(&[1.0, 1.0], &[0.0, 0.0], &[false, true], 0.0, 1.0, 1.0);
        assert_eq!(a, vec![2.0, 1.0]);
    }

    #[test]
    fn lambda_zero_is_td_error() {
        let rewards = [0.5, -1.0, 2.0];
        let values = [0.1, 0.2, 0.3];
        let dones = [false, true, false];
        let (a, _) = compute_gae(&rewards, &values, &dones, 0.7, 0.9, 0.0);
        assert_eq!(a[0], 0.5 + 0.9 * 0.2 - 0.1);
        assert_eq!(a[1], -1.0 + 0.9 * 0.3 * 0.0 - 0.2);
        assert_eq!(a[2], 2.0 + 0.9 * 0.7 - 0.3);
    }
}
