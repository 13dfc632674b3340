/// Trajectory storage for one environment between policy updates.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    capacity: usize,
    pub observations: Vec<Vec<f64>>,
    /// Unclipped policy samples.
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub values: Vec<f64>,
}

impl RolloutBuffer {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            capacity,
            observations: Vec::with_capacity(capacity),
            actions: Vec::with_capacity(capacity),
            log_probs: Vec::with_capacity(capacity),
            rewards: Vec::with_capacity(capacity),
            dones: Vec::with_capacity(capacity),
            values: Vec::with_capacity(capacity),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(&mut self, observation: Vec<f64>, action: Vec<f64>, log_prob: f64, reward: f64, done: bool, value: f64) {
        debug_assert!(!self.is_full(), "rollout buffer overflow");
        self.observations.push(observation);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.dones.push(done);
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.len() >= self.capacity
    }

    pub fn clear(&mut self) {
        self.observations.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.rewards.clear();
        self.dones.clear();
        self.values.clear();
    }

    /// Every stored scalar and vector entry is finite.
    pub fn is_finite(&self) -> bool {
        self.log_probs
            .iter()
            .chain(&self.rewards)
            .chain(&self.values)
            .chain(self.observations.iter().flatten())
            .chain(self.actions.iter().flatten())
            .all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_and_clears() {
        let mut b = RolloutBuffer::with_capacity(2);
        b.push(vec![0.0], vec![1.0, 0.1], -1.0, 0.5, false, 0.2);
        assert!(!b.is_full());
        b.push(vec![1.0], vec![0.5, 0.2], -1.2, 0.1, true, 0.1);
        assert!(b.is_full());
        assert!(b.is_finite());
        assert_eq!(b.len(), 2);
        b.clear();
        assert!(b.is_empty());
    }
}
