//! Desk-scale GRPO on a softmax policy over a fixed set of review templates.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{grpo_advantages, RewardConfig, RewardError};
use crate::records::Record;

/// Softmax policy over `K` templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    pub logits: Vec<f64>,
    pub learning_rate: f64,
}

impl ToyPolicy {
    pub fn uniform(templates: usize, learning_rate: f64) -> Self {
        ToyPolicy {
            logits: vec![0.0; templates],
            learning_rate,
        }
    }

    fn validate(&self) -> Result<(), RewardError> {
        if self.logits.len() < 2 {
            return Err(RewardError::InvalidConfig(format!(
                "policy needs at least 2 templates, got {}",
                self.logits.len()
            )));
        }
        if self.logits.iter().any(|l| !l.is_finite()) {
            return Err(RewardError::InvalidConfig("logits must be finite".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(RewardError::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn sample(probabilities: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    for (k, p) in probabilities.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return k;
        }
    }
    probabilities.len() - 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub expected_reward: f64,
    pub probabilities: Vec<f64>,
    pub logits: Vec<f64>,
}

impl Record for TrajectoryPoint {
    const SCHEMA: &'static str = "trajectory_point/v1";
}

fn point(step: usize, logits: &[f64], reward_table: &[f64]) -> TrajectoryPoint {
    let probabilities = softmax(logits);
    let expected_reward = probabilities
        .iter()
        .zip(reward_table)
        .map(|(p, r)| p * r)
        .sum();
    TrajectoryPoint {
        step,
        expected_reward,
        probabilities,
        logits: logits.to_vec(),
    }
}

/// Runs `steps` GRPO updates and returns the trajectory, starting with the
/// initial policy at step 0.
///
/// Each step samples `config.group_size` templates from the current policy,
/// looks up their rewards, turns them into group-relative advantages and
/// applies `logits += lr * sum_i a_i * grad log pi(template_i)`, where the
/// softmax score function is `onehot(template_i) - pi`. The trajectory is a
/// pure function of the inputs and `seed`.
pub fn simulate_grpo(
    policy: &ToyPolicy,
    config: &RewardConfig,
    reward_table: &[f64],
    steps: usize,
    seed: u64,
) -> Result<Vec<TrajectoryPoint>, RewardError> {
    policy.validate()?;
    config.validate()?;
    if steps == 0 {
        return Err(RewardError::InvalidConfig("steps must be at least 1".into()));
    }
    if reward_table.len() != policy.logits.len() {
        return Err(RewardError::InvalidConfig(format!(
            "reward table has {} entries for {} templates",
            reward_table.len(),
            policy.logits.len()
        )));
    }
    if let Some(&bad) = reward_table.iter().find(|r| !r.is_finite()) {
        return Err(RewardError::NonFinite(bad));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut logits = policy.logits.clone();
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(point(0, &logits, reward_table));

    for step in 1..=steps {
        let probabilities = softmax(&logits);
        let sampled: Vec<usize> = (0..config.group_size)
            .map(|_| sample(&probabilities, rng.random::<f64>()))
            .collect();
        let rewards: Vec<f64> = sampled.iter().map(|&k| reward_table[k]).collect();
        let advantages = grpo_advantages(&rewards, config.advantage_epsilon)?;

        let mut gradient = vec![0.0; logits.len()];
        for (&k, &a) in sampled.iter().zip(&advantages) {
            if a == 0.0 {
                continue;
            }
            for (j, g) in gradient.iter_mut().enumerate() {
                let indicator = if j == k { 1.0 } else { 0.0 };
                *g += a * (indicator - probabilities[j]);
            }
        }
        for (l, g) in logits.iter_mut().zip(&gradient) {
            *l += policy.learning_rate * g;
        }
        trajectory.push(point(step, &logits, reward_table));
    }
    Ok(trajectory)
}
