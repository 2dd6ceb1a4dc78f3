mod common;

use common::*;
use ctxreward::model::{CorrespondenceClass, Review};
use ctxreward::reward::{
    grpo_advantages, score_candidates, score_review, simulate_grpo, Candidate, RewardConfig,
    ToyPolicy,
};

#[test]
fn fixture_review_matches_hand_trace() {
    let review = Review::from_raw(read_text(fixture("review.txt"))).unwrap();
    assert_eq!(review.sentences.len(), 3);
    let report = score_review(&RewardConfig::default(), &rule_backends(), &manuscript(), &contexts(), &review).unwrap();

    // Lexicon hits per sentence (3 sentences): example 1, importance 1,
    // materials 2, praise 1, presentation 2, results 1, suggestion 1.
    let a = &report.aspects;
    let thirds = [a.criticism, a.example, a.importance_relevance, a.materials_methods, a.praise,
        a.presentation_reporting, a.results_discussion, a.suggestion_solution].map(|v| (v * 3.0).round());
    assert_eq!(thirds, [0.0, 1.0, 1.0, 2.0, 1.0, 2.0, 1.0, 1.0]);
    // 4 of 32 review tokens match the 4-token body in 2 chunks:
    // F = 10PR/(R+9P) = 10/17, penalty = 0.5 (2/4)^3 = 1/16.
    assert!((a.meteor - 75.0 / 136.0).abs() < 1e-12);

    let classes: Vec<_> = report.figure_verdicts.iter().map(|v| v.class()).collect();
    assert_eq!(classes, [
        CorrespondenceClass::RelevantConsistent,
        CorrespondenceClass::IrrelevantConsistent,
        CorrespondenceClass::RelevantConflicting,
    ]);
    let r = report.reward;
    assert_eq!((r.corresp_fig, r.corresp_nov, r.format), (0.5, 1.0, 1.0));
    assert!((r.total - (5.5 + 75.0 / 136.0)).abs() < 1e-12);
}

#[test]
fn fixture_group_has_unit_advantages() {
    let candidates: Vec<String> = records::<Candidate>("group_candidates.jsonl").into_iter().map(|c| c.text).collect();
    let config = RewardConfig { group_size: 2, ..RewardConfig::default() };
    let scored = score_candidates(&config, &rule_backends(), &manuscript(), &contexts(), &candidates).unwrap();
    assert_eq!(scored.group.rewards, [6.5, 4.5]);
    assert_eq!(scored.group.advantages, [1.0, -1.0]);
    let second = &scored.candidates[1].reward;
    assert_eq!((second.quality, second.corresp_fig, second.corresp_nov, second.format), (3.5, 0.0, 1.0, 0.0));
}

#[test]
fn identical_fixture_candidates_have_zero_advantages() {
    let candidates: Vec<String> = records::<Candidate>("identical_candidates.jsonl").into_iter().map(|c| c.text).collect();
    let config = RewardConfig { group_size: 4, ..RewardConfig::default() };
    let scored = score_candidates(&config, &rule_backends(), &manuscript(), &contexts(), &candidates).unwrap();
    assert_eq!(scored.group.advantages, [0.0; 4]);
}

/// Expected logit-gap recursion for two templates with rewards [0, 1]:
/// a group with n rewarded samples (0 < n < G) moves the gap by
/// 2 lr G sqrt(q (1 - q)), q = n / G, so the expected step is that quantity
/// averaged over n ~ Binomial(G, p).
fn expected_gap_recursion(lr: f64, g: usize, steps: usize) -> Vec<f64> {
    let mut gap = 0.0f64;
    let mut probs = vec![0.5];
    for _ in 0..steps {
        let p = 1.0 / (1.0 + (-gap).exp());
        let mut step = 0.0;
        for n in 1..g {
            let q = n as f64 / g as f64;
            let choose = (0..n).fold(1.0, |acc, i| acc * (g - i) as f64 / (i + 1) as f64);
            let pmf = choose * p.powi(n as i32) * (1.0 - p).powi((g - n) as i32);
            step += pmf * 2.0 * lr * g as f64 * (q * (1.0 - q)).sqrt();
        }
        gap += step;
        probs.push(1.0 / (1.0 + (-gap).exp()));
    }
    probs
}

#[test]
fn bandit_learns_the_rewarded_template() {
    let policy = ToyPolicy::uniform(2, 0.1);
    let config = RewardConfig { group_size: 8, ..RewardConfig::default() };
    let oracle = expected_gap_recursion(0.1, 8, 500);
    for seed in 0..5u64 {
        let trajectory = simulate_grpo(&policy, &config, &[0.0, 1.0], 500, seed).unwrap();
        let last = trajectory.last().unwrap();
        assert!(last.probabilities[1] > 0.9, "seed {seed}: {}", last.probabilities[1]);
        assert!((last.probabilities[1] - oracle[500]).abs() <= 0.05);
        for window in trajectory.windows(51) {
            assert!(window[50].expected_reward >= window[0].expected_reward, "seed {seed}");
        }
    }
}

#[test]
fn oracle_recursion_is_sane() {
    let probs = expected_gap_recursion(0.1, 8, 500);
    assert_eq!(probs[0], 0.5);
    assert!(probs.windows(2).all(|w| w[1] >= w[0]));
    assert!(probs[500] > 0.99);
}

#[test]
fn advantages_on_fixture_totals() {
    assert_eq!(grpo_advantages(&[6.5, 4.5], 1e-8).unwrap(), [1.0, -1.0]);
}
