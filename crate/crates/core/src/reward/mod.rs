//! Composite reward assembly and group-relative advantages.

mod simulator;

pub use simulator::{simulate_grpo, softmax, ToyPolicy, TrajectoryPoint};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correspondence::{
    score_review_against_optional_context, ClassifierBackend, ContextScore, CorrespondenceError,
};
use crate::model::{
    AspectScores, AuxiliaryContext, CompositeReward, ContextKind, Manuscript, Review, RewardGroup,
};
use crate::quality::{
    quality_reward, score_aspects_with, AspectScorerBackend, MeteorReference, QualityError,
};
use crate::records::Record;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("{component} = {value} is outside [0, {max}]")]
    OutOfRange {
        component: &'static str,
        value: f64,
        max: f64,
    },
    #[error("a group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("expected {expected} candidates, got {actual}")]
    GroupSizeMismatch { expected: usize, actual: usize },
    #[error("reward {0} is not finite")]
    NonFinite(f64),
    #[error("invalid reward configuration: {0}")]
    InvalidConfig(String),
    #[error("{slot} context has kind {found:?}")]
    ContextKindMismatch {
        slot: &'static str,
        found: ContextKind,
    },
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
}

/// Per-component weights of the composite reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub quality: f64,
    pub fig: f64,
    pub nov: f64,
    pub format: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            quality: 1.0,
            fig: 1.0,
            nov: 1.0,
            format: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub weights: RewardWeights,
    pub group_size: usize,
    pub advantage_epsilon: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            weights: RewardWeights::default(),
            group_size: 8,
            advantage_epsilon: 1e-8,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        let w = self.weights;
        for (name, value) in [
            ("quality", w.quality),
            ("fig", w.fig),
            ("nov", w.nov),
            ("format", w.format),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(RewardError::InvalidConfig(format!(
                    "weight `{name}` must be a nonnegative finite number, got {value}"
                )));
            }
        }
        if self.group_size < 2 {
            return Err(RewardError::GroupTooSmall(self.group_size));
        }
        if !(self.advantage_epsilon.is_finite() && self.advantage_epsilon > 0.0) {
            return Err(RewardError::InvalidConfig(format!(
                "advantage_epsilon must be positive, got {}",
                self.advantage_epsilon
            )));
        }
        Ok(())
    }
}

/// Rounding slack allowed when checking component bounds.
const BOUND_SLACK: f64 = 1e-9;

fn check_bound(component: &'static str, value: f64, max: f64) -> Result<f64, RewardError> {
    if value.is_finite() && value >= -BOUND_SLACK && value <= max + BOUND_SLACK {
        Ok(value.clamp(0.0, max))
    } else {
        Err(RewardError::OutOfRange {
            component,
            value,
            max,
        })
    }
}

/// Weighted sum of quality (in [0, 9]) and the three unit-bounded components.
pub fn composite_reward(
    config: &RewardConfig,
    quality: f64,
    fig: f64,
    nov: f64,
    format: f64,
) -> Result<CompositeReward, RewardError> {
    let quality = check_bound("quality", quality, 9.0)?;
    let fig = check_bound("corresp_fig", fig, 1.0)?;
    let nov = check_bound("corresp_nov", nov, 1.0)?;
    let format = check_bound("format", format, 1.0)?;
    let w = config.weights;
    Ok(CompositeReward {
        quality,
        corresp_fig: fig,
        corresp_nov: nov,
        format,
        total: w.quality * quality + w.fig * fig + w.nov * nov + w.format * format,
    })
}

/// Group-relative advantages: each reward minus the group mean, divided by
/// the population standard deviation (floored at `epsilon`).
///
/// Deviations are taken from the first reward before averaging, so shifting
/// every reward by a constant leaves the result bit-identical whenever the
/// shifted values are exactly representable. A constant group yields exact
/// zeros.
pub fn grpo_advantages(rewards: &[f64], epsilon: f64) -> Result<Vec<f64>, RewardError> {
    if rewards.len() < 2 {
        return Err(RewardError::GroupTooSmall(rewards.len()));
    }
    if let Some(&bad) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(RewardError::NonFinite(bad));
    }
    let n = rewards.len() as f64;
    let pivot = rewards[0];
    let deviations: Vec<f64> = rewards.iter().map(|r| r - pivot).collect();
    let mean = deviations.iter().sum::<f64>() / n;
    let centered: Vec<f64> = deviations.iter().map(|d| d - mean).collect();
    let std = (centered.iter().map(|c| c * c).sum::<f64>() / n).sqrt();
    let scale = std.max(epsilon);
    Ok(centered.into_iter().map(|c| c / scale).collect())
}

/// Auxiliary contexts offered to the scorer. `None` withholds a context.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Contexts {
    pub figure: Option<AuxiliaryContext>,
    pub novelty: Option<AuxiliaryContext>,
}

impl Contexts {
    pub fn both(figure: AuxiliaryContext, novelty: AuxiliaryContext) -> Self {
        Contexts {
            figure: Some(figure),
            novelty: Some(novelty),
        }
    }

    fn validate(&self) -> Result<(), RewardError> {
        if let Some(c) = &self.figure {
            if c.kind != ContextKind::FigureDetails {
                return Err(RewardError::ContextKindMismatch {
                    slot: "figure",
                    found: c.kind,
                });
            }
        }
        if let Some(c) = &self.novelty {
            if c.kind != ContextKind::NoveltyAssessment {
                return Err(RewardError::ContextKindMismatch {
                    slot: "novelty",
                    found: c.kind,
                });
            }
        }
        Ok(())
    }
}

/// The scorers used to assemble a composite reward.
#[derive(Debug, Clone)]
pub struct ScoringBackends {
    pub aspects: AspectScorerBackend,
    pub figure: ClassifierBackend,
    pub novelty: ClassifierBackend,
    pub meteor_reference: MeteorReference,
}

/// Everything computed for one review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewReport {
    pub manuscript_id: String,
    pub aspects: AspectScores,
    pub reward: CompositeReward,
    pub sentences: Vec<String>,
    pub figure_verdicts: Vec<crate::model::SentenceVerdict>,
    pub novelty_verdicts: Vec<crate::model::SentenceVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Record for ReviewReport {
    const SCHEMA: &'static str = "review_report/v1";
}

/// Scores a preprocessed review end to end.
pub fn score_review(
    config: &RewardConfig,
    backends: &ScoringBackends,
    manuscript: &Manuscript,
    contexts: &Contexts,
    review: &Review,
) -> Result<ReviewReport, RewardError> {
    contexts.validate()?;
    let aspects = score_aspects_with(
        &backends.aspects,
        review,
        manuscript,
        backends.meteor_reference,
    )?;
    let (figure, novelty) = rayon::join(
        || score_review_against_optional_context(&backends.figure, review, contexts.figure.as_ref()),
        || {
            score_review_against_optional_context(
                &backends.novelty,
                review,
                contexts.novelty.as_ref(),
            )
        },
    );
    let (figure, novelty): (ContextScore, ContextScore) = (figure?, novelty?);
    let reward = composite_reward(
        config,
        quality_reward(&aspects),
        figure.score,
        novelty.score,
        review.format_reward(),
    )?;
    Ok(ReviewReport {
        manuscript_id: manuscript.id.clone(),
        aspects,
        reward,
        sentences: review.sentences.clone(),
        figure_verdicts: figure.verdicts,
        novelty_verdicts: novelty.verdicts,
        note: None,
    })
}

/// One raw sampled review, as stored in candidate files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
}

impl Record for Candidate {
    const SCHEMA: &'static str = "candidate/v1";
}

/// A scored group: the advantages plus every candidate's report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredGroup {
    pub group: RewardGroup,
    pub candidates: Vec<ReviewReport>,
}

fn degraded_report(manuscript: &Manuscript, review: &Review, note: &str) -> ReviewReport {
    ReviewReport {
        manuscript_id: manuscript.id.clone(),
        aspects: AspectScores::uniform(0.0),
        reward: CompositeReward {
            quality: 0.0,
            corresp_fig: 0.0,
            corresp_nov: 0.0,
            format: 0.0,
            total: 0.0,
        },
        sentences: review.sentences.clone(),
        figure_verdicts: Vec::new(),
        novelty_verdicts: Vec::new(),
        note: Some(note.to_string()),
    }
}

/// Scores `config.group_size` raw candidates and fills in their advantages.
///
/// Candidates are scored concurrently. An unclosed `<think>` only costs the
/// candidate its format reward; a candidate with no review body gets a zero
/// reward instead of failing the whole group.
pub fn score_candidates(
    config: &RewardConfig,
    backends: &ScoringBackends,
    manuscript: &Manuscript,
    contexts: &Contexts,
    candidates: &[String],
) -> Result<ScoredGroup, RewardError> {
    config.validate()?;
    if candidates.len() < 2 {
        return Err(RewardError::GroupTooSmall(candidates.len()));
    }
    if candidates.len() != config.group_size {
        return Err(RewardError::GroupSizeMismatch {
            expected: config.group_size,
            actual: candidates.len(),
        });
    }
    contexts.validate()?;
    let reports = candidates
        .par_iter()
        .map(|raw| {
            let review = Review::from_raw_lenient(raw.as_str());
            if review.body.trim().is_empty() {
                return Ok(degraded_report(manuscript, &review, "empty review body"));
            }
            score_review(config, backends, manuscript, contexts, &review)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rewards: Vec<f64> = reports.iter().map(|r| r.reward.total).collect();
    let advantages = grpo_advantages(&rewards, config.advantage_epsilon)?;
    Ok(ScoredGroup {
        group: RewardGroup {
            manuscript_id: manuscript.id.clone(),
            rewards,
            advantages,
        },
        candidates: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::RuleClassifier;
    use crate::model::{Domain, Provenance};
    use crate::quality::LexiconScorer;
    use proptest::prelude::*;

    #[test]
    fn composite_examples() {
        let cfg = RewardConfig::default();
        assert_eq!(composite_reward(&cfg, 4.5, 0.5, 0.5, 1.0).unwrap().total, 6.5);
        assert_eq!(composite_reward(&cfg, 0.0, 0.0, 0.0, 0.0).unwrap().total, 0.0);
        assert_eq!(composite_reward(&cfg, 9.0, 1.0, 1.0, 1.0).unwrap().total, 12.0);
    }

    #[test]
    fn composite_rejects_out_of_range() {
        let cfg = RewardConfig::default();
        assert!(matches!(
            composite_reward(&cfg, 9.5, 0.0, 0.0, 0.0),
            Err(RewardError::OutOfRange { component: "quality", .. })
        ));
        assert!(matches!(
            composite_reward(&cfg, 1.0, -0.1, 0.0, 0.0),
            Err(RewardError::OutOfRange { component: "corresp_fig", .. })
        ));
        assert!(matches!(
            composite_reward(&cfg, 1.0, 0.0, f64::NAN, 0.0),
            Err(RewardError::OutOfRange { component: "corresp_nov", .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(RewardConfig::default().validate().is_ok());
        let small = RewardConfig { group_size: 1, ..RewardConfig::default() };
        assert_eq!(small.validate(), Err(RewardError::GroupTooSmall(1)));
        let mut neg = RewardConfig::default();
        neg.weights.nov = -1.0;
        assert!(matches!(neg.validate(), Err(RewardError::InvalidConfig(_))));
    }

    #[test]
    fn advantage_examples() {
        assert_eq!(grpo_advantages(&[1.0; 4], 1e-8).unwrap(), [0.0; 4]);
        let a = grpo_advantages(&[0.0, 2.0], 1e-8).unwrap();
        assert!((a[0] + 1.0).abs() <= 1e-7 && (a[1] - 1.0).abs() <= 1e-7);
        assert_eq!(grpo_advantages(&[1.0], 1e-8), Err(RewardError::GroupTooSmall(1)));
        assert!(matches!(
            grpo_advantages(&[1.0, f64::INFINITY], 1e-8),
            Err(RewardError::NonFinite(_))
        ));
        // Constant groups of values that do not average exactly are still zero.
        assert_eq!(grpo_advantages(&[0.1, 0.1, 0.1], 1e-8).unwrap(), [0.0; 3]);
    }

    proptest! {
        #[test]
        fn advantages_are_shift_invariant_on_exact_grid(
            ks in proptest::collection::vec(-(1i64 << 20)..(1i64 << 20), 2..64),
            shift in -(1i64 << 20)..(1i64 << 20),
        ) {
            let rewards: Vec<f64> = ks.iter().map(|&k| k as f64 / 1024.0).collect();
            let shifted: Vec<f64> = rewards.iter().map(|r| r + shift as f64).collect();
            prop_assert_eq!(grpo_advantages(&rewards, 1e-8).unwrap(), grpo_advantages(&shifted, 1e-8).unwrap());
        }

        #[test]
        fn composite_is_monotone(q in 0.0f64..=9.0, f in 0.0f64..=1.0, n in 0.0f64..=1.0, t in 0.0f64..=1.0, bump in 0.0f64..=1.0) {
            let cfg = RewardConfig::default();
            let base = composite_reward(&cfg, q, f, n, t).unwrap().total;
            prop_assert!(composite_reward(&cfg, (q + bump).min(9.0), f, n, t).unwrap().total >= base);
            prop_assert!(composite_reward(&cfg, q, (f + bump).min(1.0), n, t).unwrap().total >= base);
            prop_assert!(composite_reward(&cfg, q, f, (n + bump).min(1.0), t).unwrap().total >= base);
            prop_assert!(composite_reward(&cfg, q, f, n, (t + bump).min(1.0)).unwrap().total >= base);
        }
    }

    fn fixture() -> (ScoringBackends, Manuscript, Contexts) {
        let backends = ScoringBackends {
            aspects: AspectScorerBackend::Lexicon(LexiconScorer::default()),
            figure: ClassifierBackend::RuleBased(RuleClassifier::default()),
            novelty: ClassifierBackend::RuleBased(RuleClassifier::default()),
            meteor_reference: MeteorReference::Body,
        };
        let manuscript =
            Manuscript::new("m1", "T", "A", "Zzyzx qwerty.", Domain::ComputerScience).unwrap();
        let contexts = Contexts::both(
            AuxiliaryContext::new(ContextKind::FigureDetails, "Figure 1 shows gains.", Provenance::Fixture).unwrap(),
            AuxiliaryContext::new(ContextKind::NoveltyAssessment, "The method is novel.", Provenance::Fixture).unwrap(),
        );
        (backends, manuscript, contexts)
    }

    #[test]
    fn identical_candidates_have_zero_advantages() {
        let (backends, manuscript, contexts) = fixture();
        let cfg = RewardConfig { group_size: 4, ..RewardConfig::default() };
        let candidates = vec!["<think>x</think>Figure 1 is good.".to_string(); 4];
        let scored = score_candidates(&cfg, &backends, &manuscript, &contexts, &candidates).unwrap();
        assert_eq!(scored.group.advantages, [0.0; 4]);
    }

    #[test]
    fn malformed_trace_only_loses_format() {
        let (backends, manuscript, contexts) = fixture();
        let cfg = RewardConfig { group_size: 2, ..RewardConfig::default() };
        let candidates = vec![
            "<think>plan</think>Figure 1 is good.".to_string(),
            "<think>plan Figure 1 is good.".to_string(),
        ];
        let scored = score_candidates(&cfg, &backends, &manuscript, &contexts, &candidates).unwrap();
        assert_eq!(scored.candidates[0].reward.format, 1.0);
        assert_eq!(scored.candidates[1].reward.format, 0.0);
        assert_eq!(scored.candidates[1].reward.corresp_fig, 1.0);
        assert!(scored.group.advantages[0] > 0.0);
    }

    #[test]
    fn empty_candidate_degrades_to_zero() {
        let (backends, manuscript, contexts) = fixture();
        let cfg = RewardConfig { group_size: 2, ..RewardConfig::default() };
        let candidates = vec!["<think>plan</think>".to_string(), "Figure 1 is good.".to_string()];
        let scored = score_candidates(&cfg, &backends, &manuscript, &contexts, &candidates).unwrap();
        assert_eq!(scored.candidates[0].reward.total, 0.0);
        assert!(scored.candidates[0].note.is_some());
    }

    #[test]
    fn group_size_is_enforced() {
        let (backends, manuscript, contexts) = fixture();
        let cfg = RewardConfig { group_size: 3, ..RewardConfig::default() };
        let two = vec!["a".to_string(), "b".to_string()];
        assert_eq!(
            score_candidates(&cfg, &backends, &manuscript, &contexts, &two).unwrap_err(),
            RewardError::GroupSizeMismatch { expected: 3, actual: 2 }
        );
        assert_eq!(
            score_candidates(&cfg, &backends, &manuscript, &contexts, &two[..1]).unwrap_err(),
            RewardError::GroupTooSmall(1)
        );
    }

    #[test]
    fn swapped_contexts_are_rejected() {
        let (backends, manuscript, contexts) = fixture();
        let swapped = Contexts { figure: contexts.novelty.clone(), novelty: contexts.figure.clone() };
        let review = Review::from_raw("Fine.").unwrap();
        assert!(matches!(
            score_review(&RewardConfig::default(), &backends, &manuscript, &swapped, &review),
            Err(RewardError::ContextKindMismatch { slot: "figure", .. })
        ));
    }
}
