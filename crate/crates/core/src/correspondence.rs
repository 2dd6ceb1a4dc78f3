//! Correspondence scoring of review sentences against auxiliary context.
//!
//! A classifier backend labels every (sentence, context) pair with one of the
//! four joint relevance/consistency classes. The review-level score is the
//! fraction of relevant sentences that are also consistent, or zero when no
//! sentence is relevant.

use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::model::{
    text_digest, validate_distribution, AuxiliaryContext, ContextKind, CorrespondenceClass,
    LabeledPair, ModelError, Review, SentenceVerdict,
};
use crate::text::{contains_phrase as contains_cue, normalize_for_matching as normalize};
use crate::transport::{RemoteEndpoint, TransportError};

pub const RULES_RESOURCE: &str = include_str!("../resources/correspondence_rules.toml");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrespondenceError {
    #[error("classifier backend unavailable: {0}")]
    BackendUnavailable(#[from] TransportError),
    #[error("no replay label for sentence {sentence:?} (context {digest})")]
    UnknownPair { sentence: String, digest: String },
    #[error("sentence and context text must both be nonempty")]
    EmptyInput,
    #[error("invalid class distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid backend response: {0}")]
    InvalidResponse(String),
    #[error("invalid rule table: {0}")]
    InvalidRules(String),
}

impl From<ModelError> for CorrespondenceError {
    fn from(err: ModelError) -> Self {
        match err {
            ModelError::InvalidDistribution(msg) => CorrespondenceError::InvalidDistribution(msg),
            other => CorrespondenceError::InvalidResponse(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct CueList {
    relevance: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct ConflictList {
    cues: Vec<String>,
}

/// Keyword rules behind [`RuleClassifier`].
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RuleTable {
    pub version: u32,
    figure_details: CueList,
    novelty_assessment: CueList,
    conflict: ConflictList,
}

impl RuleTable {
    pub fn from_toml(text: &str) -> Result<Self, CorrespondenceError> {
        toml::from_str(text).map_err(|e| CorrespondenceError::InvalidRules(e.to_string()))
    }

    pub fn shipped() -> &'static RuleTable {
        static TABLE: OnceLock<RuleTable> = OnceLock::new();
        TABLE.get_or_init(|| RuleTable::from_toml(RULES_RESOURCE).expect("shipped rule table"))
    }

    fn relevance_cues(&self, kind: ContextKind) -> &[String] {
        match kind {
            ContextKind::FigureDetails => &self.figure_details.relevance,
            ContextKind::NoveltyAssessment => &self.novelty_assessment.relevance,
        }
    }

    pub fn classify(&self, sentence: &str, context: &AuxiliaryContext) -> CorrespondenceClass {
        let sentence = normalize(sentence);
        let context_text = normalize(&context.text);
        let relevant = self
            .relevance_cues(context.kind)
            .iter()
            .any(|cue| contains_cue(&sentence, cue));
        let conflicting = self
            .conflict
            .cues
            .iter()
            .any(|cue| contains_cue(&sentence, cue) && !contains_cue(&context_text, cue));
        CorrespondenceClass::from_flags(relevant, !conflicting)
    }
}

/// Deterministic keyword classifier used for tests, fixtures and simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleClassifier {
    pub rules: RuleTable,
}

impl Default for RuleClassifier {
    fn default() -> Self {
        RuleClassifier {
            rules: RuleTable::shipped().clone(),
        }
    }
}

/// Replays stored labels keyed by (sentence, context digest).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayClassifier {
    labels: HashMap<(String, String), CorrespondenceClass>,
}

impl ReplayClassifier {
    pub fn insert(&mut self, sentence: impl Into<String>, context_digest: impl Into<String>, class: CorrespondenceClass) {
        self.labels
            .insert((sentence.into(), context_digest.into()), class);
    }

    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = &'a LabeledPair>,
    {
        let mut replay = ReplayClassifier::default();
        for pair in pairs {
            replay.insert(pair.sentence.clone(), pair.context.digest(), pair.class()?);
        }
        Ok(replay)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn lookup(&self, sentence: &str, digest: String) -> Result<CorrespondenceClass, CorrespondenceError> {
        self.labels
            .get(&(sentence.to_string(), digest.clone()))
            .copied()
            .ok_or_else(|| CorrespondenceError::UnknownPair {
                sentence: sentence.to_string(),
                digest,
            })
    }
}

/// Request body sent to a remote classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub sentence: String,
    pub context_text: String,
    pub kind: ContextKind,
}

/// Response body expected from a remote classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub probs: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct RemoteClassifier {
    pub endpoint: RemoteEndpoint,
}

impl RemoteClassifier {
    fn probabilities(&self, sentence: &str, context: &AuxiliaryContext) -> Result<[f64; 4], CorrespondenceError> {
        let request = ClassifyRequest {
            sentence: sentence.to_string(),
            context_text: context.text.clone(),
            kind: context.kind,
        };
        let value = self.endpoint.post_json(json!(request))?;
        let response: ClassifyResponse = serde_json::from_value(value)
            .map_err(|e| CorrespondenceError::InvalidResponse(e.to_string()))?;
        validate_distribution(&response.probs)?;
        Ok(response.probs)
    }
}

/// A sentence/context classifier.
#[derive(Debug, Clone)]
pub enum ClassifierBackend {
    Remote(RemoteClassifier),
    Replay(ReplayClassifier),
    RuleBased(RuleClassifier),
}

/// Index of the largest probability; ties go to the lower index.
pub fn argmax_class(probs: &[f64; 4]) -> CorrespondenceClass {
    let mut best = 0;
    for i in 1..4 {
        if probs[i] > probs[best] {
            best = i;
        }
    }
    CorrespondenceClass::ALL[best]
}

fn one_hot(class: CorrespondenceClass) -> [f64; 4] {
    let mut probs = [0.0; 4];
    probs[class.index()] = 1.0;
    probs
}

/// Labels one sentence against one context.
pub fn classify_pair(
    backend: &ClassifierBackend,
    sentence: &str,
    context: &AuxiliaryContext,
) -> Result<SentenceVerdict, CorrespondenceError> {
    classify_indexed(backend, 0, sentence, context)
}

fn classify_indexed(
    backend: &ClassifierBackend,
    sentence_index: usize,
    sentence: &str,
    context: &AuxiliaryContext,
) -> Result<SentenceVerdict, CorrespondenceError> {
    if sentence.trim().is_empty() || context.text.trim().is_empty() {
        return Err(CorrespondenceError::EmptyInput);
    }
    let (class, class_probs) = match backend {
        ClassifierBackend::Remote(remote) => {
            let probs = remote.probabilities(sentence, context)?;
            (argmax_class(&probs), Some(probs))
        }
        ClassifierBackend::Replay(replay) => {
            let class = replay.lookup(sentence, context.digest())?;
            (class, Some(one_hot(class)))
        }
        ClassifierBackend::RuleBased(rules) => (rules.rules.classify(sentence, context), None),
    };
    Ok(SentenceVerdict {
        sentence_index,
        class_probs,
        ..SentenceVerdict::from_class(sentence_index, class)
    })
}

/// Relevance marginal and consistency-given-relevance conditional of a
/// four-class distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDecomposition {
    pub p_relevant: f64,
    /// Absent when `p_relevant` is zero.
    pub p_consistent_given_relevant: Option<f64>,
}

/// Factorizes the joint class distribution as
/// `p(relevant, consistent) = p(consistent | relevant) * p(relevant)`.
pub fn decompose_joint(probs: &[f64; 4]) -> Result<JointDecomposition, CorrespondenceError> {
    validate_distribution(probs)?;
    let p_relevant = probs[0] + probs[1];
    Ok(JointDecomposition {
        p_relevant,
        p_consistent_given_relevant: (p_relevant > 0.0).then(|| probs[0] / p_relevant),
    })
}

/// Consistent-among-relevant ratio; zero when nothing is relevant.
pub fn correspondence_score(verdicts: &[SentenceVerdict]) -> f64 {
    let relevant = verdicts.iter().filter(|v| v.relevance).count();
    if relevant == 0 {
        return 0.0;
    }
    let consistent = verdicts
        .iter()
        .filter(|v| v.relevance && v.consistency)
        .count();
    consistent as f64 / relevant as f64
}

/// A review's correspondence score with its per-sentence verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextScore {
    pub score: f64,
    pub verdicts: Vec<SentenceVerdict>,
}

/// Classifies every sentence of `review` (concurrently, order-stable) and
/// aggregates the verdicts.
pub fn score_review_against_context(
    backend: &ClassifierBackend,
    review: &Review,
    context: &AuxiliaryContext,
) -> Result<ContextScore, CorrespondenceError> {
    let verdicts = review
        .sentences
        .par_iter()
        .enumerate()
        .map(|(i, sentence)| classify_indexed(backend, i, sentence, context))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ContextScore {
        score: correspondence_score(&verdicts),
        verdicts,
    })
}

/// As [`score_review_against_context`], but a withheld context marks every
/// sentence irrelevant without consulting the backend, so the score is zero.
pub fn score_review_against_optional_context(
    backend: &ClassifierBackend,
    review: &Review,
    context: Option<&AuxiliaryContext>,
) -> Result<ContextScore, CorrespondenceError> {
    match context {
        Some(context) => score_review_against_context(backend, review, context),
        None => {
            let verdicts: Vec<_> = (0..review.sentences.len())
                .map(|i| SentenceVerdict::from_class(i, CorrespondenceClass::IrrelevantConsistent))
                .collect();
            Ok(ContextScore {
                score: correspondence_score(&verdicts),
                verdicts,
            })
        }
    }
}

/// Replay-key digest for a context text.
pub fn context_digest(text: &str) -> String {
    text_digest(text)
}
