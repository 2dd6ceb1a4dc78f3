//! The nine-dimension quality reward.
//!
//! Eight dimensions come from an aspect scorer backend; the ninth is METEOR
//! between the review body and the manuscript, always computed locally.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{AspectScores, Manuscript, ModelError, Review, CLASSIFIER_DIMENSIONS};
use crate::text::{contains_phrase, normalize_for_matching, resource_lines, tokenize};
use crate::transport::{RemoteEndpoint, TransportError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualityError {
    #[error("aspect scorer unavailable: {0}")]
    BackendUnavailable(#[from] TransportError),
    #[error("review body is empty")]
    EmptyReview,
    #[error("invalid aspect scorer response: {0}")]
    InvalidResponse(String),
    #[error(transparent)]
    InvalidScore(#[from] ModelError),
}

const LEXICON_RESOURCES: [&str; 8] = [
    include_str!("../resources/lexicon/criticism.txt"),
    include_str!("../resources/lexicon/example.txt"),
    include_str!("../resources/lexicon/importance_relevance.txt"),
    include_str!("../resources/lexicon/materials_methods.txt"),
    include_str!("../resources/lexicon/praise.txt"),
    include_str!("../resources/lexicon/presentation_reporting.txt"),
    include_str!("../resources/lexicon/results_discussion.txt"),
    include_str!("../resources/lexicon/suggestion_solution.txt"),
];

/// Keyword tables for the eight classifier dimensions, in
/// [`CLASSIFIER_DIMENSIONS`] order.
///
/// A dimension scores the fraction of review sentences that contain at least
/// one of its cues, so every score is a hit rate in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconScorer {
    pub tables: [Vec<String>; 8],
}

impl Default for LexiconScorer {
    fn default() -> Self {
        static SHIPPED: OnceLock<LexiconScorer> = OnceLock::new();
        SHIPPED
            .get_or_init(|| LexiconScorer {
                tables: LEXICON_RESOURCES
                    .map(|res| resource_lines(res).map(str::to_string).collect()),
            })
            .clone()
    }
}

impl LexiconScorer {
    pub fn score(&self, review: &Review) -> [f64; 8] {
        let sentences: Vec<String> = if review.sentences.is_empty() {
            vec![normalize_for_matching(&review.body)]
        } else {
            review
                .sentences
                .iter()
                .map(|s| normalize_for_matching(s))
                .collect()
        };
        let total = sentences.len() as f64;
        self.tables.clone().map(|cues| {
            let hits = sentences
                .iter()
                .filter(|s| cues.iter().any(|cue| contains_phrase(s, cue)))
                .count();
            (hits as f64 / total).min(1.0)
        })
    }
}

/// Request body sent to a remote aspect scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectRequest {
    pub review_body: String,
    pub manuscript_id: String,
    pub manuscript_text: String,
}

#[derive(Debug, Clone)]
pub struct RemoteAspectScorer {
    pub endpoint: RemoteEndpoint,
}

impl RemoteAspectScorer {
    fn score(&self, review: &Review, manuscript: &Manuscript) -> Result<[f64; 8], QualityError> {
        let request = AspectRequest {
            review_body: review.body.clone(),
            manuscript_id: manuscript.id.clone(),
            manuscript_text: manuscript.body.clone(),
        };
        let response = self.endpoint.post_json(json!(request))?;
        let object = response
            .as_object()
            .ok_or_else(|| QualityError::InvalidResponse("expected a JSON object".into()))?;
        let mut scores = [0.0; 8];
        for (slot, name) in scores.iter_mut().zip(CLASSIFIER_DIMENSIONS) {
            *slot = object.get(name).and_then(Value::as_f64).ok_or_else(|| {
                QualityError::InvalidResponse(format!("missing numeric field `{name}`"))
            })?;
        }
        Ok(scores)
    }
}

#[derive(Debug, Clone)]
pub enum AspectScorerBackend {
    Remote(RemoteAspectScorer),
    Lexicon(LexiconScorer),
}

/// Which manuscript text METEOR compares the review against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeteorReference {
    #[default]
    Body,
    Abstract,
    Full,
}

impl MeteorReference {
    pub fn text(self, manuscript: &Manuscript) -> String {
        match self {
            MeteorReference::Body => manuscript.body.clone(),
            MeteorReference::Abstract => manuscript.abstract_text.clone(),
            MeteorReference::Full => format!(
                "{}\n{}\n{}",
                manuscript.title, manuscript.abstract_text, manuscript.body
            ),
        }
    }
}

/// Scores all nine dimensions with METEOR against the manuscript body.
pub fn score_aspects(
    backend: &AspectScorerBackend,
    review: &Review,
    manuscript: &Manuscript,
) -> Result<AspectScores, QualityError> {
    score_aspects_with(backend, review, manuscript, MeteorReference::Body)
}

pub fn score_aspects_with(
    backend: &AspectScorerBackend,
    review: &Review,
    manuscript: &Manuscript,
    reference: MeteorReference,
) -> Result<AspectScores, QualityError> {
    if review.body.trim().is_empty() {
        return Err(QualityError::EmptyReview);
    }
    let classifier = match backend {
        AspectScorerBackend::Remote(remote) => remote.score(review, manuscript)?,
        AspectScorerBackend::Lexicon(lexicon) => lexicon.score(review),
    };
    let meteor = meteor_score(&review.body, &reference.text(manuscript));
    Ok(AspectScores::from_parts(classifier, meteor)?)
}

/// Sum of the nine dimensions, in [0, 9].
pub fn quality_reward(scores: &AspectScores) -> f64 {
    scores.named().iter().map(|(_, v)| v).sum()
}

/// Intermediate METEOR quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorStats {
    pub matches: usize,
    pub chunks: usize,
    pub candidate_len: usize,
    pub reference_len: usize,
    pub precision: f64,
    pub recall: f64,
    pub fmean: f64,
    pub penalty: f64,
    pub score: f64,
}

/// Exact-match unigram alignment.
///
/// Every unigram that can be matched is matched, so the match count is the
/// multiset intersection size. Runs are placed longest-first (ties to the
/// earliest candidate, then earliest reference position) to keep the number
/// of chunks low. Returns `(candidate, reference)` index pairs sorted by
/// candidate position.
pub fn align(candidate: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut positions: HashMap<&str, Vec<usize>> = HashMap::new();
    for (j, token) in reference.iter().enumerate() {
        positions.entry(token.as_str()).or_default().push(j);
    }
    let mut cand_used = vec![false; candidate.len()];
    let mut ref_used = vec![false; reference.len()];
    let mut pairs = Vec::new();
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        for (i, token) in candidate.iter().enumerate() {
            if cand_used[i] {
                continue;
            }
            let Some(starts) = positions.get(token.as_str()) else {
                continue;
            };
            for &j in starts {
                if ref_used[j] {
                    continue;
                }
                let mut len = 0;
                while i + len < candidate.len()
                    && j + len < reference.len()
                    && !cand_used[i + len]
                    && !ref_used[j + len]
                    && candidate[i + len] == reference[j + len]
                {
                    len += 1;
                }
                if best.is_none_or(|(_, _, l)| len > l) {
                    best = Some((i, j, len));
                }
            }
        }
        let Some((i, j, len)) = best else { break };
        for k in 0..len {
            cand_used[i + k] = true;
            ref_used[j + k] = true;
            pairs.push((i + k, j + k));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Number of maximal runs that are contiguous in both sequences.
pub fn count_chunks(sorted_pairs: &[(usize, usize)]) -> usize {
    if sorted_pairs.is_empty() {
        return 0;
    }
    1 + sorted_pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count()
}

/// METEOR from precomputed match and chunk counts.
pub fn meteor_from_counts(
    matches: usize,
    chunks: usize,
    candidate_len: usize,
    reference_len: usize,
) -> MeteorStats {
    let mut stats = MeteorStats {
        matches,
        chunks,
        candidate_len,
        reference_len,
        precision: 0.0,
        recall: 0.0,
        fmean: 0.0,
        penalty: 0.0,
        score: 0.0,
    };
    if matches == 0 || candidate_len == 0 || reference_len == 0 {
        return stats;
    }
    let m = matches as f64;
    stats.precision = m / candidate_len as f64;
    stats.recall = m / reference_len as f64;
    stats.fmean =
        10.0 * stats.precision * stats.recall / (stats.recall + 9.0 * stats.precision);
    stats.penalty = 0.5 * (chunks as f64 / m).powi(3);
    stats.score = stats.fmean * (1.0 - stats.penalty);
    stats
}

pub fn meteor_stats(candidate: &str, reference: &str) -> MeteorStats {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    let pairs = align(&cand, &refr);
    meteor_from_counts(pairs.len(), count_chunks(&pairs), cand.len(), refr.len())
}

/// Exact-match METEOR (recall-weighted 9:1, fragmentation penalty
/// `0.5 * (chunks / matches)^3`).
pub fn meteor_score(candidate: &str, reference: &str) -> f64 {
    meteor_stats(candidate, reference).score
}
