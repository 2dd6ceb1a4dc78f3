//! Labeled sentence/context datasets: label-prompt rendering, label parsing,
//! pair assembly and weighted-F1 evaluation of classifier backends.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{ContextError, TextCompletionClient};
use crate::correspondence::{classify_pair, ClassifierBackend, CorrespondenceError};
use crate::model::{
    AuxiliaryContext, ContextKind, CorrespondenceClass, LabeledPair, ModelError, PairSource,
    Review,
};
use crate::records::Record;
use crate::text::fill_template;

pub const FIGURE_LABEL_TEMPLATE: &str = include_str!("../resources/prompts/figure_label.txt");
pub const NOVELTY_LABEL_TEMPLATE: &str = include_str!("../resources/prompts/novelty_label.txt");

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read a label from {0:?}")]
    UnparseableLabel(String),
    #[error("label {0} is outside 0..=3")]
    OutOfRangeLabel(i64),
    #[error("confusion matrix is empty")]
    EmptyConfusion,
    #[error("no labeled pairs to evaluate")]
    EmptyLabeledSet,
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Fills the labeling prompt for `kind` with the context and the sentence.
pub fn render_label_prompt(kind: ContextKind, context_text: &str, sentence: &str) -> String {
    let (template, slot) = match kind {
        ContextKind::FigureDetails => (FIGURE_LABEL_TEMPLATE, "figure details"),
        ContextKind::NoveltyAssessment => (NOVELTY_LABEL_TEMPLATE, "novelty assessment"),
    };
    fill_template(
        template,
        &[(slot, context_text), ("sentence of interest", sentence)],
    )
}

/// Reads a class label from a labeler reply.
///
/// A reply that trims to one of `0`..`3` is taken as is. Otherwise every
/// integer in the reply is collected: a single distinct in-range value is
/// accepted, several distinct in-range values are ambiguous, and a reply
/// whose only integers are out of range reports the first of them.
pub fn parse_label_response(response: &str) -> Result<CorrespondenceClass, DatasetError> {
    let trimmed = response.trim();
    if let Ok(value) = trimmed.parse::<i64>() {
        return CorrespondenceClass::from_index(value)
            .map_err(|_| DatasetError::OutOfRangeLabel(value));
    }
    let mut in_range: Vec<i64> = Vec::new();
    let mut out_of_range: Option<i64> = None;
    for run in trimmed
        .split(|c: char| !c.is_ascii_digit())
        .filter(|run| !run.is_empty())
    {
        match run.parse::<i64>() {
            Ok(value @ 0..=3) => {
                if !in_range.contains(&value) {
                    in_range.push(value);
                }
            }
            Ok(value) => {
                out_of_range.get_or_insert(value);
            }
            Err(_) => {
                out_of_range.get_or_insert(i64::MAX);
            }
        }
    }
    match (in_range.as_slice(), out_of_range) {
        ([value], _) => Ok(CorrespondenceClass::from_index(*value)?),
        ([], Some(value)) => Err(DatasetError::OutOfRangeLabel(value)),
        _ => Err(DatasetError::UnparseableLabel(response.to_string())),
    }
}

/// A sentence paired with a context, awaiting a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledPair {
    pub sentence: String,
    pub context: AuxiliaryContext,
}

impl Record for UnlabeledPair {
    const SCHEMA: &'static str = "unlabeled_pair/v1";
}

/// Pairs every sentence of every review with `context`, in review and
/// sentence order, keeping the first of any repeated sentence.
pub fn build_pairs(reviews: &[Review], context: &AuxiliaryContext) -> Vec<UnlabeledPair> {
    let digest = context.digest();
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    let mut pairs = Vec::new();
    for review in reviews {
        for sentence in &review.sentences {
            if seen.insert((sentence.as_str(), digest.as_str())) {
                pairs.push(UnlabeledPair {
                    sentence: sentence.clone(),
                    context: context.clone(),
                });
            }
        }
    }
    pairs
}

/// Labels pairs with a completion client, at most `max_parallel` at a time.
/// Output order follows input order.
pub fn label_pairs(
    client: &TextCompletionClient,
    pairs: &[UnlabeledPair],
    source: PairSource,
    max_parallel: usize,
) -> Result<Vec<LabeledPair>, DatasetError> {
    let label = |pair: &UnlabeledPair| -> Result<LabeledPair, DatasetError> {
        let prompt = render_label_prompt(pair.context.kind, &pair.context.text, &pair.sentence);
        let class = parse_label_response(&client.complete(&prompt)?)?;
        Ok(LabeledPair {
            sentence: pair.sentence.clone(),
            context: pair.context.clone(),
            label_class: class.index() as u8,
            source,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_parallel.max(1))
        .build()
        .map_err(|e| ContextError::ClientFailure(e.to_string()))?;
    pool.install(|| pairs.par_iter().map(label).collect())
}

/// Rows are true classes, columns predicted classes.
pub type Confusion = [[u64; 4]; 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 of each class; undefined ratios are 0.
pub fn class_metrics(confusion: &Confusion) -> [ClassMetrics; 4] {
    std::array::from_fn(|k| {
        let tp = confusion[k][k];
        let support: u64 = confusion[k].iter().sum();
        let predicted: u64 = confusion.iter().map(|row| row[k]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support,
        }
    })
}

/// Support-weighted mean of per-class F1.
pub fn weighted_f1(confusion: &Confusion) -> Result<f64, DatasetError> {
    let total: u64 = confusion.iter().flatten().sum();
    if total == 0 {
        return Err(DatasetError::EmptyConfusion);
    }
    let weighted: f64 = class_metrics(confusion)
        .iter()
        .map(|m| m.f1 * m.support as f64)
        .sum();
    Ok(weighted / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub pairs: usize,
    pub confusion: Confusion,
    pub per_class: [ClassMetrics; 4],
    pub weighted_f1: f64,
}

impl Record for EvaluationReport {
    const SCHEMA: &'static str = "evaluation_report/v1";
}

/// Classifies every labeled pair and compares against the stored labels.
pub fn evaluate_backend(
    backend: &ClassifierBackend,
    labeled: &[LabeledPair],
) -> Result<EvaluationReport, DatasetError> {
    if labeled.is_empty() {
        return Err(DatasetError::EmptyLabeledSet);
    }
    let outcomes = labeled
        .par_iter()
        .map(|pair| -> Result<(usize, usize), DatasetError> {
            let truth = pair.class()?;
            let verdict = classify_pair(backend, &pair.sentence, &pair.context)?;
            Ok((truth.index(), verdict.class().index()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut confusion = [[0u64; 4]; 4];
    for (truth, predicted) in outcomes {
        confusion[truth][predicted] += 1;
    }
    Ok(EvaluationReport {
        pairs: labeled.len(),
        confusion,
        per_class: class_metrics(&confusion),
        weighted_f1: weighted_f1(&confusion)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Provenance;
    use proptest::prelude::*;

    #[test]
    fn label_parsing() {
        assert_eq!(parse_label_response("0").unwrap(), CorrespondenceClass::RelevantConsistent);
        assert_eq!(parse_label_response(" 2\n").unwrap(), CorrespondenceClass::IrrelevantConsistent);
        assert!(matches!(parse_label_response("4"), Err(DatasetError::OutOfRangeLabel(4))));
        assert!(matches!(parse_label_response("-1"), Err(DatasetError::OutOfRangeLabel(-1))));
        assert_eq!(parse_label_response("Answer: 3.").unwrap(), CorrespondenceClass::IrrelevantConflicting);
        assert_eq!(parse_label_response("1, final answer 1").unwrap(), CorrespondenceClass::RelevantConflicting);
        assert!(matches!(parse_label_response("0 or 2"), Err(DatasetError::UnparseableLabel(_))));
        assert!(matches!(parse_label_response("no idea"), Err(DatasetError::UnparseableLabel(_))));
        assert!(matches!(parse_label_response(""), Err(DatasetError::UnparseableLabel(_))));
        assert!(matches!(parse_label_response("class 7"), Err(DatasetError::OutOfRangeLabel(7))));
        assert!(matches!(parse_label_response("class 12"), Err(DatasetError::OutOfRangeLabel(12))));
        assert_eq!(parse_label_response("class 2 not 7").unwrap(), CorrespondenceClass::IrrelevantConsistent);
    }

    #[test]
    fn prompts_substitute_both_slots_once() {
        let p = render_label_prompt(ContextKind::FigureDetails, "{sentence of interest}", "S");
        assert!(p.contains("### Figure Details\n{sentence of interest}\n\n### Conclusion\nS\n"));
        let q = render_label_prompt(ContextKind::NoveltyAssessment, "N", "S");
        assert!(q.ends_with("### Novelty Assessment\nN\n\n### Conclusion\nS\n"));
        assert_eq!(q, render_label_prompt(ContextKind::NoveltyAssessment, "N", "S"));
    }

    fn review(sentences: &[&str]) -> Review {
        Review {
            raw: String::new(),
            thinking_trace: None,
            body: sentences.join(" "),
            sentences: sentences.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn pairs_are_ordered_and_deduplicated() {
        let ctx = AuxiliaryContext::new(ContextKind::FigureDetails, "F", Provenance::Fixture).unwrap();
        let pairs = build_pairs(&[review(&["a.", "b.", "c."]), review(&["d.", "e."])], &ctx);
        let sentences: Vec<&str> = pairs.iter().map(|p| p.sentence.as_str()).collect();
        assert_eq!(sentences, ["a.", "b.", "c.", "d.", "e."]);
        assert_eq!(build_pairs(&[review(&["a.", "a."])], &ctx).len(), 1);
        assert!(build_pairs(&[], &ctx).is_empty());
    }

    #[test]
    fn f1_examples() {
        let diag = [[3, 0, 0, 0], [0, 1, 0, 0], [0, 0, 5, 0], [0, 0, 0, 2]];
        assert_eq!(weighted_f1(&diag).unwrap(), 1.0);
        let missing = [[3, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, 2]];
        assert_eq!(weighted_f1(&missing).unwrap(), 1.0);
        assert!(matches!(weighted_f1(&[[0; 4]; 4]), Err(DatasetError::EmptyConfusion)));
        // A constant predictor on balanced classes: class 0 has P=1/4, R=1, F1=2/5.
        let constant = [[5, 0, 0, 0], [5, 0, 0, 0], [5, 0, 0, 0], [5, 0, 0, 0]];
        assert!((weighted_f1(&constant).unwrap() - 0.1).abs() < 1e-15);
    }

    #[allow(clippy::needless_range_loop)]
    fn oracle_f1(m: &Confusion) -> f64 {
        // Support-weighted F1 computed from tp/fp/fn counts per class.
        let total: u64 = m.iter().flatten().sum();
        let mut acc = 0.0;
        for k in 0..4 {
            let tp = m[k][k] as f64;
            let fp = (0..4).filter(|&i| i != k).map(|i| m[i][k]).sum::<u64>() as f64;
            let fn_ = (0..4).filter(|&j| j != k).map(|j| m[k][j]).sum::<u64>() as f64;
            let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) };
            acc += f1 * (tp + fn_);
        }
        acc / total as f64
    }

    #[test]
    fn f1_matches_count_oracle_on_reference_matrix() {
        let m = [[5, 1, 0, 0], [2, 3, 0, 0], [0, 0, 4, 0], [0, 0, 1, 4]];
        // Per class: F1 = 10/13, 2/3, 8/9, 8/9 with supports 6, 5, 4, 5 over 20.
        let hand = (6.0 * 10.0 / 13.0 + 5.0 * 2.0 / 3.0 + 4.0 * 8.0 / 9.0 + 5.0 * 8.0 / 9.0) / 20.0;
        let got = weighted_f1(&m).unwrap();
        assert!((got - hand).abs() < 1e-12);
        assert!((got - oracle_f1(&m)).abs() < 1e-12);
    }

    fn matrix() -> impl Strategy<Value = Confusion> {
        proptest::array::uniform4(proptest::array::uniform4(0u64..30))
    }

    proptest! {
        #[test]
        fn f1_agrees_with_oracle(m in matrix()) {
            prop_assume!(m.iter().flatten().sum::<u64>() > 0);
            let got = weighted_f1(&m).unwrap();
            prop_assert!((got - oracle_f1(&m)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&got));
        }

        #[test]
        fn f1_is_permutation_invariant(m in matrix(), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
            prop_assume!(m.iter().flatten().sum::<u64>() > 0);
            let permuted: Confusion = std::array::from_fn(|i| std::array::from_fn(|j| m[perm[i]][perm[j]]));
            prop_assert!((weighted_f1(&m).unwrap() - weighted_f1(&permuted).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn balanced_weighted_equals_macro(rows in proptest::array::uniform4(proptest::array::uniform3(0u64..10)), support in 1u64..40) {
            // Each row sums to `support`; the fourth column absorbs the remainder.
            let mut m = [[0u64; 4]; 4];
            for i in 0..4 {
                let mut left = support;
                for j in 0..3 {
                    let take = rows[i][j].min(left);
                    m[i][j] = take;
                    left -= take;
                }
                m[i][3] = left;
            }
            let macro_f1 = class_metrics(&m).iter().map(|c| c.f1).sum::<f64>() / 4.0;
            prop_assert!((weighted_f1(&m).unwrap() - macro_f1).abs() < 1e-12);
        }
    }
}
