//! Context ablation: score a corpus with auxiliary contexts withheld.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::model::{AuxiliaryContext, Manuscript, Review};
use crate::records::Record;
use crate::reward::{score_review, Contexts, RewardConfig, ScoringBackends};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationVariant {
    /// Both contexts provided.
    Full,
    /// Only the figure details provided.
    FigOnly,
    /// Only the novelty assessment provided.
    NovelOnly,
    /// No auxiliary context.
    None,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 4] = [
        AblationVariant::Full,
        AblationVariant::FigOnly,
        AblationVariant::NovelOnly,
        AblationVariant::None,
    ];

    /// Whether the (figure, novelty) contexts are provided.
    pub fn provides(self) -> (bool, bool) {
        match self {
            AblationVariant::Full => (true, true),
            AblationVariant::FigOnly => (true, false),
            AblationVariant::NovelOnly => (false, true),
            AblationVariant::None => (false, false),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AblationVariant::Full => "full",
            AblationVariant::FigOnly => "fig_only",
            AblationVariant::NovelOnly => "novel_only",
            AblationVariant::None => "none",
        }
    }
}

/// Mean figure correspondence reported for the original trained models,
/// kept as comparison targets for documentation. Never asserted.
pub const REFERENCE_FIGURE_MEANS: [(AblationVariant, f64); 4] = [
    (AblationVariant::Full, 0.60),
    (AblationVariant::FigOnly, 0.56),
    (AblationVariant::NovelOnly, 0.58),
    (AblationVariant::None, 0.54),
];

/// Novelty counterpart of [`REFERENCE_FIGURE_MEANS`].
pub const REFERENCE_NOVELTY_MEANS: [(AblationVariant, f64); 4] = [
    (AblationVariant::Full, 0.56),
    (AblationVariant::FigOnly, 0.52),
    (AblationVariant::NovelOnly, 0.52),
    (AblationVariant::None, 0.58),
];

/// One manuscript of the ablation corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationItem {
    pub manuscript: Manuscript,
    pub figure: Option<AuxiliaryContext>,
    pub novelty: Option<AuxiliaryContext>,
    /// Raw review texts (may carry a `<think>` trace).
    pub reviews: Vec<String>,
}

impl Record for AblationItem {
    const SCHEMA: &'static str = "ablation_item/v1";
}

/// Supplies the reviews scored for one item under one set of contexts.
/// A generator would condition on `contexts`; stored reviews ignore them.
pub trait ReviewSource: Sync {
    fn reviews(&self, item: &AblationItem, contexts: &Contexts) -> Result<Vec<String>, AnalyticsError>;
}

/// Uses the reviews stored on each item.
#[derive(Debug, Clone, Copy, Default)]
pub struct StoredReviews;

impl ReviewSource for StoredReviews {
    fn reviews(&self, item: &AblationItem, _contexts: &Contexts) -> Result<Vec<String>, AnalyticsError> {
        Ok(item.reviews.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: AblationVariant,
    pub reviews: usize,
    pub mean_fig: f64,
    pub mean_nov: f64,
    pub mean_quality: f64,
    pub mean_total: f64,
}

impl Record for AblationRow {
    const SCHEMA: &'static str = "ablation_row/v1";
}

fn contexts_for(item: &AblationItem, variant: AblationVariant) -> Result<Contexts, AnalyticsError> {
    let (fig, nov) = variant.provides();
    let take = |wanted: bool, ctx: &Option<AuxiliaryContext>, name: &'static str| {
        if !wanted {
            return Ok(None);
        }
        ctx.clone()
            .map(Some)
            .ok_or_else(|| AnalyticsError::MissingContext(item.manuscript.id.clone(), name))
    };
    Ok(Contexts {
        figure: take(fig, &item.figure, "figure")?,
        novelty: take(nov, &item.novelty, "novelty")?,
    })
}

/// Scores the corpus once per variant. A withheld context is scored with the
/// empty-context rule, so its correspondence is 0 for every review.
/// Manuscripts are scored in parallel; means are accumulated in corpus order.
pub fn run_ablation(
    variants: &[AblationVariant],
    corpus: &[AblationItem],
    source: &dyn ReviewSource,
    config: &RewardConfig,
    backends: &ScoringBackends,
) -> Result<Vec<AblationRow>, AnalyticsError> {
    if corpus.is_empty() {
        return Err(AnalyticsError::EmptyCorpus);
    }
    variants
        .iter()
        .map(|&variant| {
            let per_item = corpus
                .par_iter()
                .map(|item| -> Result<Vec<[f64; 4]>, AnalyticsError> {
                    let contexts = contexts_for(item, variant)?;
                    source
                        .reviews(item, &contexts)?
                        .into_iter()
                        .map(|raw| {
                            let review = Review::from_raw_lenient(raw);
                            let report =
                                score_review(config, backends, &item.manuscript, &contexts, &review)?;
                            let r = report.reward;
                            Ok([r.corresp_fig, r.corresp_nov, r.quality, r.total])
                        })
                        .collect()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let rows: Vec<[f64; 4]> = per_item.into_iter().flatten().collect();
            if rows.is_empty() {
                return Err(AnalyticsError::EmptyCorpus);
            }
            let n = rows.len() as f64;
            let column = |k: usize| rows.iter().map(|r| r[k]).sum::<f64>() / n;
            Ok(AblationRow {
                variant,
                reviews: rows.len(),
                mean_fig: column(0),
                mean_nov: column(1),
                mean_quality: column(2),
                mean_total: column(3),
            })
        })
        .collect()
}
