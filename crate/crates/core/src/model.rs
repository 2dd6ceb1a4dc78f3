//! Domain types shared across the reward stack.
//!
//! Everything here is an immutable value type. Validation happens in the
//! constructors; the fields stay public so records can be built in tests and
//! serialized without ceremony.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Validation failures for domain values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("manuscript id must not be empty")]
    EmptyId,
    #[error("manuscript title must not be empty")]
    EmptyTitle,
    #[error("auxiliary context text must not be empty")]
    EmptyContext,
    #[error("class label {0} is outside 0..=3")]
    InvalidClass(i64),
    #[error("class probabilities are not a distribution: {0}")]
    InvalidDistribution(String),
    #[error("aspect `{name}` = {value} is outside [0, 1]")]
    AspectOutOfRange { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    ComputerScience,
    BiologicalSciences,
    PhysicalSciences,
    Other,
}

impl Domain {
    pub const ALL: [Domain; 4] = [
        Domain::ComputerScience,
        Domain::BiologicalSciences,
        Domain::PhysicalSciences,
        Domain::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::ComputerScience => "computer_science",
            Domain::BiologicalSciences => "biological_sciences",
            Domain::PhysicalSciences => "physical_sciences",
            Domain::Other => "other",
        }
    }
}

/// One paper under review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manuscript {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub body: String,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minor_discipline: Option<String>,
}

impl Manuscript {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        abstract_text: impl Into<String>,
        body: impl Into<String>,
        domain: Domain,
    ) -> Result<Self, ModelError> {
        let manuscript = Manuscript {
            id: id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
            body: body.into(),
            domain,
            minor_discipline: None,
        };
        manuscript.validate()?;
        Ok(manuscript)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.id.trim().is_empty() {
            return Err(ModelError::EmptyId);
        }
        if self.title.trim().is_empty() {
            return Err(ModelError::EmptyTitle);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextKind {
    FigureDetails,
    NoveltyAssessment,
}

impl ContextKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextKind::FigureDetails => "figure_details",
            ContextKind::NoveltyAssessment => "novelty_assessment",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Ingested,
    PipelineGenerated,
    Fixture,
}

/// Text-encoded external signal attached to a manuscript.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AuxiliaryContext {
    pub kind: ContextKind,
    pub text: String,
    pub provenance: Provenance,
}

impl AuxiliaryContext {
    pub fn new(
        kind: ContextKind,
        text: impl Into<String>,
        provenance: Provenance,
    ) -> Result<Self, ModelError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ModelError::EmptyContext);
        }
        Ok(AuxiliaryContext {
            kind,
            text,
            provenance,
        })
    }

    /// Content hash of the context text, used for replay keys and caching.
    pub fn digest(&self) -> String {
        text_digest(&self.text)
    }
}

/// Lowercase hex SHA-256 of `text`.
pub fn text_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A generated or human review after preprocessing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinking_trace: Option<String>,
    pub body: String,
    pub sentences: Vec<String>,
}

/// The four joint relevance/consistency labels, in answer-code order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrespondenceClass {
    RelevantConsistent = 0,
    RelevantConflicting = 1,
    IrrelevantConsistent = 2,
    IrrelevantConflicting = 3,
}

impl CorrespondenceClass {
    pub const ALL: [CorrespondenceClass; 4] = [
        CorrespondenceClass::RelevantConsistent,
        CorrespondenceClass::RelevantConflicting,
        CorrespondenceClass::IrrelevantConsistent,
        CorrespondenceClass::IrrelevantConflicting,
    ];

    pub fn from_index(index: i64) -> Result<Self, ModelError> {
        match index {
            0 => Ok(CorrespondenceClass::RelevantConsistent),
            1 => Ok(CorrespondenceClass::RelevantConflicting),
            2 => Ok(CorrespondenceClass::IrrelevantConsistent),
            3 => Ok(CorrespondenceClass::IrrelevantConflicting),
            other => Err(ModelError::InvalidClass(other)),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_flags(relevant: bool, consistent: bool) -> Self {
        match (relevant, consistent) {
            (true, true) => CorrespondenceClass::RelevantConsistent,
            (true, false) => CorrespondenceClass::RelevantConflicting,
            (false, true) => CorrespondenceClass::IrrelevantConsistent,
            (false, false) => CorrespondenceClass::IrrelevantConflicting,
        }
    }

    pub fn is_relevant(self) -> bool {
        matches!(
            self,
            CorrespondenceClass::RelevantConsistent | CorrespondenceClass::RelevantConflicting
        )
    }

    pub fn is_consistent(self) -> bool {
        matches!(
            self,
            CorrespondenceClass::RelevantConsistent | CorrespondenceClass::IrrelevantConsistent
        )
    }
}

/// Tolerance on the probability-vector sum.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

/// Checks that `probs` is a 4-class distribution.
pub fn validate_distribution(probs: &[f64; 4]) -> Result<(), ModelError> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
        return Err(ModelError::InvalidDistribution(format!(
            "entries must lie in [0, 1], got {probs:?}"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(ModelError::InvalidDistribution(format!(
            "entries sum to {sum}"
        )));
    }
    Ok(())
}

/// Per-sentence verdict against one auxiliary context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceVerdict {
    pub sentence_index: usize,
    pub relevance: bool,
    pub consistency: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_probs: Option<[f64; 4]>,
}

impl SentenceVerdict {
    pub fn from_class(sentence_index: usize, class: CorrespondenceClass) -> Self {
        SentenceVerdict {
            sentence_index,
            relevance: class.is_relevant(),
            consistency: class.is_consistent(),
            class_probs: None,
        }
    }

    pub fn class(&self) -> CorrespondenceClass {
        CorrespondenceClass::from_flags(self.relevance, self.consistency)
    }
}

/// The nine quality dimensions, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AspectScores {
    pub criticism: f64,
    pub example: f64,
    pub importance_relevance: f64,
    pub materials_methods: f64,
    pub praise: f64,
    pub presentation_reporting: f64,
    pub results_discussion: f64,
    pub suggestion_solution: f64,
    pub meteor: f64,
}

/// The eight classifier-scored dimensions (everything except METEOR).
pub const CLASSIFIER_DIMENSIONS: [&str; 8] = [
    "criticism",
    "example",
    "importance_relevance",
    "materials_methods",
    "praise",
    "presentation_reporting",
    "results_discussion",
    "suggestion_solution",
];

impl AspectScores {
    pub fn uniform(value: f64) -> Self {
        AspectScores {
            criticism: value,
            example: value,
            importance_relevance: value,
            materials_methods: value,
            praise: value,
            presentation_reporting: value,
            results_discussion: value,
            suggestion_solution: value,
            meteor: value,
        }
    }

    /// Builds scores from the eight classifier dimensions (in
    /// [`CLASSIFIER_DIMENSIONS`] order) plus METEOR.
    pub fn from_parts(classifier: [f64; 8], meteor: f64) -> Result<Self, ModelError> {
        let [c, e, ir, mm, p, pr, rd, ss] = classifier;
        let scores = AspectScores {
            criticism: c,
            example: e,
            importance_relevance: ir,
            materials_methods: mm,
            praise: p,
            presentation_reporting: pr,
            results_discussion: rd,
            suggestion_solution: ss,
            meteor,
        };
        scores.validate()?;
        Ok(scores)
    }

    /// Named fields in a stable order.
    pub fn named(&self) -> [(&'static str, f64); 9] {
        [
            ("criticism", self.criticism),
            ("example", self.example),
            ("importance_relevance", self.importance_relevance),
            ("materials_methods", self.materials_methods),
            ("praise", self.praise),
            ("presentation_reporting", self.presentation_reporting),
            ("results_discussion", self.results_discussion),
            ("suggestion_solution", self.suggestion_solution),
            ("meteor", self.meteor),
        ]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in self.named() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::AspectOutOfRange { name, value });
            }
        }
        Ok(())
    }
}

/// The assembled reward for one review.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeReward {
    pub quality: f64,
    pub corresp_fig: f64,
    pub corresp_nov: f64,
    pub format: f64,
    pub total: f64,
}

/// One GRPO sampling group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardGroup {
    pub manuscript_id: String,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    HumanReview,
    Generated,
}

/// One labeled sentence/context record of a correspondence dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub sentence: String,
    pub context: AuxiliaryContext,
    pub label_class: u8,
    pub source: PairSource,
}

impl LabeledPair {
    pub fn class(&self) -> Result<CorrespondenceClass, ModelError> {
        CorrespondenceClass::from_index(i64::from(self.label_class))
    }
}
