//! Context-aware reward functions for automated peer-review generation.
//!
//! The crate scores generated reviews with a composite reward made of a
//! nine-aspect quality score, two correspondence scores that check how well
//! the review engages with auxiliary context (figure descriptions and novelty
//! assessments), and a format bonus for a leading thinking trace. Rewards for
//! a group of sampled candidates become group-relative advantages for policy
//! optimization.
//!
//! Module map:
//!
//! - [`model`]: shared domain types.
//! - [`segmentation`]: thinking-trace extraction, sentence splitting, format reward.
//! - [`correspondence`]: classifier backends and the consistent-among-relevant score.
//! - [`quality`]: aspect scorers, METEOR and the quality sum.
//! - [`reward`]: composite reward, group advantages, candidate scoring, bandit simulator.
//! - [`dataset`]: labeling prompts, label parsing, pair building, weighted F1.
//! - [`context`]: figure-detail ingestion and the novelty-assessment pipeline.
//! - [`analytics`]: standardization, correlation, t-test, ablation harness.
//! - [`records`]: line-delimited JSON record format.

pub mod analytics;
pub mod context;
pub mod correspondence;
pub mod dataset;
pub mod model;
pub mod quality;
pub mod records;
pub mod reward;
pub mod segmentation;
pub mod text;
pub mod transport;

pub use model::{
    AspectScores, AuxiliaryContext, CompositeReward, ContextKind, CorrespondenceClass, Domain,
    LabeledPair, Manuscript, PairSource, Provenance, Review, RewardGroup, SentenceVerdict,
};
