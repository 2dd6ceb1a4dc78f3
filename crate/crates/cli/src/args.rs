//! Command-line definitions.

use std::path::PathBuf;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ctxreward::analytics::{AblationVariant, CorrelationMethod};
use ctxreward::model::{Domain, PairSource};
use ctxreward::quality::MeteorReference;
use serde::de::DeserializeOwned;

use crate::config::{AspectKind, ClassifierKind, CompletionKind, SearchKind};

/// Parses a snake_case name into a serde enum. Only called on values clap
/// has already restricted to the enum's names.
fn named<T: DeserializeOwned>(name: String) -> T {
    serde_json::from_value(serde_json::Value::String(name)).expect("value restricted by clap")
}

fn meteor_parser() -> impl TypedValueParser<Value = MeteorReference> {
    PossibleValuesParser::new(["body", "abstract", "full"]).map(named::<MeteorReference>)
}

fn variant_parser() -> impl TypedValueParser<Value = AblationVariant> {
    PossibleValuesParser::new(AblationVariant::ALL.map(AblationVariant::as_str)).map(named::<AblationVariant>)
}

fn domain_parser() -> impl TypedValueParser<Value = Domain> {
    PossibleValuesParser::new(Domain::ALL.map(Domain::as_str)).map(named::<Domain>)
}

fn method_parser() -> impl TypedValueParser<Value = CorrelationMethod> {
    PossibleValuesParser::new(["pearson", "spearman"]).map(named::<CorrelationMethod>)
}

fn source_parser() -> impl TypedValueParser<Value = PairSource> {
    PossibleValuesParser::new(["human_review", "generated"]).map(named::<PairSource>)
}

/// Context-aware reward scoring for generated peer reviews.
///
/// Settings come from built-in defaults, then the config file, then
/// CTXREWARD_* environment variables, then flags. Records are written as
/// JSON lines with a leading `schema` field. Exit codes: 0 success, 2 input
/// error, 3 backend error.
#[derive(Debug, Parser)]
#[command(name = "ctxreward", version)]
pub struct Cli {
    /// TOML config file (default: $CTXREWARD_CONFIG).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score review files against one manuscript.
    Score(ScoreArgs),
    /// Score a group of sampled candidates and compute their advantages.
    Group(GroupArgs),
    /// Pair review sentences with a context, optionally labeling them.
    BuildDataset(BuildDatasetArgs),
    /// Evaluate a correspondence classifier on labeled pairs.
    EvalClassifier(EvalClassifierArgs),
    /// Build an auxiliary context for a manuscript.
    #[command(subcommand)]
    FetchContext(FetchContextCommand),
    /// Score a corpus with contexts withheld per variant.
    Ablate(AblateArgs),
    /// Emit plot-ready statistics tables.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Run the group-relative policy optimization bandit simulator.
    GrpoSim(GrpoSimArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct BackendArgs {
    /// Figure correspondence classifier.
    #[arg(long, value_enum, value_name = "KIND")]
    pub figure_backend: Option<ClassifierKind>,
    /// Novelty correspondence classifier.
    #[arg(long, value_enum, value_name = "KIND")]
    pub novelty_backend: Option<ClassifierKind>,
    /// Aspect scorer for the quality reward.
    #[arg(long, value_enum, value_name = "KIND")]
    pub aspect_backend: Option<AspectKind>,
    /// Manuscript text METEOR compares against.
    #[arg(long, value_parser = meteor_parser(), value_name = "TEXT")]
    pub meteor_reference: Option<MeteorReference>,
    /// Labeled-pair file for replay classifiers.
    #[arg(long, value_name = "PATH")]
    pub replay_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct WeightArgs {
    /// Weight of the quality reward.
    #[arg(long, value_name = "W")]
    pub weight_quality: Option<f64>,
    /// Weight of the figure correspondence reward.
    #[arg(long, value_name = "W")]
    pub weight_fig: Option<f64>,
    /// Weight of the novelty correspondence reward.
    #[arg(long, value_name = "W")]
    pub weight_nov: Option<f64>,
    /// Weight of the format reward.
    #[arg(long, value_name = "W")]
    pub weight_format: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ContextArgs {
    /// Figure details: plain text or an auxiliary_context/v1 record.
    #[arg(long, value_name = "PATH")]
    pub figure: Option<PathBuf>,
    /// Novelty assessment: plain text or an auxiliary_context/v1 record.
    #[arg(long, value_name = "PATH")]
    pub novelty: Option<PathBuf>,
    /// Fail (exit 2) unless both --figure and --novelty are given. Without
    /// it, a context that is not given is withheld and scores 0.
    #[arg(long)]
    pub require_contexts: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// File with one manuscript/v1 record.
    #[arg(long, value_name = "PATH")]
    pub manuscript: PathBuf,
    /// Raw review text file; repeat for several reviews.
    #[arg(long = "review", value_name = "PATH", required = true)]
    pub reviews: Vec<PathBuf>,
    #[command(flatten)]
    pub contexts: ContextArgs,
    #[command(flatten)]
    pub backends: BackendArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    /// Write review_report/v1 records here instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GroupArgs {
    /// File with one manuscript/v1 record.
    #[arg(long, value_name = "PATH")]
    pub manuscript: PathBuf,
    /// candidate/v1 records, one per sampled review.
    #[arg(long, value_name = "PATH")]
    pub candidates: PathBuf,
    /// Expected group size; must equal the number of candidates.
    #[arg(short = 'G', long, value_name = "N")]
    pub group_size: Option<usize>,
    #[command(flatten)]
    pub contexts: ContextArgs,
    #[command(flatten)]
    pub backends: BackendArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    /// Also write each candidate's review_report/v1 record to this file.
    #[arg(long, value_name = "PATH")]
    pub reports: Option<PathBuf>,
    /// Write the reward_group/v1 record here instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ContextChoice {
    Figure,
    Novelty,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Labeler {
    /// Write unlabeled_pair/v1 records.
    #[default]
    None,
    /// Label with the rendered prompt sent to the completion client.
    Completion,
    /// Label with the shipped keyword rules.
    Rule,
}

#[derive(Debug, Clone, Args)]
pub struct BuildDatasetArgs {
    /// Which context the pairs are built against.
    #[arg(long, value_enum)]
    pub kind: ContextChoice,
    /// Context file: plain text or an auxiliary_context/v1 record.
    #[arg(long, value_name = "PATH")]
    pub context: PathBuf,
    /// Raw review text file; repeat for several reviews.
    #[arg(long = "review", value_name = "PATH", required = true)]
    pub reviews: Vec<PathBuf>,
    /// How pairs are labeled.
    #[arg(long, value_enum, default_value_t = Labeler::None)]
    pub labeler: Labeler,
    /// Source tag stored on labeled pairs.
    #[arg(long, value_parser = source_parser(), default_value = "generated")]
    pub source: PairSource,
    /// Completion client used by the completion labeler.
    #[arg(long, value_enum, value_name = "KIND")]
    pub completion: Option<CompletionKind>,
    /// Maximum concurrent labeling requests.
    #[arg(long, value_name = "N")]
    pub max_parallel: Option<usize>,
    /// Write records here instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalClassifierArgs {
    /// labeled_pair/v1 records.
    #[arg(long, value_name = "PATH")]
    pub labeled: PathBuf,
    /// Classifier to evaluate.
    #[arg(long, value_enum, default_value_t = ClassifierKind::Rule, value_name = "KIND")]
    pub backend: ClassifierKind,
    /// Keep only pairs of this context kind; required for a remote backend,
    /// which is reached at the endpoint of that kind.
    #[arg(long, value_enum)]
    pub kind: Option<ContextChoice>,
    /// Labeled-pair file for the replay backend.
    #[arg(long, value_name = "PATH")]
    pub replay_labels: Option<PathBuf>,
    /// Write the evaluation_report/v1 record here instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum FetchContextCommand {
    /// Ingest a figure description file.
    Figure(FetchFigureArgs),
    /// Assemble a novelty assessment from keyword search and comparisons.
    Novelty(FetchNoveltyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FetchFigureArgs {
    /// Figure description text file.
    #[arg(long, value_name = "PATH")]
    pub source: PathBuf,
    /// Write the auxiliary_context/v1 record here instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FetchNoveltyArgs {
    /// File with one manuscript/v1 record.
    #[arg(long, value_name = "PATH")]
    pub manuscript: PathBuf,
    /// Directory for cached stage outputs.
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Completion client for keywords, comparisons and the summary.
    #[arg(long, value_enum, value_name = "KIND")]
    pub completion: Option<CompletionKind>,
    /// Scholarly search client.
    #[arg(long, value_enum, value_name = "KIND")]
    pub search: Option<SearchKind>,
    /// Article corpus for the stub search.
    #[arg(long, value_name = "PATH")]
    pub search_corpus: Option<PathBuf>,
    /// Maximum number of related articles compared.
    #[arg(long, value_name = "N")]
    pub result_cap: Option<usize>,
    /// Also write the novelty_artifacts/v1 record with every intermediate.
    #[arg(long, value_name = "PATH")]
    pub artifacts: Option<PathBuf>,
    /// Write the auxiliary_context/v1 record here instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    /// ablation_item/v1 records.
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Variant to run; repeat for several (default: all four).
    #[arg(long = "variant", value_parser = variant_parser(), value_name = "VARIANT")]
    pub variants: Vec<AblationVariant>,
    #[command(flatten)]
    pub backends: BackendArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    /// Write ablation_row/v1 records here instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Standardize per-epoch metrics and correlate them.
    Epochs(EpochsArgs),
    /// Per-domain box data and a two-sample t-test.
    Domains(DomainsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EpochsArgs {
    /// CSV with an epoch column followed by one column per metric.
    #[arg(long, value_name = "PATH")]
    pub epochs: PathBuf,
    /// Correlation coefficient.
    #[arg(long, value_parser = method_parser(), default_value = "pearson")]
    pub method: CorrelationMethod,
    /// Also write heatmap.csv and learning_curves.csv here.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Write the correlation_matrix/v1 record here instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DomainsArgs {
    /// CSV with `domain` and `score` columns.
    #[arg(long, value_name = "PATH")]
    pub scores: PathBuf,
    /// First domain of the t-test.
    #[arg(long, value_parser = domain_parser(), default_value = "computer_science")]
    pub a: Domain,
    /// Second domain of the t-test.
    #[arg(long, value_parser = domain_parser(), default_value = "biological_sciences")]
    pub b: Domain,
    /// Also write box_data.csv here.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Write box_summary/v1 and t_test/v1 records here instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GrpoSimArgs {
    /// Reward of each template, comma separated.
    #[arg(long, value_delimiter = ',', required = true, value_name = "R,R,..")]
    pub rewards: Vec<f64>,
    /// Learning rate.
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// Samples per step.
    #[arg(short = 'G', long, value_name = "N")]
    pub group_size: Option<usize>,
    /// Number of updates.
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write trajectory_point/v1 records here instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}
