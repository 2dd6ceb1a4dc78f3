//! Subcommand implementations.
//!
//! [`score_reviews`] and [`score_group`] are the entry points other hosts
//! wrap; the `cmd_*` functions add file handling around them.

use std::io::Write;
use std::path::{Path, PathBuf};

use ctxreward::analytics::{
    correlation_matrix, domain_box_data, domain_t_test, run_ablation, standardize_epochs,
    AblationItem, AblationVariant, BoxSummary, CorrelationMatrix, NamedSeries, StoredReviews,
};
use ctxreward::context::{assemble_novelty_context, ingest_figure_details, ContextCache, StubFallback};
use ctxreward::correspondence::{classify_pair, ClassifierBackend, RuleClassifier};
use ctxreward::dataset::{build_pairs, evaluate_backend, label_pairs};
use ctxreward::model::{ContextKind, Domain, LabeledPair, Manuscript, Review, RewardGroup};
use ctxreward::reward::{simulate_grpo, ToyPolicy};
use ctxreward::reward::{score_candidates, score_review, Candidate, Contexts, ReviewReport, ScoredGroup};
use serde::Deserialize;

use crate::args::*;
use crate::backends::{classifier, completion_client, novelty_clients, scoring_backends};
use crate::config::{self, ClassifierKind, Config};
use crate::error::CliError;
use crate::io::{emit, emit_lines, lines, optional_context, read_context, read_manuscript, read_record_file, read_review, write_text};

/// Scores preprocessed reviews of one manuscript with the configured
/// backends.
pub fn score_reviews(
    config: &Config,
    manuscript: &Manuscript,
    contexts: &Contexts,
    reviews: &[Review],
) -> Result<Vec<ReviewReport>, CliError> {
    let backends = scoring_backends(config)?;
    reviews
        .iter()
        .map(|review| Ok(score_review(&config.reward, &backends, manuscript, contexts, review)?))
        .collect()
}

/// Scores one group of raw candidate texts and computes their advantages.
pub fn score_group(
    config: &Config,
    manuscript: &Manuscript,
    contexts: &Contexts,
    candidates: &[String],
) -> Result<ScoredGroup, CliError> {
    let backends = scoring_backends(config)?;
    Ok(score_candidates(&config.reward, &backends, manuscript, contexts, candidates)?)
}

/// Loads the effective configuration: `--config` or `CTXREWARD_CONFIG`,
/// then the `CTXREWARD_*` variables in `env`.
pub fn load_config(flag: Option<PathBuf>, env: Vec<(String, String)>) -> Result<Config, CliError> {
    let path = config::config_path(flag, &env);
    config::load(path.as_deref(), env)
}

pub fn apply_backend_args(config: &mut Config, args: &BackendArgs) {
    let b = &mut config.backends;
    if let Some(kind) = args.figure_backend {
        b.figure = kind;
    }
    if let Some(kind) = args.novelty_backend {
        b.novelty = kind;
    }
    if let Some(kind) = args.aspect_backend {
        b.aspects = kind;
    }
    if let Some(reference) = args.meteor_reference {
        b.meteor_reference = reference;
    }
    if let Some(path) = &args.replay_labels {
        b.replay_labels = Some(path.clone());
    }
}

pub fn apply_weight_args(config: &mut Config, args: &WeightArgs) {
    let w = &mut config.reward.weights;
    for (slot, value) in [
        (&mut w.quality, args.weight_quality),
        (&mut w.fig, args.weight_fig),
        (&mut w.nov, args.weight_nov),
        (&mut w.format, args.weight_format),
    ] {
        if let Some(v) = value {
            *slot = v;
        }
    }
}

fn read_contexts(args: &ContextArgs) -> Result<Contexts, CliError> {
    let required = args.require_contexts;
    Ok(Contexts {
        figure: optional_context(ContextKind::FigureDetails, args.figure.as_deref(), required)?,
        novelty: optional_context(ContextKind::NoveltyAssessment, args.novelty.as_deref(), required)?,
    })
}

fn kind_of(choice: ContextChoice) -> ContextKind {
    match choice {
        ContextChoice::Figure => ContextKind::FigureDetails,
        ContextChoice::Novelty => ContextKind::NoveltyAssessment,
    }
}

pub fn cmd_score(mut config: Config, args: &ScoreArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    apply_backend_args(&mut config, &args.backends);
    apply_weight_args(&mut config, &args.weights);
    let manuscript = read_manuscript(&args.manuscript)?;
    let contexts = read_contexts(&args.contexts)?;
    let reviews = args
        .reviews
        .iter()
        .map(|p| read_review(p))
        .collect::<Result<Vec<_>, _>>()?;
    let reports = score_reviews(&config, &manuscript, &contexts, &reviews)?;
    emit(args.output.as_deref(), stdout, &reports)
}

pub fn cmd_group(mut config: Config, args: &GroupArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    apply_backend_args(&mut config, &args.backends);
    apply_weight_args(&mut config, &args.weights);
    if let Some(g) = args.group_size {
        config.reward.group_size = g;
    }
    let manuscript = read_manuscript(&args.manuscript)?;
    let contexts = read_contexts(&args.contexts)?;
    let candidates: Vec<Candidate> = read_record_file(&args.candidates)?;
    let texts: Vec<String> = candidates.into_iter().map(|c| c.text).collect();
    let scored = score_group(&config, &manuscript, &contexts, &texts)?;
    if let Some(path) = &args.reports {
        emit(Some(path), stdout, &scored.candidates)?;
    }
    emit::<RewardGroup>(args.output.as_deref(), stdout, &[scored.group])
}

pub fn cmd_build_dataset(mut config: Config, args: &BuildDatasetArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if let Some(kind) = args.completion {
        config.clients.completion = kind;
    }
    if let Some(n) = args.max_parallel {
        config.clients.max_parallel = n;
    }
    let context = read_context(kind_of(args.kind), &args.context)?;
    let reviews = args
        .reviews
        .iter()
        .map(|p| read_review(p))
        .collect::<Result<Vec<_>, _>>()?;
    let pairs = build_pairs(&reviews, &context);
    let output = args.output.as_deref();
    match args.labeler {
        Labeler::None => emit(output, stdout, &pairs),
        Labeler::Completion => {
            let client = completion_client(&config, StubFallback::EchoPrompt)?;
            let labeled = label_pairs(&client, &pairs, args.source, config.clients.max_parallel)?;
            emit(output, stdout, &labeled)
        }
        Labeler::Rule => {
            let rules = ClassifierBackend::RuleBased(RuleClassifier::default());
            let labeled = pairs
                .iter()
                .map(|pair| {
                    let verdict = classify_pair(&rules, &pair.sentence, &pair.context)?;
                    Ok(LabeledPair {
                        sentence: pair.sentence.clone(),
                        context: pair.context.clone(),
                        label_class: verdict.class().index() as u8,
                        source: args.source,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            emit(output, stdout, &labeled)
        }
    }
}

pub fn cmd_eval_classifier(mut config: Config, args: &EvalClassifierArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if let Some(path) = &args.replay_labels {
        config.backends.replay_labels = Some(path.clone());
    }
    let mut labeled: Vec<LabeledPair> = read_record_file(&args.labeled)?;
    if let Some(choice) = args.kind {
        labeled.retain(|p| p.context.kind == kind_of(choice));
    }
    let endpoint = match (args.backend, args.kind) {
        (ClassifierKind::Remote, None) => {
            return Err(CliError::Input("a remote backend needs --kind".into()));
        }
        (_, Some(ContextChoice::Novelty)) => "novelty",
        _ => "figure",
    };
    let backend = classifier(&config, args.backend, endpoint)?;
    let report = evaluate_backend(&backend, &labeled)?;
    emit(args.output.as_deref(), stdout, &[report])
}

pub fn cmd_fetch_figure(args: &FetchFigureArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let context = ingest_figure_details(&args.source)?;
    emit(args.output.as_deref(), stdout, &[context])
}

pub fn cmd_fetch_novelty(mut config: Config, args: &FetchNoveltyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if let Some(kind) = args.completion {
        config.clients.completion = kind;
    }
    if let Some(kind) = args.search {
        config.clients.search = kind;
    }
    if let Some(path) = &args.search_corpus {
        config.clients.search_corpus = Some(path.clone());
    }
    if let Some(cap) = args.result_cap {
        config.novelty.result_cap = cap;
    }
    let manuscript = read_manuscript(&args.manuscript)?;
    let clients = novelty_clients(&config)?;
    let cache = args.cache_dir.as_ref().map(ContextCache::open).transpose()?;
    let artifacts = assemble_novelty_context(&clients, &config.novelty, cache.as_ref(), &manuscript)?;
    if let Some(path) = &args.artifacts {
        emit(Some(path), stdout, std::slice::from_ref(&artifacts))?;
    }
    emit(args.output.as_deref(), stdout, &[artifacts.context])
}

pub fn cmd_ablate(mut config: Config, args: &AblateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    apply_backend_args(&mut config, &args.backends);
    apply_weight_args(&mut config, &args.weights);
    let corpus: Vec<AblationItem> = read_record_file(&args.corpus)?;
    for item in &corpus {
        item.manuscript.validate()?;
    }
    let variants: Vec<AblationVariant> = if args.variants.is_empty() {
        AblationVariant::ALL.to_vec()
    } else {
        args.variants.clone()
    };
    let backends = scoring_backends(&config)?;
    let rows = run_ablation(&variants, &corpus, &StoredReviews, &config.reward, &backends)?;
    emit(args.output.as_deref(), stdout, &rows)
}

/// Reads an epoch CSV: the first column labels the epoch, every other
/// column is one metric.
pub fn read_epochs(path: &Path) -> Result<(Vec<String>, NamedSeries), CliError> {
    let bad = |e: &dyn std::fmt::Display| CliError::Input(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(&e))?;
    let headers = reader.headers().map_err(|e| bad(&e))?.clone();
    if headers.len() < 2 {
        return Err(bad(&"expected an epoch column and at least one metric"));
    }
    let mut epochs = Vec::new();
    let mut series: NamedSeries = headers.iter().skip(1).map(|h| (h.to_string(), Vec::new())).collect();
    for row in reader.records() {
        let row = row.map_err(|e| bad(&e))?;
        epochs.push(row.get(0).unwrap_or_default().to_string());
        for (cell, (name, values)) in row.iter().skip(1).zip(series.iter_mut()) {
            let value: f64 = cell
                .trim()
                .parse()
                .map_err(|_| bad(&format!("column `{name}`: `{cell}` is not a number")))?;
            values.push(value);
        }
    }
    Ok((epochs, series))
}

fn csv_text(rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for row in rows {
        writer.write_record(&row).map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
}

/// Heatmap table: a header of metric names and one row per metric.
pub fn heatmap_csv(matrix: &CorrelationMatrix) -> Result<String, CliError> {
    let mut rows = vec![std::iter::once("metric".to_string()).chain(matrix.names.iter().cloned()).collect()];
    for (name, values) in matrix.names.iter().zip(&matrix.values) {
        let mut row = vec![name.clone()];
        row.extend(values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        rows.push(row);
    }
    csv_text(rows)
}

/// Standardized learning curves: one row per epoch.
pub fn learning_curves_csv(epochs: &[String], standardized: &NamedSeries) -> Result<String, CliError> {
    let mut rows = vec![std::iter::once("epoch".to_string()).chain(standardized.iter().map(|(n, _)| n.clone())).collect()];
    for (t, epoch) in epochs.iter().enumerate() {
        let mut row = vec![epoch.clone()];
        row.extend(standardized.iter().map(|(_, v)| v[t].to_string()));
        rows.push(row);
    }
    csv_text(rows)
}

pub fn cmd_analyze_epochs(args: &EpochsArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (epochs, series) = read_epochs(&args.epochs)?;
    let standardized = standardize_epochs(&series)?;
    let matrix = correlation_matrix(&standardized, args.method)?;
    if let Some(dir) = &args.out_dir {
        write_text(&dir.join("heatmap.csv"), &heatmap_csv(&matrix)?)?;
        write_text(&dir.join("learning_curves.csv"), &learning_curves_csv(&epochs, &standardized)?)?;
    }
    emit(args.output.as_deref(), stdout, &[matrix])
}

#[derive(Debug, Deserialize)]
struct DomainScore {
    domain: Domain,
    score: f64,
}

pub fn read_domain_scores(path: &Path) -> Result<Vec<(Domain, f64)>, CliError> {
    let bad = |e: &dyn std::fmt::Display| CliError::Input(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(&e))?;
    reader
        .deserialize::<DomainScore>()
        .map(|row| row.map(|r| (r.domain, r.score)).map_err(|e| bad(&e)))
        .collect()
}

fn box_csv(summaries: &[BoxSummary]) -> Result<String, CliError> {
    let mut rows = vec![["domain", "n", "min", "q1", "median", "q3", "max", "mean"].map(String::from).to_vec()];
    for s in summaries {
        rows.push(vec![
            s.domain.as_str().to_string(),
            s.n.to_string(),
            s.min.to_string(),
            s.q1.to_string(),
            s.median.to_string(),
            s.q3.to_string(),
            s.max.to_string(),
            s.mean.to_string(),
        ]);
    }
    csv_text(rows)
}

pub fn cmd_analyze_domains(args: &DomainsArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let scores = read_domain_scores(&args.scores)?;
    let boxes = domain_box_data(&scores);
    let test = domain_t_test(&scores, args.a, args.b)?;
    if let Some(dir) = &args.out_dir {
        write_text(&dir.join("box_data.csv"), &box_csv(&boxes)?)?;
    }
    let mut out = lines(&boxes)?;
    out.extend(lines(&[test])?);
    emit_lines(args.output.as_deref(), stdout, &out)
}

pub fn cmd_grpo_sim(mut config: Config, args: &GrpoSimArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if let Some(g) = args.group_size {
        config.reward.group_size = g;
    }
    let policy = ToyPolicy::uniform(args.rewards.len(), args.lr);
    let trajectory = simulate_grpo(&policy, &config.reward, &args.rewards, args.steps, args.seed)?;
    emit(args.output.as_deref(), stdout, &trajectory)
}

/// Runs a parsed command line against `env` (the process environment or a
/// substitute), writing record output to `stdout` unless redirected.
pub fn run(cli: Cli, env: Vec<(String, String)>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(cli.config, env)?;
    match &cli.command {
        Command::Score(args) => cmd_score(config, args, stdout),
        Command::Group(args) => cmd_group(config, args, stdout),
        Command::BuildDataset(args) => cmd_build_dataset(config, args, stdout),
        Command::EvalClassifier(args) => cmd_eval_classifier(config, args, stdout),
        Command::FetchContext(FetchContextCommand::Figure(args)) => cmd_fetch_figure(args, stdout),
        Command::FetchContext(FetchContextCommand::Novelty(args)) => cmd_fetch_novelty(config, args, stdout),
        Command::Ablate(args) => cmd_ablate(config, args, stdout),
        Command::Analyze(AnalyzeCommand::Epochs(args)) => cmd_analyze_epochs(args, stdout),
        Command::Analyze(AnalyzeCommand::Domains(args)) => cmd_analyze_domains(args, stdout),
        Command::GrpoSim(args) => cmd_grpo_sim(config, args, stdout),
    }
}

