//! Builds scorers and clients from the effective configuration.

use std::path::Path;

use ctxreward::context::{
    NoveltyClients, RemoteCompletion, RemoteSearch, ScholarlySearchClient, StubCompletion,
    StubFallback, StubSearch, TextCompletionClient,
};
use ctxreward::correspondence::{ClassifierBackend, RemoteClassifier, ReplayClassifier, RuleClassifier};
use ctxreward::model::LabeledPair;
use ctxreward::quality::{AspectScorerBackend, LexiconScorer, RemoteAspectScorer};
use ctxreward::reward::ScoringBackends;
use ctxreward::transport::{EndpointConfig, RemoteEndpoint};

use crate::config::{AspectKind, ClassifierKind, CompletionKind, Config, SearchKind};
use crate::error::CliError;
use crate::io::read_record_file;

fn endpoint(name: &str, config: &EndpointConfig) -> Result<RemoteEndpoint, CliError> {
    if config.url.trim().is_empty() {
        return Err(CliError::Input(format!("remote.{name}.url is not set")));
    }
    Ok(RemoteEndpoint::http(config.clone()))
}

fn replay(path: Option<&Path>) -> Result<ReplayClassifier, CliError> {
    let path = path.ok_or_else(|| {
        CliError::Input("the replay backend needs backends.replay_labels".into())
    })?;
    let pairs: Vec<LabeledPair> = read_record_file(path)?;
    Ok(ReplayClassifier::from_pairs(&pairs)?)
}

/// A correspondence classifier; `name` selects the remote endpoint
/// (`figure` or `novelty`).
pub fn classifier(config: &Config, kind: ClassifierKind, name: &str) -> Result<ClassifierBackend, CliError> {
    Ok(match kind {
        ClassifierKind::Rule => ClassifierBackend::RuleBased(RuleClassifier::default()),
        ClassifierKind::Replay => ClassifierBackend::Replay(replay(config.backends.replay_labels.as_deref())?),
        ClassifierKind::Remote => {
            let ep = if name == "novelty" { &config.remote.novelty } else { &config.remote.figure };
            ClassifierBackend::Remote(RemoteClassifier { endpoint: endpoint(name, ep)? })
        }
    })
}

pub fn scoring_backends(config: &Config) -> Result<ScoringBackends, CliError> {
    let aspects = match config.backends.aspects {
        AspectKind::Lexicon => AspectScorerBackend::Lexicon(LexiconScorer::default()),
        AspectKind::Remote => AspectScorerBackend::Remote(RemoteAspectScorer {
            endpoint: endpoint("aspects", &config.remote.aspects)?,
        }),
    };
    Ok(ScoringBackends {
        aspects,
        figure: classifier(config, config.backends.figure, "figure")?,
        novelty: classifier(config, config.backends.novelty, "novelty")?,
        meteor_reference: config.backends.meteor_reference,
    })
}

/// The completion client used for keywords, comparisons, summaries and
/// labeling. `fallback` is the stub's answer when nothing else matches.
pub fn completion_client(config: &Config, fallback: StubFallback) -> Result<TextCompletionClient, CliError> {
    Ok(match config.clients.completion {
        CompletionKind::Remote => TextCompletionClient::Remote(RemoteCompletion {
            endpoint: endpoint("completion", &config.remote.completion)?,
        }),
        CompletionKind::Echo => TextCompletionClient::Stub(StubCompletion::new(fallback)),
    })
}

pub fn search_client(config: &Config) -> Result<ScholarlySearchClient, CliError> {
    Ok(match config.clients.search {
        SearchKind::Remote => ScholarlySearchClient::Remote(RemoteSearch {
            endpoint: endpoint("search", &config.remote.search)?,
            per_query_limit: config.remote.search_limit,
        }),
        SearchKind::Stub => {
            let corpus = match &config.clients.search_corpus {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                    serde_json::from_str::<StubSearch>(&text)
                        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
                }
                None => StubSearch::default(),
            };
            ScholarlySearchClient::Stub(corpus)
        }
    })
}

pub fn novelty_clients(config: &Config) -> Result<NoveltyClients, CliError> {
    Ok(NoveltyClients {
        keywords: completion_client(config, StubFallback::EchoTitleWords)?,
        search: search_client(config)?,
        summary: completion_client(config, StubFallback::EchoPrompt)?,
    })
}
