//! Auxiliary-context assembly: figure-detail ingestion and the novelty
//! pipeline (keywords, scholarly search, per-article comparison, summary).

mod cache;
mod clients;

pub use cache::ContextCache;
pub use clients::{
    content_words, Article, CompletionRequest, CompletionResponse, RemoteCompletion,
    RemoteSearch, ScholarlySearchClient, StubCompletion, StubFallback, StubRule, StubSearch,
    TextCompletionClient,
};

use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{text_digest, AuxiliaryContext, ContextKind, Manuscript, ModelError, Provenance};
use crate::text::fill_template;
use crate::transport::TransportError;
use crate::records::Record;

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("client failure: {0}")]
    ClientFailure(String),
    #[error("client failure: {0}")]
    Transport(#[from] TransportError),
    #[error("invalid client response: {0}")]
    InvalidResponse(String),
    #[error("context text is empty")]
    EmptyContext,
    #[error("cannot read {name}: {reason}")]
    UnreadableSource { name: String, reason: String },
    #[error("context cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Upper bound on keywords kept from one completion.
pub const MAX_KEYWORDS: usize = 10;

/// Assessment used when the search finds nothing to compare against.
pub const NO_SIMILAR_ARTICLES: &str = "No similar articles were found for this manuscript. \
The novelty of the work could not be compared against prior literature.";

pub const KEYWORD_PROMPT: &str = "Generate up to 10 search keywords for finding scholarly articles similar to the manuscript below. \
Answer with one keyword or short phrase per line and nothing else.

Title: {title}
Abstract: {abstract}
";

/// Default per-article comparison prompt. This wording is our own; it is not
/// taken from any published prompt and can be replaced through
/// [`NoveltyConfig::comparison_template`].
pub const DEFAULT_COMPARISON_PROMPT: &str = "Compare the manuscript below with one related article. \
Describe what the manuscript contributes beyond the related article and where the two overlap.

### Manuscript
Title: {title}
Abstract: {abstract}

### Related Article
Title: {article_title}
Abstract: {article_abstract}
";

/// Default summary prompt; `{sections}` receives one `### Article N` block
/// per compared article.
pub const DEFAULT_SUMMARY_PROMPT: &str = "Summarize the novelty notes below into one novelty assessment of the manuscript, \
stating which contributions are new and which have been explored before.

### Manuscript
Title: {title}

{sections}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoveltyConfig {
    /// Maximum number of distinct articles compared.
    pub result_cap: usize,
    /// Maximum number of comparisons in flight.
    pub max_parallel: usize,
    pub comparison_template: String,
    pub summary_template: String,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        NoveltyConfig {
            result_cap: 10,
            max_parallel: 4,
            comparison_template: DEFAULT_COMPARISON_PROMPT.to_string(),
            summary_template: DEFAULT_SUMMARY_PROMPT.to_string(),
        }
    }
}

/// Splits a keyword completion into clean, distinct keywords.
///
/// Items are separated by newlines or commas; list bullets, numbering and
/// surrounding quotes are stripped. Duplicates are dropped
/// case-insensitively, keeping the first spelling.
pub fn parse_keywords(response: &str) -> Vec<String> {
    let mut keywords: Vec<String> = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    for item in response.split(['\n', ',']) {
        let mut item = item.trim();
        item = item.trim_start_matches(['-', '*', '•']).trim_start();
        let digits = item.len() - item.trim_start_matches(|c: char| c.is_ascii_digit()).len();
        if digits > 0 {
            let after = &item[digits..];
            if let Some(rest) = after.strip_prefix('.').or_else(|| after.strip_prefix(')')) {
                item = rest.trim_start();
            }
        }
        let item = item.trim_matches(|c: char| c == '"' || c == '\'' || c.is_whitespace());
        if item.is_empty() {
            continue;
        }
        let folded = item.to_lowercase();
        if !seen.contains(&folded) {
            seen.push(folded);
            keywords.push(item.to_string());
        }
        if keywords.len() == MAX_KEYWORDS {
            break;
        }
    }
    keywords
}

/// Asks `client` for search keywords. Falls back to the title's content words
/// (or the whole title) when the reply yields none, so the result always has
/// between 1 and 10 entries.
pub fn generate_keywords(
    client: &TextCompletionClient,
    title: &str,
    abstract_text: &str,
) -> Result<Vec<String>, ContextError> {
    let title = title.trim();
    if title.is_empty() {
        return Err(ModelError::EmptyTitle.into());
    }
    let prompt = fill_template(
        KEYWORD_PROMPT,
        &[("title", title), ("abstract", abstract_text.trim())],
    );
    let mut keywords = parse_keywords(&client.complete(&prompt)?);
    if keywords.is_empty() {
        keywords = content_words(title);
        keywords.truncate(MAX_KEYWORDS);
    }
    if keywords.is_empty() {
        keywords.push(title.to_string());
    }
    Ok(keywords)
}

/// The clients used by the novelty pipeline.
#[derive(Debug, Clone)]
pub struct NoveltyClients {
    pub keywords: TextCompletionClient,
    pub search: ScholarlySearchClient,
    pub summary: TextCompletionClient,
}

/// Every intermediate product of one novelty-pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyArtifacts {
    pub keywords: Vec<String>,
    pub articles: Vec<Article>,
    pub comparisons: Vec<String>,
    pub context: AuxiliaryContext,
}

impl Record for NoveltyArtifacts {
    const SCHEMA: &'static str = "novelty_artifacts/v1";
}

/// Cache stage holding the final assessment of a manuscript.
pub const NOVELTY_CONTEXT_STAGE: &str = "novelty_context";

fn manuscript_input_digest(manuscript: &Manuscript) -> String {
    text_digest(&format!("{}\u{0}{}", manuscript.title, manuscript.abstract_text))
}

/// Looks up a previously assembled novelty assessment.
pub fn cached_novelty_context(
    cache: &ContextCache,
    manuscript: &Manuscript,
) -> Result<Option<AuxiliaryContext>, ContextError> {
    cache.load(
        &manuscript.id,
        NOVELTY_CONTEXT_STAGE,
        &manuscript_input_digest(manuscript),
    )
}

fn cached<T, F>(
    cache: Option<&ContextCache>,
    manuscript_id: &str,
    stage: &str,
    input_digest: &str,
    compute: F,
) -> Result<T, ContextError>
where
    T: Serialize + serde::de::DeserializeOwned,
    F: FnOnce() -> Result<T, ContextError>,
{
    match cache {
        Some(cache) => cache.get_or_compute(manuscript_id, stage, input_digest, compute),
        None => compute(),
    }
}

/// Renders the summary prompt with one `### Article N` section per note.
pub fn summary_prompt(
    template: &str,
    manuscript: &Manuscript,
    articles: &[Article],
    comparisons: &[String],
) -> String {
    let sections: String = articles
        .iter()
        .zip(comparisons)
        .enumerate()
        .map(|(i, (article, note))| {
            format!("### Article {}: {}\n{}\n\n", i + 1, article.title, note.trim())
        })
        .collect();
    fill_template(
        template,
        &[
            ("title", manuscript.title.as_str()),
            ("sections", sections.trim_end()),
        ],
    ) + "\n"
}

/// Runs the novelty pipeline and returns its artifacts.
///
/// Each keyword is searched once; hits are deduplicated by id in first-seen
/// order and capped at `config.result_cap`. Comparisons run on at most
/// `config.max_parallel` threads and keep article order. With a cache, every
/// stage is read through it, and the final context is also stored under
/// [`NOVELTY_CONTEXT_STAGE`].
pub fn assemble_novelty_context(
    clients: &NoveltyClients,
    config: &NoveltyConfig,
    cache: Option<&ContextCache>,
    manuscript: &Manuscript,
) -> Result<NoveltyArtifacts, ContextError> {
    manuscript.validate()?;
    let id = manuscript.id.as_str();
    let input_digest = manuscript_input_digest(manuscript);

    let keywords: Vec<String> = cached(cache, id, "keywords", &input_digest, || {
        generate_keywords(&clients.keywords, &manuscript.title, &manuscript.abstract_text)
    })?;

    let search_digest = text_digest(&format!("{}\u{0}{}", config.result_cap, keywords.join("\n")));
    let articles: Vec<Article> = cached(cache, id, "search", &search_digest, || {
        let mut articles: Vec<Article> = Vec::new();
        for keyword in &keywords {
            if articles.len() >= config.result_cap {
                break;
            }
            for hit in clients.search.search(keyword)? {
                if articles.len() >= config.result_cap {
                    break;
                }
                if !articles.iter().any(|a| a.id == hit.id) {
                    articles.push(hit);
                }
            }
        }
        Ok(articles)
    })?;

    let (comparisons, text) = if articles.is_empty() {
        (Vec::new(), NO_SIMILAR_ARTICLES.to_string())
    } else {
        let compare = |article: &Article| -> Result<String, ContextError> {
            let prompt = fill_template(
                &config.comparison_template,
                &[
                    ("title", manuscript.title.as_str()),
                    ("abstract", manuscript.abstract_text.as_str()),
                    ("article_title", article.title.as_str()),
                    ("article_abstract", article.abstract_text.as_str()),
                ],
            );
            cached(cache, id, "comparison", &text_digest(&prompt), || {
                clients.summary.complete(&prompt)
            })
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.max_parallel.max(1))
            .build()
            .map_err(|e| ContextError::ClientFailure(e.to_string()))?;
        let comparisons = pool.install(|| {
            articles
                .par_iter()
                .map(compare)
                .collect::<Result<Vec<_>, _>>()
        })?;
        let prompt = summary_prompt(&config.summary_template, manuscript, &articles, &comparisons);
        let summary: String = cached(cache, id, "summary", &text_digest(&prompt), || {
            clients.summary.complete(&prompt)
        })?;
        if summary.trim().is_empty() {
            return Err(ContextError::InvalidResponse("summary is empty".into()));
        }
        (comparisons, summary)
    };

    let context = AuxiliaryContext::new(
        ContextKind::NoveltyAssessment,
        text,
        Provenance::PipelineGenerated,
    )?;
    if let Some(cache) = cache {
        cache.store(id, NOVELTY_CONTEXT_STAGE, &input_digest, &context)?;
    }
    Ok(NoveltyArtifacts {
        keywords,
        articles,
        comparisons,
        context,
    })
}

/// Normalizes CRLF and lone CR line endings to LF.
pub fn normalize_line_endings(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Reads a context of `kind` from `reader`, normalizing line endings;
/// `name` is used in errors.
pub fn ingest_context_from<R: Read>(
    kind: ContextKind,
    mut reader: R,
    name: &str,
) -> Result<AuxiliaryContext, ContextError> {
    let unreadable = |reason: String| ContextError::UnreadableSource {
        name: name.to_string(),
        reason,
    };
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| unreadable(e.to_string()))?;
    let text = String::from_utf8(bytes).map_err(|e| unreadable(e.to_string()))?;
    let text = normalize_line_endings(&text);
    if text.trim().is_empty() {
        return Err(ContextError::EmptyContext);
    }
    Ok(AuxiliaryContext::new(kind, text, Provenance::Ingested)?)
}

pub fn ingest_context(kind: ContextKind, path: &Path) -> Result<AuxiliaryContext, ContextError> {
    let name = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| ContextError::UnreadableSource {
        name: name.clone(),
        reason: e.to_string(),
    })?;
    ingest_context_from(kind, file, &name)
}

/// Reads a figure description from `reader`.
pub fn ingest_figure_details_from<R: Read>(
    reader: R,
    name: &str,
) -> Result<AuxiliaryContext, ContextError> {
    ingest_context_from(ContextKind::FigureDetails, reader, name)
}

pub fn ingest_figure_details(path: &Path) -> Result<AuxiliaryContext, ContextError> {
    ingest_context(ContextKind::FigureDetails, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;

    #[test]
    fn keyword_parsing_cleans_and_dedupes() {
        let parsed = parse_keywords("1. Graph parsing\n- graph PARSING\n* \"neural nets\", trees\n\n2) Graph parsing");
        assert_eq!(parsed, ["Graph parsing", "neural nets", "trees"]);
        let many: String = (0..20).map(|i| format!("k{i}\n")).collect();
        assert_eq!(parse_keywords(&many).len(), MAX_KEYWORDS);
        assert!(parse_keywords(" \n ,").is_empty());
    }

    #[test]
    fn keywords_fall_back_to_title() {
        let empty = TextCompletionClient::Stub(StubCompletion::new(StubFallback::Text(String::new())));
        assert_eq!(generate_keywords(&empty, "Sparse Graph Parsing", "").unwrap(), ["sparse", "graph", "parsing"]);
        assert_eq!(generate_keywords(&empty, "On the", "").unwrap(), ["On the"]);
        assert!(generate_keywords(&empty, "  ", "x").is_err());
        let echo = TextCompletionClient::Stub(StubCompletion::new(StubFallback::EchoTitleWords));
        assert_eq!(generate_keywords(&echo, "A Study of Graphs", "").unwrap(), ["study", "graphs"]);
    }

    #[test]
    fn line_endings_are_normalized() {
        let ctx = ingest_figure_details_from("a\r\nb\rc\n".as_bytes(), "mem").unwrap();
        assert_eq!(ctx.text, "a\nb\nc\n");
        assert_eq!(ctx.kind, ContextKind::FigureDetails);
        assert_eq!(ctx.provenance, Provenance::Ingested);
        assert!(matches!(
            ingest_figure_details_from(" \r\n".as_bytes(), "mem"),
            Err(ContextError::EmptyContext)
        ));
        assert!(matches!(
            ingest_figure_details_from(&[0xff, 0xfe][..], "mem"),
            Err(ContextError::UnreadableSource { .. })
        ));
        assert!(matches!(
            ingest_figure_details(Path::new("/nonexistent/figure.txt")),
            Err(ContextError::UnreadableSource { .. })
        ));
    }

    #[test]
    fn empty_search_yields_notice_without_summary_call() {
        let clients = NoveltyClients {
            keywords: TextCompletionClient::Stub(StubCompletion::new(StubFallback::EchoTitleWords)),
            search: ScholarlySearchClient::Stub(StubSearch::default()),
            summary: TextCompletionClient::Stub(StubCompletion::new(StubFallback::Fail)),
        };
        let m = Manuscript::new("m", "Obscure Topic", "A", "B", Domain::PhysicalSciences).unwrap();
        let out = assemble_novelty_context(&clients, &NoveltyConfig::default(), None, &m).unwrap();
        assert_eq!(out.context.text, NO_SIMILAR_ARTICLES);
        assert!(out.comparisons.is_empty());
    }
}
