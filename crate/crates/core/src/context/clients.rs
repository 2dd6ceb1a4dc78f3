//! Text-completion and scholarly-search clients.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::ContextError;
use crate::text::{normalize_for_matching, tokenize};
use crate::transport::{RemoteEndpoint, Request};

/// Words skipped when echoing a title as keywords.
const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in", "into", "is", "it",
    "its", "of", "on", "or", "over", "the", "their", "this", "to", "toward", "towards", "using",
    "via", "with", "without",
];

/// Lowercased title tokens minus stopwords, first occurrence only.
pub fn content_words(text: &str) -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    for token in tokenize(text) {
        if !STOPWORDS.contains(&token.as_str()) && !words.contains(&token) {
            words.push(token);
        }
    }
    words
}

/// Body posted to a remote completion endpoint; the reply is
/// [`CompletionResponse`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct RemoteCompletion {
    pub endpoint: RemoteEndpoint,
}

/// What a stub answers when none of its rules match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "text")]
pub enum StubFallback {
    /// Content words of the prompt's `Title:` line, one per line.
    EchoTitleWords,
    /// The prompt itself.
    EchoPrompt,
    /// A fixed reply.
    Text(String),
    /// A client failure.
    Fail,
}

/// One stub rule: the first rule whose `contains` occurs in the prompt wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubRule {
    pub contains: String,
    pub reply: String,
}

/// Deterministic completion client driven by substring rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubCompletion {
    #[serde(default)]
    pub rules: Vec<StubRule>,
    pub fallback: StubFallback,
}

impl StubCompletion {
    pub fn new(fallback: StubFallback) -> Self {
        StubCompletion {
            rules: Vec::new(),
            fallback,
        }
    }

    pub fn with_rule(mut self, contains: impl Into<String>, reply: impl Into<String>) -> Self {
        self.rules.push(StubRule {
            contains: contains.into(),
            reply: reply.into(),
        });
        self
    }

    fn complete(&self, prompt: &str) -> Result<String, ContextError> {
        if let Some(rule) = self.rules.iter().find(|r| prompt.contains(&r.contains)) {
            return Ok(rule.reply.clone());
        }
        match &self.fallback {
            StubFallback::EchoTitleWords => {
                let title = prompt
                    .lines()
                    .find_map(|line| line.strip_prefix("Title:"))
                    .unwrap_or("");
                Ok(content_words(title).join("\n"))
            }
            StubFallback::EchoPrompt => Ok(prompt.to_string()),
            StubFallback::Text(text) => Ok(text.clone()),
            StubFallback::Fail => Err(ContextError::ClientFailure(
                "stub completion configured to fail".into(),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub enum TextCompletionClient {
    Remote(RemoteCompletion),
    Stub(StubCompletion),
}

impl TextCompletionClient {
    pub fn complete(&self, prompt: &str) -> Result<String, ContextError> {
        match self {
            TextCompletionClient::Stub(stub) => stub.complete(prompt),
            TextCompletionClient::Remote(remote) => {
                let value = remote.endpoint.post_json(json!(CompletionRequest {
                    prompt: prompt.to_string()
                }))?;
                let response: CompletionResponse = serde_json::from_value(value)
                    .map_err(|e| ContextError::InvalidResponse(e.to_string()))?;
                Ok(response.text)
            }
        }
    }
}

/// A search hit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

/// Semantic Scholar style `paper/search` endpoint.
///
/// Sends `GET <url>?query=..&limit=..&fields=title,abstract,paperId` and
/// reads `{"data": [{"paperId", "title", "abstract"}, ...]}`. Hits without a
/// title are dropped; a missing abstract becomes empty.
#[derive(Debug, Clone)]
pub struct RemoteSearch {
    pub endpoint: RemoteEndpoint,
    pub per_query_limit: usize,
}

impl RemoteSearch {
    fn search(&self, query: &str) -> Result<Vec<Article>, ContextError> {
        let request = Request::Get(vec![
            ("query".into(), query.to_string()),
            ("limit".into(), self.per_query_limit.to_string()),
            ("fields".into(), "title,abstract,paperId".into()),
        ]);
        let value = self.endpoint.send(&request)?;
        let data = value
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| ContextError::InvalidResponse("missing `data` array".into()))?;
        let mut articles = Vec::new();
        for hit in data {
            let field = |name: &str| hit.get(name).and_then(Value::as_str).map(str::to_string);
            let (Some(id), Some(title)) = (field("paperId"), field("title")) else {
                continue;
            };
            articles.push(Article {
                id,
                title,
                abstract_text: field("abstract").unwrap_or_default(),
            });
        }
        Ok(articles)
    }
}

/// In-memory corpus; a query matches an article whose title or abstract
/// contains the query as a whole-word phrase (case-insensitive).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StubSearch {
    pub articles: Vec<Article>,
}

impl StubSearch {
    fn search(&self, query: &str) -> Vec<Article> {
        let needle = normalize_for_matching(query);
        if needle.trim().is_empty() {
            return Vec::new();
        }
        self.articles
            .iter()
            .filter(|a| {
                normalize_for_matching(&format!("{} {}", a.title, a.abstract_text))
                    .contains(&needle)
            })
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum ScholarlySearchClient {
    Remote(RemoteSearch),
    Stub(StubSearch),
}

impl ScholarlySearchClient {
    pub fn search(&self, query: &str) -> Result<Vec<Article>, ContextError> {
        match self {
            ScholarlySearchClient::Remote(remote) => remote.search(query),
            ScholarlySearchClient::Stub(stub) => Ok(stub.search(query)),
        }
    }
}
