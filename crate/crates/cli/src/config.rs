//! Layered configuration: built-in defaults, then a TOML file, then
//! `CTXREWARD_*` environment variables, then command-line flags.
//!
//! Environment variables name a config path with `_` between segments, e.g.
//! `CTXREWARD_REWARD_GROUP_SIZE=4` sets `reward.group_size` and
//! `CTXREWARD_REMOTE_FIGURE_URL=...` sets `remote.figure.url`. Values are read
//! as TOML scalars when they parse as one (numbers, booleans) and as strings
//! otherwise.

use std::path::{Path, PathBuf};

use ctxreward::context::NoveltyConfig;
use ctxreward::quality::MeteorReference;
use ctxreward::reward::RewardConfig;
use ctxreward::transport::EndpointConfig;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

pub const ENV_PREFIX: &str = "CTXREWARD_";
pub const CONFIG_ENV: &str = "CTXREWARD_CONFIG";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    /// Keyword rules shipped with the crate.
    #[default]
    Rule,
    /// Stored labels from `backends.replay_labels`.
    Replay,
    /// HTTP classifier at `remote.figure` / `remote.novelty`.
    Remote,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AspectKind {
    /// Keyword hit rates shipped with the crate.
    #[default]
    Lexicon,
    /// HTTP scorer at `remote.aspects`.
    Remote,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CompletionKind {
    /// HTTP completion endpoint at `remote.completion`.
    #[default]
    Remote,
    /// Offline stub: keywords from the title, the prompt echoed back as the answer.
    Echo,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    /// HTTP search endpoint at `remote.search`.
    #[default]
    Remote,
    /// Offline corpus from `clients.search_corpus`.
    Stub,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendsConfig {
    pub figure: ClassifierKind,
    pub novelty: ClassifierKind,
    pub aspects: AspectKind,
    pub meteor_reference: MeteorReference,
    /// Labeled-pair file used by replay classifiers.
    pub replay_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    pub figure: EndpointConfig,
    pub novelty: EndpointConfig,
    pub aspects: EndpointConfig,
    pub completion: EndpointConfig,
    pub search: EndpointConfig,
    /// `limit` sent with each search query.
    pub search_limit: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            figure: EndpointConfig::default(),
            novelty: EndpointConfig::default(),
            aspects: EndpointConfig::default(),
            completion: EndpointConfig::default(),
            search: EndpointConfig {
                url: "https://api.semanticscholar.org/graph/v1/paper/search".into(),
                ..EndpointConfig::default()
            },
            search_limit: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientsConfig {
    pub completion: CompletionKind,
    pub search: SearchKind,
    /// JSON file `{"articles": [{"id", "title", "abstract"}]}` for the stub search.
    pub search_corpus: Option<PathBuf>,
    /// Maximum concurrent labeling requests.
    pub max_parallel: usize,
}

impl Default for ClientsConfig {
    fn default() -> Self {
        ClientsConfig {
            completion: CompletionKind::default(),
            search: SearchKind::default(),
            search_corpus: None,
            max_parallel: 4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub reward: RewardConfig,
    pub backends: BackendsConfig,
    pub remote: RemoteConfig,
    pub clients: ClientsConfig,
    pub novelty: NoveltyConfig,
}

fn to_table(config: &Config) -> Table {
    match Value::try_from(config) {
        Ok(Value::Table(table)) => table,
        _ => Table::new(),
    }
}

fn merge(base: &mut Table, overlay: Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(existing)), Value::Table(incoming)) => merge(existing, incoming),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

/// Reads an environment value, guided by the type of the default at the
/// same path: string-typed keys always stay strings, float-typed keys accept
/// integers.
fn scalar(reference: Option<&Value>, text: &str) -> Value {
    match reference {
        Some(Value::String(_)) => return Value::String(text.to_string()),
        Some(Value::Float(_)) => {
            if let Ok(v) = text.parse::<f64>() {
                return Value::Float(v);
            }
        }
        _ => {}
    }
    if let Ok(v) = text.parse::<i64>() {
        return Value::Integer(v);
    }
    if let Ok(v) = text.parse::<f64>() {
        return Value::Float(v);
    }
    if let Ok(v) = text.parse::<bool>() {
        return Value::Boolean(v);
    }
    Value::String(text.to_string())
}

/// Resolves an underscore-joined path against the keys present in `table`,
/// preferring the longest key at each level.
fn resolve_path(table: &Table, joined: &str) -> Option<Vec<String>> {
    let mut keys: Vec<&String> = table.keys().collect();
    keys.sort_by_key(|k| std::cmp::Reverse(k.len()));
    for key in keys {
        if joined == key.as_str() {
            return Some(vec![key.clone()]);
        }
        if let Some(rest) = joined.strip_prefix(key.as_str()).and_then(|r| r.strip_prefix('_')) {
            if let Some(Value::Table(inner)) = table.get(key) {
                if let Some(mut tail) = resolve_path(inner, rest) {
                    tail.insert(0, key.clone());
                    return Some(tail);
                }
            }
        }
    }
    None
}

fn set_path(table: &mut Table, path: &[String], value: Value) {
    if let [last] = path {
        table.insert(last.clone(), value);
    } else if let Some(Value::Table(inner)) = table.get_mut(&path[0]) {
        set_path(inner, &path[1..], value);
    }
}

/// Builds the effective configuration from an optional file and the given
/// environment (flags are applied by the caller afterwards).
pub fn load<I>(file: Option<&Path>, env: I) -> Result<Config, CliError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut table = to_table(&Config::default());
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
        let overlay: Table = toml::from_str(&text)
            .map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
        merge(&mut table, overlay);
    }

    let reference = reference_table();
    let mut env: Vec<(String, String)> = env
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX) && k != CONFIG_ENV)
        .collect();
    env.sort();
    for (key, value) in env {
        let joined = key[ENV_PREFIX.len()..].to_ascii_lowercase();
        let path = resolve_path(&reference, &joined)
            .filter(|path| !matches!(lookup(&reference, path), Some(Value::Table(_))))
            .ok_or_else(|| CliError::Input(format!("unknown configuration variable {key}")))?;
        ensure_tables(&mut table, &path);
        set_path(&mut table, &path, scalar(lookup(&reference, &path), &value));
    }

    Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Input(format!("config: {e}")))
}

fn lookup<'a>(table: &'a Table, path: &[String]) -> Option<&'a Value> {
    let value = table.get(&path[0])?;
    match (path.len(), value) {
        (1, v) => Some(v),
        (_, Value::Table(inner)) => lookup(inner, &path[1..]),
        _ => None,
    }
}

/// The default config plus placeholders for optional keys, so every
/// settable path can be resolved.
fn reference_table() -> Table {
    let mut table = to_table(&Config::default());
    if let Some(Value::Table(backends)) = table.get_mut("backends") {
        backends.insert("replay_labels".into(), Value::String(String::new()));
    }
    if let Some(Value::Table(clients)) = table.get_mut("clients") {
        clients.insert("search_corpus".into(), Value::String(String::new()));
    }
    for endpoint in ["figure", "novelty", "aspects", "completion", "search"] {
        if let Some(Value::Table(remote)) = table.get_mut("remote") {
            if let Some(Value::Table(ep)) = remote.get_mut(endpoint) {
                ep.insert("api_key_env".into(), Value::String(String::new()));
            }
        }
    }
    table
}

fn ensure_tables(table: &mut Table, path: &[String]) {
    if path.len() < 2 {
        return;
    }
    let entry = table
        .entry(path[0].clone())
        .or_insert_with(|| Value::Table(Table::new()));
    if let Value::Table(inner) = entry {
        ensure_tables(inner, &path[1..]);
    }
}

/// The config file named by `--config`, else by `CTXREWARD_CONFIG` in `env`.
pub fn config_path(flag: Option<PathBuf>, env: &[(String, String)]) -> Option<PathBuf> {
    flag.or_else(|| {
        env.iter()
            .find(|(k, _)| k == CONFIG_ENV)
            .map(|(_, v)| PathBuf::from(v))
    })
}
