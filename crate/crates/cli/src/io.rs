//! File formats, reports and shared argument helpers.

use std::fmt;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use oralkit::corpus::{self, DepTree, Utterance};
use oralkit::embed::{CharNgram, EmbeddingProvider, ExternalVectors, LookupTable, NgramConfig};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// A command-line misuse detected after argument parsing (exit code 2).
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

/// What a subcommand produced: a table for stdout and a JSON payload.
pub struct Outcome {
    pub table: String,
    pub report: Value,
}

impl Outcome {
    pub fn new(table: String, report: Value) -> Self {
        Outcome { table, report }
    }
}

pub fn write_report(path: &Path, command: &str, seed: u64, payload: Value) -> Result<()> {
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
    });
    if let (Value::Object(dst), Value::Object(src)) = (&mut report, payload) {
        dst.extend(src);
    }
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing report {}", path.display()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Conllu,
    Jsonl,
    Text,
    Tsv,
}

pub fn format_of(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("conllu") | Some("conll") => Format::Conllu,
        Some("jsonl") | Some("json") => Format::Jsonl,
        Some("tsv") => Format::Tsv,
        _ => Format::Text,
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

/// Utterances from CoNLL-U, JSON lines, SLU TSV or whitespace-tokenized text.
pub fn read_utterances(path: &Path) -> Result<Vec<Utterance>> {
    let utts = match format_of(path) {
        Format::Conllu => corpus::read_conllu(path)?
            .into_iter()
            .map(|t| t.utterance)
            .collect(),
        Format::Jsonl => corpus::read_utterances(path)?,
        Format::Tsv => corpus::read_slu_tsv(path)?
            .into_iter()
            .map(|s| s.utterance)
            .collect(),
        Format::Text => {
            let file =
                std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            corpus::parse_plain_text(BufReader::new(file), &stem(path))?
        }
    };
    Ok(utts)
}

/// Writes utterances as JSON lines or as one space-joined line each.
pub fn write_utterances(utts: &[Utterance], path: &Path) -> Result<()> {
    match format_of(path) {
        Format::Jsonl => corpus::write_utterances(utts, path)?,
        Format::Text => {
            let mut text = String::new();
            for u in utts {
                text.push_str(&u.text());
                text.push('\n');
            }
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Format::Conllu | Format::Tsv => {
            return usage(format!(
                "{}: utterances can only be written as .jsonl or plain text",
                path.display()
            ))
        }
    }
    Ok(())
}

pub fn read_trees(path: &Path) -> Result<Vec<DepTree>> {
    if format_of(path) != Format::Conllu {
        return usage(format!("{}: expected a .conllu treebank", path.display()));
    }
    Ok(corpus::read_conllu(path)?)
}

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Usage(format!("invalid {what} list {s:?}")).into())
        })
        .collect()
}

/// `lookup`, `char-ngram` or `external:FILE`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProviderArg {
    Lookup,
    CharNgram,
    External(PathBuf),
}

impl std::str::FromStr for ProviderArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lookup" => Ok(ProviderArg::Lookup),
            "char-ngram" => Ok(ProviderArg::CharNgram),
            _ => match s.strip_prefix("external:") {
                Some(p) if !p.is_empty() => Ok(ProviderArg::External(p.into())),
                _ => Err(format!(
                    "unknown provider {s:?} (expected lookup, char-ngram or external:FILE)"
                )),
            },
        }
    }
}

/// Builds the training provider and, for external vectors, the separate
/// development provider.
pub fn build_providers(
    arg: &ProviderArg,
    train: &[Utterance],
    dim: usize,
    dev_vectors: Option<&Path>,
    seed: u64,
) -> Result<(EmbeddingProvider, Option<EmbeddingProvider>)> {
    match arg {
        ProviderArg::Lookup => Ok((
            EmbeddingProvider::Lookup(LookupTable::from_corpus(train, dim, seed)),
            None,
        )),
        ProviderArg::CharNgram => Ok((
            EmbeddingProvider::CharNgram(CharNgram {
                dim,
                config: NgramConfig {
                    seed,
                    ..NgramConfig::default()
                },
                known: None,
            }),
            None,
        )),
        ProviderArg::External(path) => {
            let Some(dev) = dev_vectors else {
                return usage("an external provider needs --dev-vectors");
            };
            Ok((
                EmbeddingProvider::External(ExternalVectors::load(path)?),
                Some(EmbeddingProvider::External(ExternalVectors::load(dev)?)),
            ))
        }
    }
}

pub fn load_vectors(path: Option<&Path>) -> Result<Option<ExternalVectors>> {
    Ok(path.map(ExternalVectors::load).transpose()?)
}

pub fn pct(x: f64) -> String {
    format!("{x:.2}")
}

pub fn jsonl_lines<T: serde::Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it)?);
        out.push('\n');
    }
    Ok(out)
}
