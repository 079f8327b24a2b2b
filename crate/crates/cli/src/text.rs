//! Transcript preparation: normalization, segmentation, pseudonymization,
//! repunctuation, corpus splits and the bundled toy data.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use oralkit::corpus::{self, stratified_split, Part, SplitSpec};
use oralkit::metrics::text_table;
use oralkit::normalize::{self, NameInventory};
use oralkit::toy;
use serde_json::json;

use crate::io::{self, usage, Format, Outcome};

#[derive(Args)]
pub struct NormalizeArgs {
    /// Diarization turns (.jsonl) or raw text, one segment per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

pub fn normalize(a: &NormalizeArgs) -> Result<Outcome> {
    let (lines, empty) = match io::format_of(&a.input) {
        Format::Jsonl => {
            let mut turns = normalize::read_turns(&a.input)?;
            let mut empty = 0;
            for t in &mut turns {
                t.text = normalize::normalize_text(&t.text);
                empty += usize::from(t.text.is_empty());
            }
            std::fs::write(&a.output, io::jsonl_lines(&turns)?)
                .with_context(|| format!("writing {}", a.output.display()))?;
            (turns.len(), empty)
        }
        _ => {
            let text = std::fs::read_to_string(&a.input)
                .with_context(|| format!("reading {}", a.input.display()))?;
            let mut out = String::new();
            let (mut n, mut empty) = (0, 0);
            for line in text.lines() {
                let norm = normalize::normalize_text(line);
                n += 1;
                if norm.is_empty() {
                    empty += 1;
                    continue;
                }
                out.push_str(&norm);
                out.push('\n');
            }
            std::fs::write(&a.output, out)
                .with_context(|| format!("writing {}", a.output.display()))?;
            (n, empty)
        }
    };
    let table = text_table(
        &["segments", "empty after normalization"],
        &[vec![lines.to_string(), empty.to_string()]],
    );
    Ok(Outcome::new(
        table,
        json!({"segments": lines, "empty": empty}),
    ))
}

#[derive(Args)]
pub struct SegmentArgs {
    /// Diarization turns as JSON lines.
    #[arg(long)]
    input: PathBuf,
    /// Utterances (.jsonl or text).
    #[arg(long)]
    output: PathBuf,
    /// Append a synthetic final punctuation token to every utterance.
    #[arg(long)]
    repunc: bool,
}

pub fn segment(a: &SegmentArgs) -> Result<Outcome> {
    let turns = normalize::read_turns(&a.input)?;
    let (mut utts, stats) = normalize::segment_turns(&turns);
    if a.repunc {
        if io::format_of(&a.output) != Format::Jsonl {
            return usage("--repunc output must be .jsonl to keep synthetic-token marks");
        }
        utts = normalize::repunctuate(&utts);
    }
    io::write_utterances(&utts, &a.output)?;
    let table = text_table(
        &["turns", "empty", "duplicates", "utterances"],
        &[vec![
            stats.turns.to_string(),
            stats.empty.to_string(),
            stats.duplicates.to_string(),
            stats.utterances.to_string(),
        ]],
    );
    Ok(Outcome::new(table, json!({ "stats": stats })))
}

#[derive(Args)]
pub struct DeanonymizeArgs {
    /// Utterances (.jsonl, text) or a .conllu treebank.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// One replacement name per line.
    #[arg(long)]
    names_file: PathBuf,
    #[arg(long, default_value = normalize::DEFAULT_PLACEHOLDER)]
    placeholder: String,
}

pub fn deanonymize(a: &DeanonymizeArgs, seed: u64) -> Result<Outcome> {
    let names = NameInventory::load(&a.names_file)?;
    let count = |utts: &[corpus::Utterance]| {
        utts.iter()
            .flat_map(|u| &u.tokens)
            .filter(|t| t.surface == a.placeholder)
            .count()
    };
    let replaced;
    if io::format_of(&a.input) == Format::Conllu {
        if io::format_of(&a.output) != Format::Conllu {
            return usage("a treebank input needs a .conllu output");
        }
        let mut trees = corpus::read_conllu(&a.input)?;
        let utts: Vec<_> = trees.iter().map(|t| t.utterance.clone()).collect();
        replaced = count(&utts);
        let out = normalize::deanonymize(&utts, &a.placeholder, &names, seed)?;
        for (t, u) in trees.iter_mut().zip(out) {
            t.utterance = u;
        }
        corpus::write_conllu(&trees, &a.output)?;
    } else {
        let utts = io::read_utterances(&a.input)?;
        replaced = count(&utts);
        let out = normalize::deanonymize(&utts, &a.placeholder, &names, seed)?;
        io::write_utterances(&out, &a.output)?;
    }
    let table = text_table(
        &["placeholder", "replaced", "names"],
        &[vec![
            a.placeholder.clone(),
            replaced.to_string(),
            names.names().len().to_string(),
        ]],
    );
    Ok(Outcome::new(
        table,
        json!({"placeholder": a.placeholder, "replaced": replaced}),
    ))
}

#[derive(Args)]
pub struct RepuncArgs {
    /// Utterances (.jsonl, text or .conllu).
    #[arg(long)]
    input: PathBuf,
    /// Utterances as .jsonl (synthetic tokens are marked there).
    #[arg(long)]
    output: PathBuf,
    /// Remove synthetic tokens instead of adding them.
    #[arg(long)]
    strip: bool,
}

pub fn repunc(a: &RepuncArgs) -> Result<Outcome> {
    let utts = io::read_utterances(&a.input)?;
    let out = if a.strip {
        normalize::strip_synthetic(&utts)
    } else {
        if io::format_of(&a.output) != Format::Jsonl {
            return usage("repunctuated output must be .jsonl to keep synthetic-token marks");
        }
        normalize::repunctuate(&utts)
    };
    io::write_utterances(&out, &a.output)?;
    let synthetic = |u: &[corpus::Utterance]| {
        u.iter()
            .flat_map(|u| &u.tokens)
            .filter(|t| t.synthetic)
            .count()
    };
    let (before, after) = (synthetic(&utts), synthetic(&out));
    let table = text_table(
        &["utterances", "synthetic before", "synthetic after"],
        &[vec![
            utts.len().to_string(),
            before.to_string(),
            after.to_string(),
        ]],
    );
    Ok(Outcome::new(
        table,
        json!({"utterances": utts.len(), "synthetic_before": before, "synthetic_after": after}),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Stratum {
    None,
    Recording,
    Category,
}

#[derive(Args)]
pub struct SplitArgs {
    /// Treebank (.conllu), SLU samples (.tsv), documents or utterances (.jsonl).
    #[arg(long)]
    input: PathBuf,
    /// Split specification (JSON, item id -> part).
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    ratios: String,
    #[arg(long, value_enum, default_value = "none")]
    stratify_by: Stratum,
    /// Treat a .jsonl input as labeled documents rather than utterances.
    #[arg(long)]
    documents: bool,
    /// Also write train/dev/test files in the input format to this directory.
    #[arg(long)]
    write_parts: Option<PathBuf>,
}

fn item_id(k: usize) -> String {
    format!("{:06}", k + 1)
}

pub fn split(a: &SplitArgs, seed: u64) -> Result<Outcome> {
    let r: Vec<f64> = io::parse_list(&a.ratios, "ratio")?;
    if r.len() != 3 {
        return usage("--ratios takes three comma-separated values");
    }
    let fmt = io::format_of(&a.input);
    // (stratum, word count) per item, in input order
    let meta: Vec<(String, Option<String>, usize)> = match fmt {
        Format::Jsonl if a.documents => corpus::read_documents(&a.input)?
            .into_iter()
            .map(|d| {
                (
                    String::new(),
                    Some(d.category),
                    d.text.split_whitespace().count(),
                )
            })
            .collect(),
        _ => io::read_utterances(&a.input)?
            .into_iter()
            .map(|u| (u.recording_id.clone(), None, u.len()))
            .collect(),
    };
    let items: Vec<(String, String)> = meta
        .iter()
        .enumerate()
        .map(|(k, (rec, cat, _))| {
            let stratum = match a.stratify_by {
                Stratum::None => Ok(String::new()),
                Stratum::Recording => Ok(rec.clone()),
                Stratum::Category => cat
                    .clone()
                    .ok_or_else(|| io::Usage("--stratify-by category needs --documents".into())),
            }?;
            Ok((item_id(k), stratum))
        })
        .collect::<Result<_>>()?;
    let spec = stratified_split(&items, (r[0], r[1], r[2]), seed)?;
    spec.save(&a.output)?;
    let words: Vec<(String, usize)> = meta
        .iter()
        .enumerate()
        .map(|(k, m)| (item_id(k), m.2))
        .collect();
    let word_counts = corpus::split_word_counts(&spec, &words);
    if let Some(dir) = &a.write_parts {
        write_parts(a, &spec, dir)?;
    }
    let sizes = spec.sizes();
    let rows: Vec<Vec<String>> = Part::ALL
        .iter()
        .enumerate()
        .map(|(i, p)| {
            vec![
                format!("{p:?}").to_lowercase(),
                sizes[i].to_string(),
                word_counts[i].to_string(),
            ]
        })
        .collect();
    Ok(Outcome::new(
        text_table(&["part", "items", "words"], &rows),
        json!({"sizes": sizes, "words": word_counts}),
    ))
}

fn part_path(dir: &Path, input: &Path, part: Part) -> PathBuf {
    let ext = input
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    dir.join(format!("{}{ext}", format!("{part:?}").to_lowercase()))
}

fn select<T: Clone>(items: &[T], spec: &SplitSpec, part: Part) -> Vec<T> {
    items
        .iter()
        .enumerate()
        .filter(|(k, _)| spec.parts.get(&item_id(*k)) == Some(&part))
        .map(|(_, x)| x.clone())
        .collect()
}

fn write_parts(a: &SplitArgs, spec: &SplitSpec, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for part in Part::ALL {
        let path = part_path(dir, &a.input, part);
        match io::format_of(&a.input) {
            Format::Conllu => {
                let trees = corpus::read_conllu(&a.input)?;
                corpus::write_conllu(&select(&trees, spec, part), &path)?;
            }
            Format::Tsv => {
                let samples = corpus::read_slu_tsv(&a.input)?;
                corpus::write_slu_tsv(&select(&samples, spec, part), &path)?;
            }
            Format::Jsonl if a.documents => {
                let docs = corpus::read_documents(&a.input)?;
                corpus::write_documents(&select(&docs, spec, part), &path)?;
            }
            _ => {
                let utts = io::read_utterances(&a.input)?;
                io::write_utterances(&select(&utts, spec, part), &path)?;
            }
        }
    }
    Ok(())
}

#[derive(Args)]
pub struct ToyDataArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    sentences: usize,
    #[arg(long, default_value_t = 500)]
    slu_samples: usize,
    #[arg(long, default_value_t = 600)]
    documents: usize,
}

/// Writes the synthetic corpora used by the smoke pipeline and examples.
pub fn toy_data(a: &ToyDataArgs, seed: u64) -> Result<Outcome> {
    let dir = &a.out;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let trees = toy::parser_corpus(a.sentences, seed)?;
    let ids: Vec<(String, String)> = (0..trees.len())
        .map(|k| (item_id(k), String::new()))
        .collect();
    let spec = stratified_split(&ids, (0.8, 0.1, 0.1), seed)?;
    for part in Part::ALL {
        let name = format!("{}.conllu", format!("{part:?}").to_lowercase());
        corpus::write_conllu(&select(&trees, &spec, part), &dir.join(name))?;
    }
    let text: String = select(&trees, &spec, Part::Train)
        .iter()
        .map(|t| format!("{}\n", t.utterance.text()))
        .collect();
    std::fs::write(dir.join("train.txt"), text)?;

    let slu = toy::slu_corpus(a.slu_samples, seed)?;
    let ids: Vec<(String, String)> = (0..slu.len())
        .map(|k| (item_id(k), String::new()))
        .collect();
    let spec = stratified_split(&ids, (0.8, 0.1, 0.1), seed)?;
    for part in Part::ALL {
        let name = format!("slu_{}.tsv", format!("{part:?}").to_lowercase());
        corpus::write_slu_tsv(&select(&slu, &spec, part), &dir.join(name))?;
    }
    std::fs::write(
        dir.join("slu_concepts.txt"),
        toy::TOY_CONCEPTS.join("\n") + "\n",
    )?;
    std::fs::write(dir.join("slu_rules.json"), toy::TOY_RULES)?;

    corpus::write_documents(
        &toy::classif_corpus(a.documents, seed),
        &dir.join("docs.jsonl"),
    )?;
    std::fs::write(
        dir.join("turns.jsonl"),
        io::jsonl_lines(&toy::diarization_turns(4, seed))?,
    )?;
    std::fs::write(dir.join("names.txt"), toy::TOY_NAMES.join("\n") + "\n")?;
    Ok(Outcome::new(
        format!("toy data written to {}\n", dir.display()),
        json!({"sentences": a.sentences, "slu_samples": a.slu_samples, "documents": a.documents}),
    ))
}
