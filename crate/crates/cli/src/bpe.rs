//! Subword tokenizer training, application and vocabulary comparison.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use oralkit::bpe::{self, BpeModel};
use oralkit::metrics::text_table;
use serde_json::json;

use crate::io::{self, pct, Outcome};

#[derive(Args)]
pub struct TrainArgs {
    /// Training corpora (.conllu, .jsonl utterances, .tsv or text).
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Target vocabulary size (default depends on --scale).
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Model file.
    #[arg(long)]
    output: PathBuf,
    /// Also dump the vocabulary, one unit per line.
    #[arg(long)]
    vocab_out: Option<PathBuf>,
}

pub fn train(a: &TrainArgs, default_vocab: usize) -> Result<Outcome> {
    let mut lines = Vec::new();
    for path in &a.input {
        for u in io::read_utterances(path)? {
            let words: Vec<&str> = u
                .tokens
                .iter()
                .filter(|t| !t.synthetic)
                .map(|t| t.surface.as_str())
                .collect();
            lines.push(words.join(" "));
        }
    }
    let target = a.vocab_size.unwrap_or(default_vocab);
    let model = BpeModel::train(&lines, target)?;
    model.save(&a.output)?;
    if let Some(v) = &a.vocab_out {
        model.save_vocab(v)?;
    }
    let table = text_table(
        &["lines", "target", "vocabulary", "merges"],
        &[vec![
            lines.len().to_string(),
            target.to_string(),
            model.vocab().len().to_string(),
            model.merges().len().to_string(),
        ]],
    );
    Ok(Outcome::new(
        table,
        json!({
            "lines": lines.len(),
            "target_vocab": target,
            "vocab_size": model.vocab().len(),
            "merges": model.merges().len(),
        }),
    ))
}

#[derive(Args)]
pub struct ApplyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// One line per utterance, units separated by spaces.
    #[arg(long)]
    output: PathBuf,
}

pub fn apply(a: &ApplyArgs) -> Result<Outcome> {
    let model = BpeModel::load(&a.model)?;
    let utts = io::read_utterances(&a.input)?;
    let (mut words, mut units, mut split) = (0usize, 0usize, 0usize);
    let mut out = String::new();
    for u in &utts {
        let mut line: Vec<String> = Vec::new();
        for t in &u.tokens {
            let enc = model.encode(&t.surface);
            words += 1;
            units += enc.len();
            split += usize::from(enc.len() > 1);
            line.extend(enc);
        }
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    std::fs::write(&a.output, out).with_context(|| format!("writing {}", a.output.display()))?;
    let ratio = if words == 0 {
        0.0
    } else {
        units as f64 / words as f64
    };
    let table = text_table(
        &["words", "units", "units/word", "split words %"],
        &[vec![
            words.to_string(),
            units.to_string(),
            format!("{ratio:.3}"),
            pct(100.0 * split as f64 / words.max(1) as f64),
        ]],
    );
    Ok(Outcome::new(
        table,
        json!({"words": words, "units": units, "split_words": split}),
    ))
}

#[derive(Args)]
pub struct OverlapArgs {
    /// Vocabulary dump (one unit per line), as written by `bpe-train --vocab-out`.
    first: PathBuf,
    second: PathBuf,
}

pub fn overlap(a: &OverlapArgs) -> Result<Outcome> {
    let (va, vb) = (bpe::load_vocab(&a.first)?, bpe::load_vocab(&a.second)?);
    let r = bpe::overlap_report(&va, &vb)?;
    let table = text_table(
        &["|A|", "|B|", "shared", "% of A", "% of B", "% of union"],
        &[vec![
            va.len().to_string(),
            vb.len().to_string(),
            r.shared.to_string(),
            pct(r.over_first),
            pct(r.over_second),
            pct(r.over_union),
        ]],
    );
    Ok(Outcome::new(
        table,
        json!({"first_size": va.len(), "second_size": vb.len(), "overlap": r}),
    ))
}
