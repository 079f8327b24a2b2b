//! Concept tagging: training, decoding and CER/CVER scoring.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use oralkit::corpus::{self, SluSample};
use oralkit::embed::Providers;
use oralkit::metrics::text_table;
use oralkit::slu::{
    extract_values, rate_interval, sample_spans, score_corpus, CiUnit, ScoreMode, SluTagger,
    TaggerConfig, ValueRules,
};
use serde_json::json;

use crate::io::{self, pct, usage, Format, Outcome, ProviderArg};

fn read_samples(path: &std::path::Path) -> Result<Vec<SluSample>> {
    if io::format_of(path) != Format::Tsv {
        return usage(format!("{}: expected SLU samples as .tsv", path.display()));
    }
    Ok(corpus::read_slu_tsv(path)?)
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    /// Declared concept inventory, one concept per line.
    #[arg(long)]
    concepts: Option<PathBuf>,
    #[arg(long, default_value = "lookup")]
    provider: ProviderArg,
    #[arg(long)]
    dev_vectors: Option<PathBuf>,
    #[arg(long, default_value_t = oralkit::embed::DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value = "128")]
    hidden: String,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    log: Option<PathBuf>,
}

pub fn train(a: &TrainArgs, seed: u64) -> Result<Outcome> {
    let train = read_samples(&a.train)?;
    let dev = read_samples(&a.dev)?;
    let concepts = a.concepts.as_deref().map(io::read_lines).transpose()?;
    let utts: Vec<_> = train.iter().map(|s| s.utterance.clone()).collect();
    let (provider, dev_provider) =
        io::build_providers(&a.provider, &utts, a.dim, a.dev_vectors.as_deref(), seed)?;
    let config = TaggerConfig {
        epochs: a.epochs,
        hidden: io::parse_list(&a.hidden, "hidden size")?,
        lr: a.lr,
        seed,
        ..TaggerConfig::default()
    };
    if config.epochs == 0 {
        return usage("--epochs must be positive");
    }
    let providers = Providers {
        train: &provider,
        dev: dev_provider.as_ref().unwrap_or(&provider),
    };
    let (tagger, log) = SluTagger::train(&train, &dev, providers, concepts.as_deref(), &config)?;
    tagger.save(&a.model)?;
    if let Some(p) = &a.log {
        std::fs::write(p, io::jsonl_lines(&log)?)?;
    }
    let best = log
        .iter()
        .min_by(|x, y| x.dev_cer.total_cmp(&y.dev_cer))
        .map(|e| e.epoch);
    let rows: Vec<Vec<String>> = log
        .iter()
        .map(|e| {
            let mark = if Some(e.epoch) == best { "*" } else { "" };
            vec![
                format!("{}{mark}", e.epoch),
                format!("{:.4}", e.train_loss),
                pct(e.dev_cer),
            ]
        })
        .collect();
    Ok(Outcome::new(
        text_table(&["epoch", "loss", "dev CER"], &rows),
        json!({
            "provider": provider.kind(),
            "config": config,
            "tags": tagger.tags,
            "best_epoch": best,
            "epochs": log,
        }),
    ))
}

#[derive(Args)]
pub struct DecodeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Utterances (.tsv, .jsonl or text).
    #[arg(long)]
    input: PathBuf,
    /// Tagged samples (.tsv).
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    vectors: Option<PathBuf>,
}

pub fn decode(a: &DecodeArgs) -> Result<Outcome> {
    let tagger = SluTagger::load(&a.model)?;
    let utts = io::read_utterances(&a.input)?;
    let tags = tagger.tag(&utts, io::load_vectors(a.vectors.as_deref())?)?;
    let samples: Vec<SluSample> = utts
        .into_iter()
        .zip(tags)
        .map(|(utterance, bio_tags)| SluSample {
            utterance,
            bio_tags,
        })
        .collect();
    corpus::write_slu_tsv(&samples, &a.output)?;
    let spans: usize = samples
        .iter()
        .map(|s| sample_spans(s).map(|v| v.len()))
        .sum::<oralkit::Result<usize>>()?;
    Ok(Outcome::new(
        text_table(
            &["utterances", "concepts"],
            &[vec![samples.len().to_string(), spans.to_string()]],
        ),
        json!({"utterances": samples.len(), "concepts": spans}),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Cer,
    Cver,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ci {
    Utterance,
    Split,
}

#[derive(Args)]
pub struct ScoreArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value = "cer")]
    mode: Mode,
    /// Value normalization rules (JSON), used in cver mode.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Unit of the confidence interval.
    #[arg(long, value_enum, default_value = "utterance")]
    ci: Ci,
    /// Number of contiguous folds for --ci split.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

pub fn score(a: &ScoreArgs) -> Result<Outcome> {
    if !(a.level > 0.0 && a.level < 1.0) {
        return usage("--level must lie in (0, 1)");
    }
    let gold = read_samples(&a.gold)?;
    let pred = read_samples(&a.pred)?;
    if gold.len() != pred.len() {
        return Err(oralkit::Error::InvalidData(format!(
            "{} gold and {} predicted utterances",
            gold.len(),
            pred.len()
        ))
        .into());
    }
    let rules = match &a.rules {
        Some(p) => ValueRules::load(p)?,
        None => ValueRules::default(),
    };
    let spans = |s: &[SluSample]| -> Result<Vec<_>> {
        s.iter()
            .map(|x| Ok(extract_values(&sample_spans(x)?, &rules)))
            .collect()
    };
    let (g, p) = (spans(&gold)?, spans(&pred)?);
    let mode = match a.mode {
        Mode::Cer => ScoreMode::Cer,
        Mode::Cver => ScoreMode::Cver,
    };
    let score = score_corpus(&g, &p, mode)?;
    let unit = match a.ci {
        Ci::Utterance => CiUnit::Utterance,
        Ci::Split => CiUnit::Split(a.folds),
    };
    let ci = rate_interval(&score.per_utterance, unit, a.level)?;
    let name = format!("{:?}", a.mode).to_uppercase();
    let c = score.counts;
    let table = text_table(
        &["metric", "ref", "sub", "del", "ins", "rate", "±", "ci unit"],
        &[vec![
            name,
            c.reference_len.to_string(),
            c.substitutions.to_string(),
            c.deletions.to_string(),
            c.insertions.to_string(),
            pct(score.rate),
            pct(ci.half_width),
            match unit {
                CiUnit::Utterance => "utterance".to_string(),
                CiUnit::Split(k) => format!("split/{k}"),
            },
        ]],
    );
    Ok(Outcome::new(
        table,
        json!({"score": score, "ci": ci, "ci_unit": unit}),
    ))
}
