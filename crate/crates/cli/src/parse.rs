//! Dependency parser training, decoding, scoring and oracle verification.

use std::collections::HashSet;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use oralkit::corpus::{self, TagSet};
use oralkit::embed::Providers;
use oralkit::metrics::{attachment_scores, mark_oov, text_table, Scores};
use oralkit::parser::{train_parser, FeatureSpec, ParserModel, TrainRegime};
use oralkit::transition::Inventory;
use oralkit::verify::{check_length, cross_check_min_loss, Coverage};
use serde_json::json;

use crate::io::{self, pct, usage, Outcome, ProviderArg};

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    /// lookup, char-ngram or external:FILE (vectors of the training corpus).
    #[arg(long, default_value = "lookup")]
    provider: ProviderArg,
    /// Vectors of the development corpus, for an external provider.
    #[arg(long)]
    dev_vectors: Option<PathBuf>,
    /// Word vector size for built-in providers.
    #[arg(long, default_value_t = oralkit::embed::DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    /// Hidden layer sizes, e.g. 320,160 (default depends on --scale).
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    /// First epoch that follows the model's own predictions.
    #[arg(long, default_value_t = 2)]
    explore_start: usize,
    #[arg(long, default_value_t = 0.9)]
    explore_prob: f64,
    /// Closed POS/label inventory (JSON with "pos" and "labels").
    #[arg(long)]
    tagset: Option<PathBuf>,
    /// Checkpoint of the best dev epoch.
    #[arg(long)]
    model: PathBuf,
    /// Per-epoch JSON-lines log.
    #[arg(long)]
    log: Option<PathBuf>,
}

fn scores_row(label: String, s: &Scores) -> Vec<String> {
    vec![
        label,
        pct(s.las),
        pct(s.uas),
        pct(s.upos),
        s.tokens.to_string(),
    ]
}

pub fn train(a: &TrainArgs, seed: u64, default_hidden: &[usize]) -> Result<Outcome> {
    let train = io::read_trees(&a.train)?;
    let dev = io::read_trees(&a.dev)?;
    let inv = match &a.tagset {
        Some(p) => {
            let set = TagSet::load(p)?;
            for t in train.iter().chain(&dev) {
                set.check(t)?;
            }
            Inventory::new(set.pos, set.labels)?
        }
        None => Inventory::from_trees(&[train.as_slice(), dev.as_slice()].concat())?,
    };
    let train_utts: Vec<_> = train.iter().map(|t| t.utterance.clone()).collect();
    let (provider, dev_provider) = io::build_providers(
        &a.provider,
        &train_utts,
        a.dim,
        a.dev_vectors.as_deref(),
        seed,
    )?;
    let providers = Providers {
        train: &provider,
        dev: dev_provider.as_ref().unwrap_or(&provider),
    };
    let hidden = match &a.hidden {
        Some(h) => io::parse_list(h, "hidden size")?,
        None => default_hidden.to_vec(),
    };
    let regime = TrainRegime {
        epochs: a.epochs,
        explore_start_epoch: a.explore_start,
        explore_prob: a.explore_prob,
        batch: a.batch,
        lr: a.lr,
        hidden,
        seed,
        ..TrainRegime::default()
    };
    if regime.validate().is_err() {
        return usage(format!("invalid training options: {regime:?}"));
    }
    let spec = FeatureSpec::new(provider.dim());
    let (model, log) = train_parser(&train, &dev, &inv, providers, &regime, &spec, |e| {
        eprintln!(
            "epoch {:>3}  loss {:.4}  dev LAS {:.2} UAS {:.2} UPOS {:.2}",
            e.epoch, e.train_loss, e.dev.las, e.dev.uas, e.dev.upos
        )
    })?;
    model.save(&a.model)?;
    if let Some(p) = &a.log {
        std::fs::write(p, io::jsonl_lines(&log)?)?;
    }
    let rows: Vec<Vec<String>> = log
        .iter()
        .map(|e| {
            let mark = if e.epoch == model.best_epoch { "*" } else { "" };
            let mut r = scores_row(format!("{}{mark}", e.epoch), &e.dev);
            r.insert(1, format!("{:.4}", e.train_loss));
            r
        })
        .collect();
    let table = text_table(&["epoch", "loss", "LAS", "UAS", "UPOS", "tokens"], &rows);
    Ok(Outcome::new(
        table,
        json!({
            "provider": provider.kind(),
            "regime": regime,
            "features": spec,
            "inventory": inv,
            "best_epoch": model.best_epoch,
            "epochs": log,
        }),
    ))
}

#[derive(Args)]
pub struct DecodeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Utterances: .conllu (forms only), .jsonl or text.
    #[arg(long)]
    input: PathBuf,
    /// Parsed treebank (.conllu).
    #[arg(long)]
    output: PathBuf,
    /// External vectors of the input corpus, for models trained on them.
    #[arg(long)]
    vectors: Option<PathBuf>,
}

pub fn decode(a: &DecodeArgs) -> Result<Outcome> {
    let model = ParserModel::load(&a.model)?;
    let utts = io::read_utterances(&a.input)?;
    let trees = model.decode(&utts, io::load_vectors(a.vectors.as_deref())?)?;
    corpus::write_conllu(&trees, &a.output)?;
    let tokens: usize = trees.iter().map(|t| t.len()).sum();
    let table = text_table(
        &["sentences", "tokens", "best epoch"],
        &[vec![
            trees.len().to_string(),
            tokens.to_string(),
            model.best_epoch.to_string(),
        ]],
    );
    Ok(Outcome::new(
        table,
        json!({"sentences": trees.len(), "tokens": tokens}),
    ))
}

#[derive(Args)]
pub struct ScoreArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Recognizer lexicon (one word per line); adds an OOV-restricted report.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

pub fn score(a: &ScoreArgs) -> Result<Outcome> {
    let mut gold = io::read_trees(&a.gold)?;
    let pred = io::read_trees(&a.pred)?;
    let report = match &a.lexicon {
        Some(p) => {
            let lexicon: HashSet<String> = io::read_lines(p)?.into_iter().collect();
            for t in &mut gold {
                mark_oov(&mut t.utterance.tokens, &lexicon)?;
            }
            attachment_scores(&gold, &pred, Some(&|t: &corpus::Token| t.oov == Some(true)))?
        }
        None => attachment_scores(&gold, &pred, None)?,
    };
    let mut rows = vec![scores_row("all".into(), &report.all)];
    if let (Some(s), Some(d)) = (&report.subset, &report.delta) {
        rows.push(scores_row("oov".into(), s));
        rows.push(scores_row("delta".into(), d));
    }
    let table = text_table(&["tokens", "LAS", "UAS", "UPOS", "count"], &rows);
    Ok(Outcome::new(table, json!({ "scores": report })))
}

#[derive(Args)]
pub struct OracleArgs {
    /// Longest sentence length to verify exhaustively.
    #[arg(long, default_value_t = 5)]
    max_len: usize,
    /// Every label/tag assignment at every length (very slow beyond 4).
    #[arg(long)]
    full: bool,
}

pub fn oracle_check(a: &OracleArgs) -> Result<Outcome> {
    if a.max_len == 0 || a.max_len > 6 {
        return usage("--max-len must be between 1 and 6");
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut ok = true;
    for n in 1..=a.max_len {
        let coverage = if a.full || n <= 4 {
            Coverage::Full
        } else {
            Coverage::Patterns
        };
        let r = check_length(n, coverage)?;
        ok &= r.passed();
        rows.push(vec![
            n.to_string(),
            format!("{coverage:?}").to_lowercase(),
            r.shapes.to_string(),
            r.golds.to_string(),
            r.configs.to_string(),
            r.checked.to_string(),
            r.mismatches.to_string(),
            r.stuck.to_string(),
            r.bad_paths.to_string(),
            r.static_failures.to_string(),
        ]);
        reports.push(r);
    }
    let cross = cross_check_min_loss(a.max_len.min(3))?;
    ok &= cross.1 == 0;
    let mut table = text_table(
        &[
            "n",
            "coverage",
            "trees",
            "golds",
            "configs",
            "checked",
            "mismatch",
            "stuck",
            "bad paths",
            "static",
        ],
        &rows,
    );
    table.push_str(&format!(
        "min-loss graph vs search: {} configurations, {} disagreements\n{}\n",
        cross.0,
        cross.1,
        if ok { "all checks passed" } else { "FAILED" }
    ));
    let out = Outcome::new(
        table,
        json!({"passed": ok, "lengths": reports, "search_cross_check": {"checked": cross.0, "mismatches": cross.1}}),
    );
    if ok {
        Ok(out)
    } else {
        Err(crate::Failed(out).into())
    }
}
