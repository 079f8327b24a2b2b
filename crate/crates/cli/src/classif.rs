//! Repeated random-split document classification.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use oralkit::classif::{
    run_splits, Kernel, MlpClassifier, MlpClassifierConfig, SvmClassifier, SvmConfig,
    TextClassifier,
};
use oralkit::corpus::{self, Utterance};
use oralkit::metrics::text_table;
use serde_json::json;

use crate::io::{self, usage, Outcome, ProviderArg};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Svm,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Triangular,
    Linear,
}

#[derive(Args)]
pub struct RunArgs {
    /// Labeled documents (.jsonl).
    #[arg(long)]
    input: PathBuf,
    /// Declared categories, one per line.
    #[arg(long)]
    categories: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "svm")]
    model: Model,
    /// TF-IDF vocabulary size (default depends on --scale).
    #[arg(long)]
    vocab: Option<usize>,
    #[arg(long, value_enum, default_value = "triangular")]
    kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 10)]
    splits: usize,
    #[arg(long)]
    train_size: usize,
    #[arg(long)]
    test_size: usize,
    /// Word vectors for the MLP model: lookup or char-ngram.
    #[arg(long, default_value = "char-ngram")]
    provider: ProviderArg,
    #[arg(long, default_value_t = oralkit::embed::DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
}

pub fn run(a: &RunArgs, seed: u64, default_vocab: usize) -> Result<Outcome> {
    let docs = corpus::read_documents(&a.input)?;
    if let Some(p) = &a.categories {
        corpus::check_categories(&docs, &io::read_lines(p)?)?;
    }
    if a.splits == 0 || !(a.c > 0.0) {
        return usage("--splits and --c must be positive");
    }
    let vocab = a.vocab.unwrap_or(default_vocab);
    let svm = SvmConfig {
        kernel: match a.kernel {
            KernelArg::Triangular => Kernel::Triangular,
            KernelArg::Linear => Kernel::Linear,
        },
        c: a.c,
        ..SvmConfig::default()
    };
    let report = match a.model {
        Model::Svm => run_splits(&docs, a.splits, a.train_size, a.test_size, seed, &|| {
            Box::new(SvmClassifier::new(vocab, svm)) as Box<dyn TextClassifier>
        })?,
        Model::Mlp => {
            if matches!(a.provider, ProviderArg::External(_)) {
                return usage("document classification needs a lookup or char-ngram provider");
            }
            let utts = docs
                .iter()
                .filter(|d| !d.text.trim().is_empty())
                .map(|d| {
                    let words: Vec<&str> = d.text.split_whitespace().collect();
                    Utterance::from_words(d.id.clone(), &words)
                })
                .collect::<oralkit::Result<Vec<_>>>()?;
            let (provider, _) = io::build_providers(&a.provider, &utts, a.dim, None, seed)?;
            let config = MlpClassifierConfig {
                epochs: a.epochs,
                seed,
                ..MlpClassifierConfig::default()
            };
            run_splits(&docs, a.splits, a.train_size, a.test_size, seed, &|| {
                Box::new(MlpClassifier::new(provider.clone(), config.clone()))
                    as Box<dyn TextClassifier>
            })?
        }
    };
    let mut rows: Vec<Vec<String>> = report
        .splits
        .iter()
        .map(|s| {
            vec![
                s.split.to_string(),
                s.train_size.to_string(),
                s.test_size.to_string(),
                format!("{:.4}", s.weighted_f1),
            ]
        })
        .collect();
    let summary = match &report.ci95 {
        Some(ci) => format!("{:.4} ± {:.4}", report.mean, ci.half_width),
        None => format!("{:.4}", report.mean),
    };
    rows.push(vec!["mean".into(), String::new(), String::new(), summary]);
    let model_name = match a.model {
        Model::Svm => format!("svm-{vocab} ({})", svm.kernel.name()),
        Model::Mlp => "mlp (mean-pooled word vectors)".to_string(),
    };
    let table = format!(
        "model: {model_name}\n{}",
        text_table(&["split", "train", "test", "weighted F1"], &rows)
    );
    Ok(Outcome::new(
        table,
        json!({"model": model_name, "vocab": vocab, "report": report}),
    ))
}
