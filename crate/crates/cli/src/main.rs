//! `oralkit`: command-line front end for the spoken-language toolkit.

mod bpe;
mod classif;
mod io;
mod parse;
mod slu;
mod text;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use io::Outcome;

#[derive(Parser)]
#[command(name = "oralkit", version, about = "Spoken-language NLP toolkit")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "ORALKIT_SEED", default_value_t = 1)]
    seed: u64,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write a JSON report here.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Default model and vocabulary sizes.
    #[arg(long, global = true, value_enum, default_value = "desk")]
    scale: Scale,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scale {
    Desk,
    Full,
}

impl Scale {
    fn hidden(self) -> &'static [usize] {
        match self {
            Scale::Desk => &oralkit::neural::DESK_HIDDEN,
            Scale::Full => &oralkit::neural::FULL_HIDDEN,
        }
    }

    fn bpe_vocab(self) -> usize {
        match self {
            Scale::Desk => oralkit::bpe::DESK_VOCAB,
            Scale::Full => oralkit::bpe::FULL_VOCAB,
        }
    }

    fn tfidf_vocab(self) -> usize {
        match self {
            Scale::Desk => 5_000,
            Scale::Full => 20_000,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Lowercase and strip punctuation from turns or text lines.
    Normalize(text::NormalizeArgs),
    /// Turn diarization output into deduplicated utterances.
    Segment(text::SegmentArgs),
    /// Replace anonymization placeholders with consistent names.
    Deanonymize(text::DeanonymizeArgs),
    /// Add (or strip) synthetic final punctuation.
    Repunc(text::RepuncArgs),
    /// Train a byte-pair-encoding tokenizer.
    BpeTrain(bpe::TrainArgs),
    /// Segment a corpus with a trained tokenizer.
    BpeApply(bpe::ApplyArgs),
    /// Compare two tokenizer vocabularies.
    BpeOverlap(bpe::OverlapArgs),
    /// Train the dependency parser with a dynamic oracle.
    ParseTrain(parse::TrainArgs),
    /// Parse utterances with a trained model.
    ParseDecode(parse::DecodeArgs),
    /// LAS/UAS/UPOS of a parsed treebank.
    ParseScore(parse::ScoreArgs),
    /// Exhaustively verify the dynamic oracle on short sentences.
    OracleCheck(parse::OracleArgs),
    /// Train the concept tagger.
    SluTrain(slu::TrainArgs),
    /// Tag utterances with concepts.
    SluDecode(slu::DecodeArgs),
    /// Concept (value) error rate with a confidence interval.
    SluScore(slu::ScoreArgs),
    /// Document classification over repeated random splits.
    ClassifRun(classif::RunArgs),
    /// Train/dev/test split of a corpus.
    Split(text::SplitArgs),
    /// Write the synthetic toy corpora.
    ToyData(text::ToyDataArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Normalize(_) => "normalize",
            Command::Segment(_) => "segment",
            Command::Deanonymize(_) => "deanonymize",
            Command::Repunc(_) => "repunc",
            Command::BpeTrain(_) => "bpe-train",
            Command::BpeApply(_) => "bpe-apply",
            Command::BpeOverlap(_) => "bpe-overlap",
            Command::ParseTrain(_) => "parse-train",
            Command::ParseDecode(_) => "parse-decode",
            Command::ParseScore(_) => "parse-score",
            Command::OracleCheck(_) => "oracle-check",
            Command::SluTrain(_) => "slu-train",
            Command::SluDecode(_) => "slu-decode",
            Command::SluScore(_) => "slu-score",
            Command::ClassifRun(_) => "classif-run",
            Command::Split(_) => "split",
            Command::ToyData(_) => "toy-data",
        }
    }
}

/// A check that ran to completion but did not pass; its report is still
/// emitted.
#[derive(Debug)]
pub struct Failed(pub Outcome);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("verification failed")
    }
}

impl std::error::Error for Failed {}

impl std::fmt::Debug for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.table)
    }
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let seed = cli.seed;
    match &cli.command {
        Command::Normalize(a) => text::normalize(a),
        Command::Segment(a) => text::segment(a),
        Command::Deanonymize(a) => text::deanonymize(a, seed),
        Command::Repunc(a) => text::repunc(a),
        Command::BpeTrain(a) => bpe::train(a, cli.scale.bpe_vocab()),
        Command::BpeApply(a) => bpe::apply(a),
        Command::BpeOverlap(a) => bpe::overlap(a),
        Command::ParseTrain(a) => parse::train(a, seed, cli.scale.hidden()),
        Command::ParseDecode(a) => parse::decode(a),
        Command::ParseScore(a) => parse::score(a),
        Command::OracleCheck(a) => parse::oracle_check(a),
        Command::SluTrain(a) => slu::train(a, seed),
        Command::SluDecode(a) => slu::decode(a),
        Command::SluScore(a) => slu::score(a),
        Command::ClassifRun(a) => classif::run(a, seed, cli.scale.tfidf_vocab()),
        Command::Split(a) => text::split(a, seed),
        Command::ToyData(a) => text::toy_data(a, seed),
    }
}

fn emit(cli: &Cli, out: Outcome) -> anyhow::Result<()> {
    print!("{}", out.table);
    if let Some(path) = &cli.report {
        io::write_report(path, cli.command.name(), cli.seed, out.report)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(out) => match emit(&cli, out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            let e = match e.downcast::<Failed>() {
                Ok(Failed(out)) => {
                    if let Err(e) = emit(&cli, out) {
                        eprintln!("error: {e:#}");
                    }
                    return ExitCode::from(1);
                }
                Err(e) => e,
            };
            eprintln!("error: {e:#}");
            if e.is::<io::Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
