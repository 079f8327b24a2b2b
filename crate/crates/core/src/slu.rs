//! Concept tagging for spoken-language understanding: BIO span coding,
//! rule-based value normalization, concept (value) error rates and a
//! windowed neural tagger over provider vectors.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{SluSample, Utterance};
use crate::embed::{EmbeddingProvider, ExternalVectors, ProviderState, Providers, TokenInput};
use crate::error::{Error, Result};
use crate::metrics::{
    align_error_rate, t_confidence_interval, AlignmentCounts, ConfidenceInterval,
};
use crate::neural::{Adam, AdamConfig, HeadSpec, Mlp, MlpSpec, Mode, Target, Tensor};

/// A concept over tokens `start..=end` (1-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptSpan {
    pub concept: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

enum Bio<'a> {
    O,
    B(&'a str),
    I(&'a str),
}

fn parse_tag(tag: &str) -> Result<Bio<'_>> {
    if tag == "O" {
        Ok(Bio::O)
    } else if let Some(c) = tag.strip_prefix("B-").filter(|c| !c.is_empty()) {
        Ok(Bio::B(c))
    } else if let Some(c) = tag.strip_prefix("I-").filter(|c| !c.is_empty()) {
        Ok(Bio::I(c))
    } else {
        Err(Error::InvalidData(format!("malformed BIO tag {tag:?}")))
    }
}

/// Rewrites every `I-x` that does not continue an `x` span as `B-x`.
/// Returns the repaired tags and the number of repairs.
pub fn repair_bio<S: AsRef<str>>(tags: &[S]) -> Result<(Vec<String>, usize)> {
    let mut out = Vec::with_capacity(tags.len());
    let mut repairs = 0;
    let mut prev: Option<String> = None;
    for tag in tags {
        match parse_tag(tag.as_ref())? {
            Bio::O => {
                prev = None;
                out.push("O".to_string());
            }
            Bio::B(c) => {
                prev = Some(c.to_string());
                out.push(tag.as_ref().to_string());
            }
            Bio::I(c) => {
                if prev.as_deref() == Some(c) {
                    out.push(tag.as_ref().to_string());
                } else {
                    repairs += 1;
                    out.push(format!("B-{c}"));
                    prev = Some(c.to_string());
                }
            }
        }
    }
    Ok((out, repairs))
}

/// Maximal `B-x I-x*` runs as spans; orphan `I-x` tags open a new span.
pub fn bio_decode<S: AsRef<str>, T: AsRef<str>>(
    tags: &[S],
    tokens: &[T],
) -> Result<Vec<ConceptSpan>> {
    if tags.len() != tokens.len() {
        return Err(Error::Dimension {
            expected: tokens.len(),
            got: tags.len(),
        });
    }
    let (tags, _) = repair_bio(tags)?;
    let mut spans: Vec<ConceptSpan> = Vec::new();
    for (i, tag) in tags.iter().enumerate() {
        let word = tokens[i].as_ref();
        match parse_tag(tag)? {
            Bio::O => {}
            Bio::B(c) => spans.push(ConceptSpan {
                concept: c.to_string(),
                start: i + 1,
                end: i + 1,
                surface: word.to_string(),
                value: None,
            }),
            Bio::I(_) => {
                let last = spans.last_mut().expect("repaired I- tag follows a span");
                last.end = i + 1;
                last.surface.push(' ');
                last.surface.push_str(word);
            }
        }
    }
    Ok(spans)
}

/// Inverse of [`bio_decode`] on well-formed spans.
pub fn bio_encode(spans: &[ConceptSpan], n_tokens: usize) -> Result<Vec<String>> {
    let mut tags = vec!["O".to_string(); n_tokens];
    let mut used = vec![false; n_tokens];
    for s in spans {
        if s.start == 0 || s.start > s.end || s.end > n_tokens {
            return Err(Error::InvalidData(format!(
                "span {}..={} of {} outside 1..={n_tokens}",
                s.start, s.end, s.concept
            )));
        }
        for k in s.start..=s.end {
            if used[k - 1] {
                return Err(Error::InvalidData(format!(
                    "span {} overlaps another span at token {k}",
                    s.concept
                )));
            }
            used[k - 1] = true;
            let prefix = if k == s.start { "B" } else { "I" };
            tags[k - 1] = format!("{prefix}-{}", s.concept);
        }
    }
    Ok(tags)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValueRule {
    pub pattern: String,
    pub value: String,
}

/// Per-concept ordered rewrite rules. A pattern is a regular expression
/// that must match the whole span surface; the value may use `$1`-style
/// group references. The first matching rule wins.
#[derive(Clone, Debug, Default)]
pub struct ValueRules {
    rules: BTreeMap<String, Vec<(Regex, String)>>,
}

impl ValueRules {
    pub fn from_map(map: BTreeMap<String, Vec<ValueRule>>) -> Result<Self> {
        let mut rules = BTreeMap::new();
        for (concept, list) in map {
            let compiled = list
                .into_iter()
                .map(|r| {
                    Regex::new(&format!("^(?:{})$", r.pattern))
                        .map(|re| (re, r.value))
                        .map_err(|e| Error::InvalidData(format!("rule for {concept}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rules.insert(concept, compiled);
        }
        Ok(ValueRules { rules })
    }

    pub fn parse(json: &str) -> Result<Self> {
        Self::from_map(serde_json::from_str(json)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn value(&self, concept: &str, surface: &str) -> String {
        self.rules
            .get(concept)
            .and_then(|list| {
                list.iter().find_map(|(re, rep)| {
                    re.captures(surface).map(|caps| {
                        let mut out = String::new();
                        caps.expand(rep, &mut out);
                        out
                    })
                })
            })
            .unwrap_or_else(|| surface.to_string())
    }
}

pub fn extract_values(spans: &[ConceptSpan], rules: &ValueRules) -> Vec<ConceptSpan> {
    spans
        .iter()
        .map(|s| ConceptSpan {
            value: Some(rules.value(&s.concept, &s.surface)),
            ..s.clone()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    Cer,
    Cver,
}

/// Alignment items: concept labels, or concept/value pairs.
pub fn concept_items(spans: &[ConceptSpan], mode: ScoreMode) -> Vec<String> {
    spans
        .iter()
        .map(|s| match mode {
            ScoreMode::Cer => s.concept.clone(),
            ScoreMode::Cver => {
                format!("{}={}", s.concept, s.value.as_deref().unwrap_or(&s.surface))
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SluScore {
    pub mode: ScoreMode,
    pub counts: AlignmentCounts,
    /// Corpus-level error rate in percent.
    pub rate: f64,
    #[serde(skip)]
    pub per_utterance: Vec<AlignmentCounts>,
}

pub fn score_corpus(
    gold: &[Vec<ConceptSpan>],
    hyp: &[Vec<ConceptSpan>],
    mode: ScoreMode,
) -> Result<SluScore> {
    if gold.len() != hyp.len() {
        return Err(Error::Dimension {
            expected: gold.len(),
            got: hyp.len(),
        });
    }
    let per_utterance: Vec<AlignmentCounts> = gold
        .iter()
        .zip(hyp)
        .map(|(g, h)| align_error_rate(&concept_items(g, mode), &concept_items(h, mode)))
        .collect();
    let counts: AlignmentCounts = per_utterance.iter().copied().sum();
    Ok(SluScore {
        mode,
        counts,
        rate: 100.0 * counts.rate().unwrap_or(0.0),
        per_utterance,
    })
}

/// Unit of analysis for the error-rate confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CiUnit {
    /// Per-utterance rates; utterances without reference concepts are skipped.
    Utterance,
    /// Corpus rates of `k` contiguous folds.
    Split(usize),
}

pub fn rate_interval(
    per_utterance: &[AlignmentCounts],
    unit: CiUnit,
    level: f64,
) -> Result<ConfidenceInterval> {
    let rates: Vec<f64> = match unit {
        CiUnit::Utterance => per_utterance
            .iter()
            .filter_map(|c| c.rate().map(|r| 100.0 * r))
            .collect(),
        CiUnit::Split(k) => {
            if k < 2 || k > per_utterance.len() {
                return Err(Error::InvalidArgument(format!(
                    "{k} folds for {} utterances",
                    per_utterance.len()
                )));
            }
            let n = per_utterance.len();
            (0..k)
                .filter_map(|f| {
                    let fold: AlignmentCounts = per_utterance[f * n / k..(f + 1) * n / k]
                        .iter()
                        .copied()
                        .sum();
                    fold.rate().map(|r| 100.0 * r)
                })
                .collect()
        }
    };
    t_confidence_interval(&rates, level)
}

/// Spans of a gold sample.
pub fn sample_spans(sample: &SluSample) -> Result<Vec<ConceptSpan>> {
    bio_decode(&sample.bio_tags, &sample.utterance.surfaces())
}

/// `O` followed by `B-`/`I-` tags of each concept in name order.
pub fn tag_inventory<S: AsRef<str>>(concepts: &[S]) -> Vec<String> {
    let mut sorted: Vec<&str> = concepts.iter().map(|c| c.as_ref()).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let mut tags = vec!["O".to_string()];
    for c in sorted {
        tags.push(format!("B-{c}"));
        tags.push(format!("I-{c}"));
    }
    tags
}

pub fn corpus_concepts(samples: &[SluSample]) -> Vec<String> {
    let mut out: Vec<String> = samples
        .iter()
        .flat_map(|s| s.bio_tags.iter())
        .filter_map(|t| t.get(2..).filter(|_| t != "O"))
        .map(str::to_string)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub const WINDOW: (isize, isize) = (-3, 2);
pub const SLU_FORMAT: &str = "oralkit-slu-tagger";
pub const SLU_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub epochs: usize,
    pub hidden: Vec<usize>,
    pub input_dropout: f64,
    pub hidden_dropout: f64,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            epochs: 50,
            hidden: vec![128],
            input_dropout: 0.2,
            hidden_dropout: 0.2,
            lr: 1e-3,
            batch: 32,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TaggerEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_cer: f64,
}

/// Windowed per-token concept classifier.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SluTagger {
    pub format: String,
    pub version: u32,
    pub tags: Vec<String>,
    pub provider: ProviderState,
    pub mlp: Mlp,
    /// Padding vector for window slots outside the utterance.
    pub pad: Tensor,
}

fn window_features(input: &TokenInput, i: usize, table: &Tensor, pad: &Tensor, x: &mut Vec<f64>) {
    x.clear();
    for off in WINDOW.0..=WINDOW.1 {
        let j = i as isize + off;
        if j < 0 || j as usize >= input.len() {
            x.extend_from_slice(pad.row(0));
        } else {
            x.extend_from_slice(input.vector(j as usize, table));
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

struct Weights<'a> {
    mlp: &'a Mlp,
    pad: &'a Tensor,
    table: &'a Tensor,
}

fn tag_utterance(w: &Weights<'_>, input: &TokenInput, tags: &[String]) -> Result<Vec<String>> {
    let mut x = Vec::new();
    (0..input.len())
        .map(|i| {
            window_features(input, i, w.table, w.pad, &mut x);
            let pass = w.mlp.forward(&x, Mode::Eval)?;
            Ok(tags[argmax(&pass.logits[0])].clone())
        })
        .collect()
}

fn decode_spans(
    w: &Weights<'_>,
    inputs: &[TokenInput],
    utts: &[Utterance],
    tags: &[String],
) -> Result<Vec<Vec<ConceptSpan>>> {
    inputs
        .iter()
        .zip(utts)
        .map(|(inp, u)| bio_decode(&tag_utterance(w, inp, tags)?, &u.surfaces()))
        .collect()
}

impl SluTagger {
    /// Trains on `train`, selecting the epoch with the lowest dev CER
    /// (earliest on ties). `concepts`, when given, is the declared concept
    /// inventory that the data must respect.
    pub fn train<'p>(
        train: &[SluSample],
        dev: &[SluSample],
        providers: impl Into<Providers<'p>>,
        concepts: Option<&[String]>,
        config: &TaggerConfig,
    ) -> Result<(SluTagger, Vec<TaggerEpoch>)> {
        if train.is_empty() {
            return Err(Error::InvalidArgument("empty training set".into()));
        }
        let providers = providers.into();
        providers.check()?;
        let provider = providers.train;
        for s in train.iter().chain(dev) {
            s.validate()?;
        }
        let found = corpus_concepts(train);
        let declared = match concepts {
            Some(c) => {
                let all = corpus_concepts(&[train, dev].concat());
                if let Some(extra) = all.iter().find(|c2| !c.contains(c2)) {
                    return Err(Error::InvalidData(format!(
                        "concept {extra} is not in the inventory"
                    )));
                }
                c.to_vec()
            }
            None => {
                let mut all = found;
                all.extend(corpus_concepts(dev));
                all
            }
        };
        let tags = tag_inventory(&declared);
        let tag_id: BTreeMap<&str, usize> = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();

        let dim = provider.dim();
        let spec = MlpSpec::new(dim * 6, vec![HeadSpec::new("bio", tags.len())])
            .with_hidden(&config.hidden)
            .with_dropout(config.input_dropout, config.hidden_dropout);
        let mut mlp = Mlp::new(spec, config.seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5e1f);
        let pad = Tensor::uniform("pad", 1, dim, 1.0 / (dim as f64).sqrt(), &mut rng);
        // extras[0] = pad, extras[1] = trainable word table (lookup only)
        let mut extras = vec![pad];
        let trainable = provider.table().is_some();
        extras.push(
            provider
                .table()
                .cloned()
                .unwrap_or_else(|| Tensor::zeros("none", 0, dim)),
        );

        let train_utts: Vec<Utterance> = train.iter().map(|s| s.utterance.clone()).collect();
        let dev_utts: Vec<Utterance> = dev.iter().map(|s| s.utterance.clone()).collect();
        let train_in = provider.prepare_corpus(&train_utts)?;
        let dev_in = providers.dev.prepare_corpus(&dev_utts)?;
        let dev_gold: Vec<Vec<ConceptSpan>> =
            dev.iter().map(sample_spans).collect::<Result<_>>()?;
        let targets: Vec<Vec<usize>> = train
            .iter()
            .map(|s| s.bio_tags.iter().map(|t| tag_id[t.as_str()]).collect())
            .collect();

        let adam_cfg = AdamConfig::with_lr(config.lr);
        let mut adam = Adam::new(adam_cfg, &mlp.params);
        let mut adam_extra = Adam::new(adam_cfg, &extras);
        let mut grads = mlp.zero_grads();
        let mut extra_grads: Vec<Tensor> = extras.iter().map(Tensor::zeros_like).collect();

        let mut positions: Vec<(usize, usize)> = targets
            .iter()
            .enumerate()
            .flat_map(|(s, t)| (0..t.len()).map(move |i| (s, i)))
            .collect();
        let batch = config.batch.max(1);
        let mut log = Vec::new();
        let mut best: Option<(f64, Mlp, Vec<Tensor>)> = None;
        let mut x = Vec::new();
        for epoch in 1..=config.epochs {
            positions.shuffle(&mut rng);
            let mut total_loss = 0.0;
            for chunk in positions.chunks(batch) {
                for &(s, i) in chunk {
                    window_features(&train_in[s], i, &extras[1], &extras[0], &mut x);
                    let pass = mlp.forward(&x, Mode::Train(&mut rng))?;
                    let (loss, gx) =
                        mlp.backward(&pass, 0, &Target::Class(targets[s][i]), None, &mut grads)?;
                    total_loss += loss;
                    for (slot, off) in (WINDOW.0..=WINDOW.1).enumerate() {
                        let j = i as isize + off;
                        let g = &gx[slot * dim..(slot + 1) * dim];
                        let (tensor, row) = if j < 0 || j as usize >= train_in[s].len() {
                            (0, 0)
                        } else if let (true, Some(r)) = (trainable, train_in[s].row(j as usize)) {
                            (1, r)
                        } else {
                            continue;
                        };
                        extra_grads[tensor]
                            .row_mut(row)
                            .iter_mut()
                            .zip(g)
                            .for_each(|(a, b)| *a += b);
                    }
                }
                let scale = 1.0 / chunk.len() as f64;
                for g in grads.iter_mut().chain(extra_grads.iter_mut()) {
                    g.data.iter_mut().for_each(|v| *v *= scale);
                }
                adam.update(&mut mlp.params, &grads)?;
                adam_extra.update(&mut extras, &extra_grads)?;
                grads
                    .iter_mut()
                    .chain(extra_grads.iter_mut())
                    .for_each(Tensor::fill_zero);
            }
            let weights = Weights {
                mlp: &mlp,
                pad: &extras[0],
                table: &extras[1],
            };
            let hyp = decode_spans(&weights, &dev_in, &dev_utts, &tags)?;
            let dev_cer = if dev.is_empty() {
                0.0
            } else {
                score_corpus(&dev_gold, &hyp, ScoreMode::Cer)?.rate
            };
            log.push(TaggerEpoch {
                epoch,
                train_loss: total_loss / positions.len().max(1) as f64,
                dev_cer,
            });
            if best.as_ref().is_none_or(|(b, _, _)| dev_cer < *b) {
                best = Some((dev_cer, mlp.clone(), extras.clone()));
            }
        }
        let (mlp, extras) = match best {
            Some((_, m, e)) => (m, e),
            None => (mlp, extras),
        };
        let mut extras = extras.into_iter();
        let pad = extras.next().expect("pad tensor");
        let table = extras.next().expect("table tensor");
        let provider = match provider.state() {
            ProviderState::Lookup { table: mut t } => {
                t.table = table;
                ProviderState::Lookup { table: t }
            }
            other => other,
        };
        Ok((
            SluTagger {
                format: SLU_FORMAT.into(),
                version: SLU_VERSION,
                tags,
                provider,
                mlp,
                pad,
            },
            log,
        ))
    }

    /// BIO tags for each utterance (repaired).
    pub fn tag(
        &self,
        utts: &[Utterance],
        external: Option<ExternalVectors>,
    ) -> Result<Vec<Vec<String>>> {
        let provider = EmbeddingProvider::from_state(&self.provider, external)?;
        let inputs = provider.prepare_corpus(utts)?;
        let empty = Tensor::zeros("none", 0, provider.dim());
        let weights = Weights {
            mlp: &self.mlp,
            pad: &self.pad,
            table: provider.table().unwrap_or(&empty),
        };
        inputs
            .iter()
            .map(|inp| Ok(repair_bio(&tag_utterance(&weights, inp, &self.tags)?)?.0))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: SluTagger = serde_json::from_str(&text)?;
        if model.format != SLU_FORMAT || model.version != SLU_VERSION {
            return Err(Error::InvalidData(format!(
                "{} is not a version {SLU_VERSION} tagger checkpoint",
                path.display()
            )));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOOKING_WORDS: [&str; 10] = [
        "i", "would", "like", "to", "book", "one", "double", "room", "in", "paris",
    ];
    const BOOKING_TAGS: [&str; 10] = [
        "B-cmd-task",
        "I-cmd-task",
        "I-cmd-task",
        "I-cmd-task",
        "I-cmd-task",
        "B-nb-room",
        "B-room-type",
        "I-room-type",
        "O",
        "B-loc-city",
    ];

    #[test]
    fn booking_spans() {
        let spans = bio_decode(&BOOKING_TAGS, &BOOKING_WORDS).unwrap();
        let got: Vec<(&str, usize, usize)> = spans
            .iter()
            .map(|s| (s.concept.as_str(), s.start, s.end))
            .collect();
        assert_eq!(
            got,
            vec![
                ("cmd-task", 1, 5),
                ("nb-room", 6, 6),
                ("room-type", 7, 8),
                ("loc-city", 10, 10)
            ]
        );
        assert_eq!(spans[0].surface, "i would like to book");
        assert_eq!(bio_encode(&spans, 10).unwrap(), BOOKING_TAGS);
    }

    #[test]
    fn booking_values() {
        let rules = ValueRules::parse(
            r#"{"cmd-task": [{"pattern": "i would like to (book|reserve)", "value": "booking"}],
                "nb-room": [{"pattern": "one", "value": "1"}, {"pattern": "one|two", "value": "many"}],
                "room-type": [{"pattern": "(single|double) room", "value": "$1"}]}"#,
        )
        .unwrap();
        let spans = extract_values(&bio_decode(&BOOKING_TAGS, &BOOKING_WORDS).unwrap(), &rules);
        let values: Vec<&str> = spans.iter().map(|s| s.value.as_deref().unwrap()).collect();
        assert_eq!(values, vec!["booking", "1", "double", "paris"]);
    }

    #[test]
    fn all_o_has_no_spans() {
        assert!(bio_decode(&["O", "O"], &["a", "b"]).unwrap().is_empty());
        assert_eq!(bio_encode(&[], 3).unwrap(), vec!["O"; 3]);
    }

    #[test]
    fn orphan_inside_repaired() {
        let (fixed, n) = repair_bio(&["O", "I-x", "I-x", "I-y"]).unwrap();
        assert_eq!(fixed, vec!["O", "B-x", "I-x", "B-y"]);
        assert_eq!(n, 2);
        let spans = bio_decode(&["I-x", "I-x"], &["a", "b"]).unwrap();
        assert_eq!((spans.len(), spans[0].start, spans[0].end), (1, 1, 2));
    }

    #[test]
    fn encode_single_span() {
        let span = ConceptSpan {
            concept: "x".into(),
            start: 2,
            end: 3,
            surface: "b c".into(),
            value: None,
        };
        assert_eq!(
            bio_encode(&[span.clone()], 4).unwrap(),
            vec!["O", "B-x", "I-x", "O"]
        );
        let other = ConceptSpan {
            start: 3,
            end: 4,
            ..span.clone()
        };
        assert!(bio_encode(&[span, other], 4).is_err());
    }

    #[test]
    fn malformed_tag_rejected() {
        assert!(bio_decode(&["B-"], &["a"]).is_err());
        assert!(bio_decode(&["X"], &["a"]).is_err());
        assert!(bio_decode(&["O"], &["a", "b"]).is_err());
    }

    #[test]
    fn cer_booking_deletion() {
        let gold = bio_decode(&BOOKING_TAGS, &BOOKING_WORDS).unwrap();
        let mut hyp_tags = BOOKING_TAGS;
        hyp_tags[5] = "O";
        let hyp = bio_decode(&hyp_tags, &BOOKING_WORDS).unwrap();
        let score = score_corpus(&[gold], &[hyp], ScoreMode::Cer).unwrap();
        assert_eq!(score.counts.deletions, 1);
        assert_eq!(score.rate, 25.0);
    }

    #[test]
    fn cver_counts_value_errors() {
        let gold = vec![ConceptSpan {
            concept: "nb-room".into(),
            start: 1,
            end: 1,
            surface: "one".into(),
            value: Some("1".into()),
        }];
        let hyp = vec![ConceptSpan {
            value: Some("2".into()),
            ..gold[0].clone()
        }];
        let g = [gold];
        let h = [hyp];
        assert_eq!(score_corpus(&g, &h, ScoreMode::Cer).unwrap().rate, 0.0);
        assert_eq!(score_corpus(&g, &h, ScoreMode::Cver).unwrap().rate, 100.0);
    }

    #[test]
    fn split_interval() {
        let per = vec![
            AlignmentCounts {
                substitutions: 1,
                reference_len: 4,
                ..Default::default()
            };
            10
        ];
        let ci = rate_interval(&per, CiUnit::Split(5), 0.95).unwrap();
        assert_eq!((ci.mean, ci.half_width, ci.n), (25.0, 0.0, 5));
        let ci = rate_interval(&per, CiUnit::Utterance, 0.95).unwrap();
        assert_eq!(ci.n, 10);
        assert!(rate_interval(&per, CiUnit::Split(11), 0.95).is_err());
    }

    #[test]
    fn inventory_order() {
        assert_eq!(
            tag_inventory(&["b", "a", "b"]),
            vec!["O", "B-a", "I-a", "B-b", "I-b"]
        );
    }
}
