//! Core data model and file I/O: transcripts, dependency trees, SLU samples,
//! labeled documents and train/dev/test splits.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single token of a transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// 1-based position in the utterance.
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oov: Option<bool>,
    /// True for tokens injected by repunctuation.
    #[serde(default)]
    pub synthetic: bool,
}

impl Token {
    pub fn new(surface: impl Into<String>, index: usize) -> Self {
        Token {
            surface: surface.into(),
            index,
            oov: None,
            synthetic: false,
        }
    }
}

/// A speech turn or sentence: a non-empty token sequence with provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub tokens: Vec<Token>,
    pub recording_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_span: Option<(f64, f64)>,
}

impl Utterance {
    /// Builds an utterance from surface forms, numbering tokens from 1.
    pub fn from_words<S: AsRef<str>>(recording_id: impl Into<String>, words: &[S]) -> Result<Self> {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, w)| Token::new(w.as_ref(), i + 1))
            .collect();
        let utt = Utterance {
            tokens,
            recording_id: recording_id.into(),
            speaker_id: None,
            time_span: None,
        };
        utt.validate()?;
        Ok(utt)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    /// Space-joined surface text.
    pub fn text(&self) -> String {
        self.surfaces().join(" ")
    }

    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::InvalidData(format!(
                "empty utterance in recording {}",
                self.recording_id
            )));
        }
        for (i, tok) in self.tokens.iter().enumerate() {
            if tok.surface.is_empty() {
                return Err(Error::InvalidData(format!(
                    "empty token at position {}",
                    i + 1
                )));
            }
            if tok.index != i + 1 {
                return Err(Error::InvalidData(format!(
                    "token indices not contiguous: expected {}, found {}",
                    i + 1,
                    tok.index
                )));
            }
        }
        if let Some((start, end)) = self.time_span {
            if start > end {
                return Err(Error::InvalidData(format!(
                    "time span start {start} > end {end}"
                )));
            }
        }
        Ok(())
    }
}

/// CoNLL-U columns the toolkit does not interpret, kept for round trips.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpaqueColumns {
    pub lemma: String,
    pub xpos: String,
    pub feats: String,
    pub deps: String,
    pub misc: String,
}

impl Default for OpaqueColumns {
    fn default() -> Self {
        let blank = || "_".to_string();
        OpaqueColumns {
            lemma: blank(),
            xpos: blank(),
            feats: blank(),
            deps: blank(),
            misc: blank(),
        }
    }
}

/// A dependency tree over one utterance. Vectors are indexed by token
/// position minus one; head 0 is the artificial root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepTree {
    pub utterance: Utterance,
    pub heads: Vec<usize>,
    pub labels: Vec<String>,
    pub pos: Vec<String>,
    #[serde(default)]
    pub opaque: Vec<OpaqueColumns>,
    #[serde(default)]
    pub comments: Vec<String>,
}

impl DepTree {
    pub fn new(
        utterance: Utterance,
        heads: Vec<usize>,
        labels: Vec<String>,
        pos: Vec<String>,
    ) -> Result<Self> {
        let n = utterance.len();
        let tree = DepTree {
            utterance,
            heads,
            labels,
            pos,
            opaque: vec![OpaqueColumns::default(); n],
            comments: Vec::new(),
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// Head of the 1-based token `dep`.
    pub fn head(&self, dep: usize) -> usize {
        self.heads[dep - 1]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.utterance.len();
        if self.heads.len() != n || self.labels.len() != n || self.pos.len() != n {
            return Err(Error::InvalidTree(format!(
                "column lengths differ from token count {n}"
            )));
        }
        if self.opaque.len() != n {
            return Err(Error::InvalidTree("opaque column count mismatch".into()));
        }
        if let Some((i, &h)) = self.heads.iter().enumerate().find(|(_, &h)| h > n) {
            return Err(Error::InvalidTree(format!(
                "token {} has head {h} outside [0, {n}]",
                i + 1
            )));
        }
        if let Some(dep) = find_cycle(&self.heads) {
            return Err(Error::InvalidTree(format!("cycle through token {dep}")));
        }
        Ok(())
    }
}

/// Returns some token on a cycle, if the head function has one.
pub fn find_cycle(heads: &[usize]) -> Option<usize> {
    let n = heads.len();
    // 0 = unvisited, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    for start in 1..=n {
        let mut path = Vec::new();
        let mut cur = start;
        while state[cur] == 0 {
            state[cur] = 1;
            path.push(cur);
            cur = heads[cur - 1];
            if cur > n {
                return Some(start);
            }
        }
        if state[cur] == 1 {
            return Some(cur);
        }
        for p in path {
            state[p] = 2;
        }
    }
    None
}

/// Closed POS and dependency-label inventories.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSet {
    pub pos: Vec<String>,
    pub labels: Vec<String>,
}

impl TagSet {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }

    /// Inventories observed in a treebank, sorted.
    pub fn from_trees(trees: &[DepTree]) -> Self {
        let mut pos = BTreeSet::new();
        let mut labels = BTreeSet::new();
        for t in trees {
            pos.extend(t.pos.iter().cloned());
            labels.extend(t.labels.iter().cloned());
        }
        TagSet {
            pos: pos.into_iter().collect(),
            labels: labels.into_iter().collect(),
        }
    }

    pub fn check(&self, tree: &DepTree) -> Result<()> {
        for (i, (p, l)) in tree.pos.iter().zip(&tree.labels).enumerate() {
            if !self.pos.contains(p) {
                return Err(Error::InvalidTree(format!(
                    "token {}: unknown POS {p}",
                    i + 1
                )));
            }
            if !self.labels.contains(l) {
                return Err(Error::InvalidTree(format!(
                    "token {}: unknown label {l}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Reads a CoNLL-U treebank. Multiword-token ranges and empty nodes are
/// skipped.
pub fn read_conllu(path: &Path) -> Result<Vec<DepTree>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let recording = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_conllu(BufReader::new(file), &recording)
}

/// Parses CoNLL-U from any reader. `default_recording` is used for
/// sentences without a `recording_id` or `sent_id` comment.
pub fn parse_conllu<R: BufRead>(reader: R, default_recording: &str) -> Result<Vec<DepTree>> {
    let mut trees = Vec::new();
    let mut block = ConlluBlock::default();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            if let Some(tree) = block.finish(default_recording)? {
                trees.push(tree);
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            block.comments.push(comment.to_string());
            continue;
        }
        block.push_line(&line, lineno)?;
    }
    if let Some(tree) = block.finish(default_recording)? {
        trees.push(tree);
    }
    Ok(trees)
}

#[derive(Default)]
struct ConlluBlock {
    comments: Vec<String>,
    forms: Vec<String>,
    heads: Vec<usize>,
    labels: Vec<String>,
    pos: Vec<String>,
    opaque: Vec<OpaqueColumns>,
    first_line: usize,
}

impl ConlluBlock {
    fn push_line(&mut self, line: &str, lineno: usize) -> Result<()> {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            return Ok(());
        }
        let id: usize = cols[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("non-integer ID {:?}", cols[0]),
        })?;
        if self.forms.is_empty() {
            self.first_line = lineno;
        }
        if id != self.forms.len() + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected token ID {}, found {id}", self.forms.len() + 1),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("non-integer HEAD {:?}", cols[6]),
        })?;
        if cols[1].is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty FORM".into(),
            });
        }
        self.forms.push(cols[1].to_string());
        self.pos.push(cols[3].to_string());
        self.heads.push(head);
        self.labels.push(cols[7].to_string());
        self.opaque.push(OpaqueColumns {
            lemma: cols[2].to_string(),
            xpos: cols[4].to_string(),
            feats: cols[5].to_string(),
            deps: cols[8].to_string(),
            misc: cols[9].to_string(),
        });
        Ok(())
    }

    fn finish(&mut self, default_recording: &str) -> Result<Option<DepTree>> {
        let block = std::mem::take(self);
        if block.forms.is_empty() {
            if !block.comments.is_empty() {
                // comments without tokens carry over to the next block
                self.comments = block.comments;
            }
            return Ok(None);
        }
        let recording_id = comment_value(&block.comments, "recording_id")
            .or_else(|| comment_value(&block.comments, "sent_id"))
            .unwrap_or_else(|| default_recording.to_string());
        let mut utterance = Utterance::from_words(recording_id, &block.forms)?;
        utterance.speaker_id = comment_value(&block.comments, "speaker_id");
        let tree = DepTree {
            utterance,
            heads: block.heads,
            labels: block.labels,
            pos: block.pos,
            opaque: block.opaque,
            comments: block.comments,
        };
        tree.validate().map_err(|e| match e {
            Error::InvalidTree(msg) => Error::InvalidTree(format!(
                "sentence starting at line {}: {msg}",
                block.first_line
            )),
            other => other,
        })?;
        Ok(Some(tree))
    }
}

fn comment_value(comments: &[String], key: &str) -> Option<String> {
    comments.iter().find_map(|c| {
        let (k, v) = c.split_once('=')?;
        (k.trim() == key).then(|| v.trim().to_string())
    })
}

pub fn write_conllu(trees: &[DepTree], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    format_conllu(trees, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn format_conllu<W: Write>(trees: &[DepTree], w: &mut W) -> std::io::Result<()> {
    for tree in trees {
        for c in &tree.comments {
            writeln!(w, "#{c}")?;
        }
        for (i, tok) in tree.utterance.tokens.iter().enumerate() {
            let op = &tree.opaque[i];
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                i + 1,
                tok.surface,
                op.lemma,
                tree.pos[i],
                op.xpos,
                op.feats,
                tree.heads[i],
                tree.labels[i],
                op.deps,
                op.misc
            )?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// An SLU utterance with one BIO tag per token.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SluSample {
    pub utterance: Utterance,
    pub bio_tags: Vec<String>,
}

impl SluSample {
    pub fn validate(&self) -> Result<()> {
        if self.bio_tags.len() != self.utterance.len() {
            return Err(Error::InvalidData(format!(
                "{} tags for {} tokens",
                self.bio_tags.len(),
                self.utterance.len()
            )));
        }
        let mut prev: Option<&str> = None;
        for (i, tag) in self.bio_tags.iter().enumerate() {
            if let Some(concept) = tag.strip_prefix("I-") {
                let ok = matches!(prev, Some(p) if p == concept);
                if !ok {
                    return Err(Error::InvalidData(format!(
                        "tag {tag} at token {} does not continue a {concept} span",
                        i + 1
                    )));
                }
                prev = Some(concept);
            } else if let Some(concept) = tag.strip_prefix("B-") {
                prev = Some(concept);
            } else if tag == "O" {
                prev = None;
            } else {
                return Err(Error::InvalidData(format!("malformed BIO tag {tag:?}")));
            }
        }
        Ok(())
    }
}

/// Reads SLU samples from two-column TSV (`token<TAB>tag`), one blank line
/// between utterances. A `# id = ...` comment names the utterance.
pub fn read_slu_tsv(path: &Path) -> Result<Vec<SluSample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_slu_tsv(BufReader::new(file))
}

pub fn parse_slu_tsv<R: BufRead>(reader: R) -> Result<Vec<SluSample>> {
    let mut samples = Vec::new();
    let mut words: Vec<String> = Vec::new();
    let mut tags: Vec<String> = Vec::new();
    let mut id: Option<String> = None;
    let mut flush =
        |words: &mut Vec<String>, tags: &mut Vec<String>, id: &mut Option<String>| -> Result<()> {
            if words.is_empty() {
                return Ok(());
            }
            let rec = id
                .take()
                .unwrap_or_else(|| format!("utt{}", samples.len() + 1));
            let sample = SluSample {
                utterance: Utterance::from_words(rec, words)?,
                bio_tags: std::mem::take(tags),
            };
            words.clear();
            samples.push(sample);
            Ok(())
        };
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            flush(&mut words, &mut tags, &mut id)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if k.trim() == "id" {
                    id = Some(v.trim().to_string());
                }
            }
            continue;
        }
        let (word, tag) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: lineno,
            message: "expected token<TAB>tag".into(),
        })?;
        if word.is_empty() || tag.contains('\t') {
            return Err(Error::Parse {
                line: lineno,
                message: "expected exactly two non-empty columns".into(),
            });
        }
        words.push(word.to_string());
        tags.push(tag.to_string());
    }
    flush(&mut words, &mut tags, &mut id)?;
    Ok(samples)
}

pub fn write_slu_tsv(samples: &[SluSample], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for s in samples {
        writeln!(w, "# id = {}", s.utterance.recording_id).map_err(io)?;
        for (tok, tag) in s.utterance.tokens.iter().zip(&s.bio_tags) {
            writeln!(w, "{}\t{}", tok.surface, tag).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// A transcript with its category, for document classification.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDocument {
    #[serde(default)]
    pub id: String,
    pub text: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

/// Reads a JSON-lines document corpus. Missing ids become `doc<N>`.
pub fn read_documents(path: &Path) -> Result<Vec<LabeledDocument>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(file)).map(|docs: Vec<LabeledDocument>| {
        docs.into_iter()
            .enumerate()
            .map(|(i, mut d)| {
                if d.id.is_empty() {
                    d.id = format!("doc{}", i + 1);
                }
                d
            })
            .collect()
    })
}

/// Checks every document against a declared category inventory.
pub fn check_categories(docs: &[LabeledDocument], inventory: &[String]) -> Result<()> {
    for d in docs {
        if !inventory.contains(&d.category) {
            return Err(Error::InvalidData(format!(
                "document {} has undeclared category {}",
                d.id, d.category
            )));
        }
    }
    Ok(())
}

pub fn write_documents(docs: &[LabeledDocument], path: &Path) -> Result<()> {
    write_jsonl(docs, path)
}

/// Reads utterances stored one JSON object per line.
pub fn read_utterances(path: &Path) -> Result<Vec<Utterance>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let utts: Vec<Utterance> = read_jsonl(BufReader::new(file))?;
    for u in &utts {
        u.validate()?;
    }
    Ok(utts)
}

pub fn write_utterances(utts: &[Utterance], path: &Path) -> Result<()> {
    write_jsonl(utts, path)
}

/// Whitespace-tokenized text, one utterance per non-blank line. Utterances
/// are named `<prefix>-<line number>`.
pub fn parse_plain_text<R: BufRead>(reader: R, prefix: &str) -> Result<Vec<Utterance>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let words: Vec<&str> = line.split_whitespace().collect();
        if !words.is_empty() {
            out.push(Utterance::from_words(
                format!("{prefix}-{}", lineno + 1),
                &words,
            )?);
        }
    }
    Ok(out)
}

pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub(crate) fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        writeln!(w).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Train,
    Dev,
    Test,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::Train, Part::Dev, Part::Test];
}

/// Train/dev/test membership keyed by item id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub parts: BTreeMap<String, Part>,
}

impl SplitSpec {
    pub fn ids(&self, part: Part) -> Vec<&str> {
        self.parts
            .iter()
            .filter(|(_, p)| **p == part)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn sizes(&self) -> [usize; 3] {
        let mut sizes = [0; 3];
        for p in self.parts.values() {
            sizes[*p as usize] += 1;
        }
        sizes
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }
}

/// Largest-remainder allocation of `total` items over `ratios`; ties go to
/// the earlier part.
pub(crate) fn allocate(total: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Groups `(id, stratum)` pairs and shuffles each stratum with a seeded RNG.
/// Strata are visited in name order.
pub(crate) fn shuffled_strata<'a>(
    items: &'a [(String, String)],
    seed: u64,
) -> BTreeMap<&'a str, Vec<&'a str>> {
    let mut strata: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, stratum) in items {
        strata
            .entry(stratum.as_str())
            .or_default()
            .push(id.as_str());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for ids in strata.values_mut() {
        ids.shuffle(&mut rng);
    }
    strata
}

/// Splits `(id, stratum)` items into train/dev/test so that each stratum
/// follows `ratios` up to one item of rounding.
pub fn stratified_split(
    items: &[(String, String)],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitSpec> {
    if items.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot split an empty item set".into(),
        ));
    }
    let r = [ratios.0, ratios.1, ratios.2];
    if r.iter().any(|&x| !(x > 0.0)) || ((r.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "ratios must be positive and sum to 1, got {r:?}"
        )));
    }
    let distinct: BTreeSet<&str> = items.iter().map(|(id, _)| id.as_str()).collect();
    if distinct.len() != items.len() {
        return Err(Error::InvalidArgument("duplicate item ids".into()));
    }
    let mut parts = BTreeMap::new();
    for ids in shuffled_strata(items, seed).into_values() {
        let counts = allocate(ids.len(), &r);
        let mut it = ids.into_iter();
        for (part, count) in Part::ALL.iter().zip(counts) {
            for id in it.by_ref().take(count) {
                parts.insert(id.to_string(), *part);
            }
        }
    }
    Ok(SplitSpec { seed, parts })
}

/// Word counts per part, for reporting achieved sizes of utterance-level splits.
pub fn split_word_counts(split: &SplitSpec, utterances: &[(String, usize)]) -> [usize; 3] {
    let mut counts = [0; 3];
    for (id, n) in utterances {
        if let Some(p) = split.parts.get(id) {
            counts[*p as usize] += n;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn line(id: usize, form: &str, head: &str, rel: &str) -> String {
        format!("{id}\t{form}\t_\tX\t_\t_\t{head}\t{rel}\t_\t_")
    }

    #[test]
    fn minimal_tree() {
        let text = format!(
            "{}\n{}\n\n",
            line(1, "le", "2", "det"),
            line(2, "chat", "0", "root")
        );
        let trees = parse_conllu(Cursor::new(text), "r").unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].heads, vec![2, 0]);
        assert_eq!(trees[0].labels, vec!["det", "root"]);
    }

    #[test]
    fn bad_head_names_line() {
        let mut lines: Vec<String> = vec!["# sent_id = a".into()];
        lines.push(line(1, "a", "0", "root"));
        lines.push(String::new());
        lines.push(line(1, "b", "0", "root"));
        lines.push(line(2, "c", "1", "dep"));
        lines.push(line(3, "d", "1", "dep"));
        lines.push(line(4, "e", "x", "dep"));
        let text = lines.join("\n");
        match parse_conllu(Cursor::new(text), "r") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count() {
        let text = "1\tle\t_\tDET\n";
        assert!(matches!(
            parse_conllu(Cursor::new(text), "r"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn cyclic_tree_rejected() {
        let text = format!("{}\n{}\n", line(1, "a", "2", "x"), line(2, "b", "1", "x"));
        assert!(matches!(
            parse_conllu(Cursor::new(text), "r"),
            Err(Error::InvalidTree(_))
        ));
    }

    #[test]
    fn write_shapes() {
        let mut buf = Vec::new();
        format_conllu(&[], &mut buf).unwrap();
        assert!(buf.is_empty());

        let utt = Utterance::from_words("r", &["le", "chat", "dort"]).unwrap();
        let tree = DepTree::new(
            utt,
            vec![2, 3, 0],
            vec!["det".into(), "subj".into(), "root".into()],
            vec!["DET".into(), "NOUN".into(), "VERB".into()],
        )
        .unwrap();
        format_conllu(&[tree], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[3].is_empty() && lines[4].is_empty());
    }

    #[test]
    fn slu_tsv_parses() {
        let text = "# id = u1\nje\tB-cmd\nveux\tI-cmd\nune\tO\n\nparis\tB-city\n";
        let samples = parse_slu_tsv(Cursor::new(text)).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].utterance.recording_id, "u1");
        assert_eq!(samples[1].bio_tags, vec!["B-city"]);
        samples[0].validate().unwrap();
    }

    #[test]
    fn slu_validation_rejects_orphan_inside() {
        let s = SluSample {
            utterance: Utterance::from_words("u", &["a", "b"]).unwrap(),
            bio_tags: vec!["O".into(), "I-x".into()],
        };
        assert!(s.validate().is_err());
    }

    fn items(strata: &[(&str, usize)]) -> Vec<(String, String)> {
        strata
            .iter()
            .flat_map(|(name, n)| {
                (0..*n).map(move |i| (format!("{name}-{i:03}"), name.to_string()))
            })
            .collect()
    }

    #[test]
    fn split_exact_sizes() {
        let s = stratified_split(&items(&[("a", 100)]), (0.8, 0.1, 0.1), 7).unwrap();
        assert_eq!(s.sizes(), [80, 10, 10]);
        let s = stratified_split(&items(&[("a", 50), ("b", 50)]), (0.8, 0.1, 0.1), 7).unwrap();
        assert_eq!(s.sizes(), [80, 10, 10]);
        for stratum in ["a", "b"] {
            let mut per = [0; 3];
            for (id, p) in &s.parts {
                if id.starts_with(stratum) {
                    per[*p as usize] += 1;
                }
            }
            assert_eq!(per, [40, 5, 5]);
        }
    }

    #[test]
    fn split_determinism() {
        let it = items(&[("a", 37), ("b", 23), ("c", 9)]);
        let a = stratified_split(&it, (0.7, 0.2, 0.1), 3).unwrap();
        let b = stratified_split(&it, (0.7, 0.2, 0.1), 3).unwrap();
        let c = stratified_split(&it, (0.7, 0.2, 0.1), 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.parts, c.parts);
        assert_eq!(a.sizes(), c.sizes());
    }

    #[test]
    fn split_errors() {
        assert!(stratified_split(&[], (0.8, 0.1, 0.1), 0).is_err());
        assert!(stratified_split(&items(&[("a", 3)]), (0.8, 0.3, 0.1), 0).is_err());
        assert!(stratified_split(&items(&[("a", 3)]), (1.0, 0.0, 0.0), 0).is_err());
    }

    #[test]
    fn largest_remainder() {
        assert_eq!(allocate(7, &[0.8, 0.1, 0.1]), vec![5, 1, 1]);
        assert_eq!(allocate(3, &[1.0 / 3.0; 3]), vec![1, 1, 1]);
        assert_eq!(allocate(0, &[0.5, 0.5]), vec![0, 0]);
    }
}
