//! Per-token vector providers standing in for language-model encoders:
//! trainable lookup tables, hashed character n-grams for unknown words, and
//! externally computed contextual vectors read positionally from a file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Token, Utterance};
use crate::error::{Error, Result};
use crate::neural::Tensor;

pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_CHUNK: usize = 512;

/// Word table with an unknown-word row at index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LookupTable {
    pub index: BTreeMap<String, usize>,
    pub table: Tensor,
}

impl LookupTable {
    /// Random table over the words of `utts` (sorted for determinism).
    pub fn from_corpus(utts: &[Utterance], dim: usize, seed: u64) -> Self {
        let mut words: BTreeMap<&str, ()> = BTreeMap::new();
        for u in utts {
            for t in u.tokens.iter().filter(|t| !t.synthetic) {
                words.insert(&t.surface, ());
            }
        }
        let index: BTreeMap<String, usize> = words
            .keys()
            .enumerate()
            .map(|(i, w)| (w.to_string(), i + 1))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (dim as f64).sqrt();
        let table = Tensor::uniform("words", index.len() + 1, dim, bound, &mut rng);
        LookupTable { index, table }
    }

    pub fn dim(&self) -> usize {
        self.table.cols
    }

    /// Row of a word; 0 for unknown words.
    pub fn row_of(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(0)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> &[f64] {
        self.table.row(self.row_of(word))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramConfig {
    pub min_n: usize,
    pub max_n: usize,
    pub buckets: u64,
    pub seed: u64,
}

impl Default for NgramConfig {
    fn default() -> Self {
        NgramConfig {
            min_n: 3,
            max_n: 6,
            buckets: 100_003,
            seed: 0,
        }
    }
}

/// Character n-grams of `<word>` with lengths in `min_n..=max_n`.
pub fn char_ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let chars: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    for n in min_n..=max_n {
        for w in chars.windows(n) {
            out.push(w.iter().collect());
        }
    }
    out
}

fn fnv1a32(s: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in s.as_bytes() {
        h ^= u32::from(*b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FastText-style provider: known words use their own row, unknown words
/// the mean of their hashed n-gram vectors. Bucket vectors are generated on
/// demand from the seed, so the bucket table is never materialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharNgram {
    pub dim: usize,
    pub config: NgramConfig,
    pub known: Option<LookupTable>,
}

impl CharNgram {
    pub fn bucket(&self, ngram: &str) -> u64 {
        u64::from(fnv1a32(ngram)) % self.config.buckets
    }

    /// Deterministic vector of a hash bucket, uniform in ±1/√dim.
    pub fn bucket_vector(&self, bucket: u64) -> Vec<f64> {
        let bound = 1.0 / (self.dim as f64).sqrt();
        let base = splitmix64(self.config.seed ^ bucket.wrapping_mul(0x2545_f491_4f6c_dd1d));
        (0..self.dim as u64)
            .map(|j| {
                let bits = splitmix64(base.wrapping_add(j)) >> 11;
                let unit = bits as f64 / (1u64 << 53) as f64;
                (2.0 * unit - 1.0) * bound
            })
            .collect()
    }

    pub fn vector(&self, word: &str) -> Vec<f64> {
        if let Some(known) = &self.known {
            if known.contains(word) {
                return known.vector(word).to_vec();
            }
        }
        let grams = char_ngrams(word, self.config.min_n, self.config.max_n);
        if grams.is_empty() {
            return vec![0.0; self.dim];
        }
        let mut acc = vec![0.0; self.dim];
        for g in &grams {
            for (a, v) in acc.iter_mut().zip(self.bucket_vector(self.bucket(g))) {
                *a += v;
            }
        }
        let k = grams.len() as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        acc
    }
}

/// Contextual vectors computed outside the toolkit, one per corpus token
/// in order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExternalVectors {
    pub dim: usize,
    pub surfaces: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

impl ExternalVectors {
    /// Reads `<n_tokens> <dim>` then one `<surface> <v1> ... <vdim>` line per token.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })?
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: 1,
                message: format!("bad header {header:?}"),
            })?;
        let [n, dim] = nums[..] else {
            return Err(Error::Parse {
                line: 1,
                message: "header must be \"<n_tokens> <dim>\"".into(),
            });
        };
        let mut surfaces = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ');
            let surface = fields.next().unwrap_or_default().to_string();
            let v: Vec<f64> = fields
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse {
                    line: lineno,
                    message: "non-numeric vector component".into(),
                })?;
            if v.len() != dim {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {dim} components, found {}", v.len()),
                });
            }
            surfaces.push(surface);
            vectors.push(v);
        }
        if vectors.len() != n {
            return Err(Error::Parse {
                line: 1,
                message: format!("header announces {n} tokens, file has {}", vectors.len()),
            });
        }
        Ok(ExternalVectors {
            dim,
            surfaces,
            vectors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "{} {}", self.vectors.len(), self.dim).map_err(io)?;
        for (s, v) in self.surfaces.iter().zip(&self.vectors) {
            write!(w, "{s}").map_err(io)?;
            for x in v {
                write!(w, " {x}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Vectors for `tokens`, starting at position `offset` of the file.
    fn slice(&self, offset: usize, tokens: &[Token], recording: &str) -> Result<Vec<Vec<f64>>> {
        if offset + tokens.len() > self.vectors.len() {
            return Err(Error::Alignment {
                recording: recording.to_string(),
                message: format!(
                    "needs vectors {}..{}, file has {}",
                    offset,
                    offset + tokens.len(),
                    self.vectors.len()
                ),
            });
        }
        for (k, t) in tokens.iter().enumerate() {
            let s = &self.surfaces[offset + k];
            if s != "_" && *s != t.surface {
                return Err(Error::Alignment {
                    recording: recording.to_string(),
                    message: format!(
                        "token {} is {:?} but vector line says {s:?}",
                        t.index, t.surface
                    ),
                });
            }
        }
        Ok(self.vectors[offset..offset + tokens.len()].to_vec())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EmbeddingProvider {
    Lookup(LookupTable),
    CharNgram(CharNgram),
    External(ExternalVectors),
}

impl EmbeddingProvider {
    pub fn kind(&self) -> &'static str {
        match self {
            EmbeddingProvider::Lookup(_) => "lookup",
            EmbeddingProvider::CharNgram(_) => "char_ngram",
            EmbeddingProvider::External(_) => "external",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EmbeddingProvider::Lookup(t) => t.dim(),
            EmbeddingProvider::CharNgram(c) => c.dim,
            EmbeddingProvider::External(e) => e.dim,
        }
    }

    /// One vector per token of a recording. An external provider must hold
    /// exactly as many vectors as the recording has tokens.
    pub fn embed_tokens(&self, recording: &Utterance) -> Result<Vec<Vec<f64>>> {
        if recording.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot embed an empty recording".into(),
            ));
        }
        match self {
            EmbeddingProvider::External(ext) => {
                if ext.vectors.len() != recording.len() {
                    return Err(Error::Alignment {
                        recording: recording.recording_id.clone(),
                        message: format!(
                            "{} vectors for {} tokens",
                            ext.vectors.len(),
                            recording.len()
                        ),
                    });
                }
                ext.slice(0, &recording.tokens, &recording.recording_id)
            }
            _ => Ok(recording
                .tokens
                .iter()
                .map(|t| self.word_vector(&t.surface))
                .collect()),
        }
    }

    /// Embeds a whole corpus; external vectors are consumed positionally
    /// across utterances and must be used up exactly.
    pub fn embed_corpus(&self, utts: &[Utterance]) -> Result<Vec<Vec<Vec<f64>>>> {
        match self {
            EmbeddingProvider::External(ext) => {
                let mut offset = 0;
                let mut out = Vec::with_capacity(utts.len());
                for u in utts {
                    out.push(ext.slice(offset, &u.tokens, &u.recording_id)?);
                    offset += u.len();
                }
                if offset != ext.vectors.len() {
                    let last = utts
                        .last()
                        .map(|u| u.recording_id.clone())
                        .unwrap_or_default();
                    return Err(Error::Alignment {
                        recording: last,
                        message: format!("{} vectors left unused", ext.vectors.len() - offset),
                    });
                }
                Ok(out)
            }
            _ => utts.iter().map(|u| self.embed_tokens(u)).collect(),
        }
    }

    /// Vector of a word form. Not available for external providers, whose
    /// vectors are occurrence-specific.
    pub fn word_vector(&self, word: &str) -> Vec<f64> {
        match self {
            EmbeddingProvider::Lookup(t) => t.vector(word).to_vec(),
            EmbeddingProvider::CharNgram(c) => c.vector(word),
            EmbeddingProvider::External(e) => vec![0.0; e.dim],
        }
    }
}

/// Provider output for one utterance: rows of a trainable lookup table, or
/// fixed vectors.
#[derive(Clone, Debug, PartialEq)]
pub enum TokenInput {
    Rows(Vec<usize>),
    Fixed(Vec<Vec<f64>>),
}

impl TokenInput {
    pub fn len(&self) -> usize {
        match self {
            TokenInput::Rows(r) => r.len(),
            TokenInput::Fixed(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Vector of token `i` (0-based); `table` backs the `Rows` variant.
    pub fn vector<'a>(&'a self, i: usize, table: &'a Tensor) -> &'a [f64] {
        match self {
            TokenInput::Rows(r) => table.row(r[i]),
            TokenInput::Fixed(v) => &v[i],
        }
    }

    /// Lookup row of token `i`, if trainable.
    pub fn row(&self, i: usize) -> Option<usize> {
        match self {
            TokenInput::Rows(r) => Some(r[i]),
            TokenInput::Fixed(_) => None,
        }
    }

    /// Keeps the tokens at the given 0-based positions.
    pub fn select(&self, keep: &[usize]) -> TokenInput {
        match self {
            TokenInput::Rows(r) => TokenInput::Rows(keep.iter().map(|&i| r[i]).collect()),
            TokenInput::Fixed(v) => TokenInput::Fixed(keep.iter().map(|&i| v[i].clone()).collect()),
        }
    }
}

impl EmbeddingProvider {
    /// Per-utterance inputs for a corpus. Lookup providers yield table rows
    /// so that the table can be fine-tuned; the others yield fixed vectors.
    pub fn prepare_corpus(&self, utts: &[Utterance]) -> Result<Vec<TokenInput>> {
        match self {
            EmbeddingProvider::Lookup(t) => Ok(utts
                .iter()
                .map(|u| TokenInput::Rows(u.tokens.iter().map(|k| t.row_of(&k.surface)).collect()))
                .collect()),
            _ => Ok(self
                .embed_corpus(utts)?
                .into_iter()
                .map(TokenInput::Fixed)
                .collect()),
        }
    }

    /// The trainable table of a lookup provider.
    pub fn table(&self) -> Option<&Tensor> {
        match self {
            EmbeddingProvider::Lookup(t) => Some(&t.table),
            _ => None,
        }
    }
}

/// Providers for a training corpus and its development corpus. They only
/// differ for external vectors, which belong to one corpus each.
#[derive(Clone, Copy, Debug)]
pub struct Providers<'a> {
    pub train: &'a EmbeddingProvider,
    pub dev: &'a EmbeddingProvider,
}

impl<'a> From<&'a EmbeddingProvider> for Providers<'a> {
    fn from(p: &'a EmbeddingProvider) -> Self {
        Providers { train: p, dev: p }
    }
}

impl Providers<'_> {
    pub fn check(&self) -> Result<()> {
        if self.train.kind() != self.dev.kind() {
            return Err(Error::InvalidArgument(format!(
                "train provider is {} but dev provider is {}",
                self.train.kind(),
                self.dev.kind()
            )));
        }
        if self.train.dim() != self.dev.dim() {
            return Err(Error::Dimension {
                expected: self.train.dim(),
                got: self.dev.dim(),
            });
        }
        if self.train.table().is_some()
            && !std::ptr::eq(self.train, self.dev)
            && self.train != self.dev
        {
            return Err(Error::InvalidArgument(
                "lookup providers must be shared between train and dev".into(),
            ));
        }
        Ok(())
    }
}

/// Serializable form of a provider, stored in model checkpoints. External
/// vectors are corpus-specific and are supplied again at decode time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderState {
    Lookup { table: LookupTable },
    CharNgram { ngram: CharNgram },
    External { dim: usize },
}

impl EmbeddingProvider {
    pub fn state(&self) -> ProviderState {
        match self {
            EmbeddingProvider::Lookup(t) => ProviderState::Lookup { table: t.clone() },
            EmbeddingProvider::CharNgram(c) => ProviderState::CharNgram { ngram: c.clone() },
            EmbeddingProvider::External(e) => ProviderState::External { dim: e.dim },
        }
    }

    /// Rebuilds a provider; external state needs the vectors of the corpus
    /// being processed.
    pub fn from_state(state: &ProviderState, external: Option<ExternalVectors>) -> Result<Self> {
        match (state, external) {
            (ProviderState::Lookup { table }, None) => Ok(EmbeddingProvider::Lookup(table.clone())),
            (ProviderState::CharNgram { ngram }, None) => {
                Ok(EmbeddingProvider::CharNgram(ngram.clone()))
            }
            (ProviderState::External { dim }, Some(ext)) => {
                if ext.dim != *dim {
                    return Err(Error::Dimension {
                        expected: *dim,
                        got: ext.dim,
                    });
                }
                Ok(EmbeddingProvider::External(ext))
            }
            (ProviderState::External { .. }, None) => Err(Error::InvalidArgument(
                "model was trained on external vectors; supply a vector file".into(),
            )),
            (_, Some(_)) => Err(Error::InvalidArgument(
                "external vectors given for a model with a built-in provider".into(),
            )),
        }
    }
}

/// Consecutive non-overlapping chunk boundaries `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChunkPlan {
    pub n_tokens: usize,
    pub chunks: Vec<(usize, usize)>,
}

pub fn plan_chunks(n_tokens: usize, chunk_size: usize) -> Result<ChunkPlan> {
    if chunk_size == 0 {
        return Err(Error::InvalidArgument(
            "chunk size must be at least 1".into(),
        ));
    }
    let chunks = (0..n_tokens)
        .step_by(chunk_size)
        .map(|start| (start, (start + chunk_size).min(n_tokens)))
        .collect();
    Ok(ChunkPlan { n_tokens, chunks })
}

/// Componentwise mean of subword vectors.
pub fn pool_subwords(units: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = units
        .first()
        .ok_or_else(|| Error::InvalidArgument("no subword vectors to pool".into()))?;
    let dim = first.len();
    let mut acc = vec![0.0; dim];
    for u in units {
        if u.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: u.len(),
            });
        }
        acc.iter_mut().zip(u).for_each(|(a, x)| *a += x);
    }
    let k = units.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    Ok(acc)
}

/// Pools a flat sequence of subword vectors into word vectors, given how
/// many units each word was split into.
pub fn pool_words(units: &[Vec<f64>], units_per_word: &[usize]) -> Result<Vec<Vec<f64>>> {
    let total: usize = units_per_word.iter().sum();
    if total != units.len() {
        return Err(Error::Dimension {
            expected: total,
            got: units.len(),
        });
    }
    let mut out = Vec::with_capacity(units_per_word.len());
    let mut start = 0;
    for &k in units_per_word {
        out.push(pool_subwords(&units[start..start + k])?);
        start += k;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn utt(words: &[&str]) -> Utterance {
        Utterance::from_words("rec", words).unwrap()
    }

    #[test]
    fn lookup_returns_stored_row() {
        let table = LookupTable::from_corpus(&[utt(&["chat", "chien"])], 8, 1);
        let p = EmbeddingProvider::Lookup(table.clone());
        let v = p.embed_tokens(&utt(&["chien", "zèbre"])).unwrap();
        assert_eq!(v[0], table.table.row(table.row_of("chien")));
        assert_eq!(v[1], table.table.row(0));
    }

    #[test]
    fn ngrams_of_abc() {
        assert_eq!(char_ngrams("abc", 3, 3), vec!["<ab", "abc", "bc>"]);
    }

    #[test]
    fn char_ngram_mean() {
        let c = CharNgram {
            dim: 4,
            config: NgramConfig {
                min_n: 3,
                max_n: 3,
                ..Default::default()
            },
            known: None,
        };
        let grams = ["<ab", "abc", "bc>"];
        let mut expected = vec![0.0; 4];
        for g in grams {
            for (e, v) in expected.iter_mut().zip(c.bucket_vector(c.bucket(g))) {
                *e += v / 3.0;
            }
        }
        let got = c.vector("abc");
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(c.vector("abc"), got);
    }

    #[test]
    fn external_positional() {
        let text = "2 3\nle 1 2 3\n_ 4 5 6\n";
        let ext = ExternalVectors::parse(Cursor::new(text)).unwrap();
        let p = EmbeddingProvider::External(ext);
        let v = p.embed_tokens(&utt(&["le", "chat"])).unwrap();
        assert_eq!(v[1], vec![4.0, 5.0, 6.0]);
        match p.embed_tokens(&utt(&["le"])) {
            Err(Error::Alignment { recording, .. }) => assert_eq!(recording, "rec"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(p.embed_tokens(&utt(&["la", "chat"])).is_err());
    }

    #[test]
    fn external_corpus_positions() {
        let text = "3 1\na 1\nb 2\nc 3\n";
        let p = EmbeddingProvider::External(ExternalVectors::parse(Cursor::new(text)).unwrap());
        let v = p.embed_corpus(&[utt(&["a", "b"]), utt(&["c"])]).unwrap();
        assert_eq!(v[1][0], vec![3.0]);
        assert!(p.embed_corpus(&[utt(&["a", "b"])]).is_err());
    }

    #[test]
    fn chunk_plans() {
        let p = plan_chunks(1030, 512).unwrap();
        assert_eq!(p.chunks, vec![(0, 512), (512, 1024), (1024, 1030)]);
        assert!(plan_chunks(0, 512).unwrap().chunks.is_empty());
        assert!(plan_chunks(5, 0).is_err());
    }

    #[test]
    fn pooling() {
        let v = vec![1.0, -2.0];
        assert_eq!(pool_subwords(&[v.clone()]).unwrap(), v);
        assert_eq!(
            pool_subwords(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap(),
            vec![1.0, 1.0]
        );
        assert_eq!(
            pool_subwords(&[v.clone(), v.clone(), v.clone()]).unwrap(),
            v
        );
        assert!(pool_subwords(&[]).is_err());
        let words = pool_words(&[vec![0.0], vec![2.0], vec![5.0]], &[2, 1]).unwrap();
        assert_eq!(words, vec![vec![1.0], vec![5.0]]);
    }
}
