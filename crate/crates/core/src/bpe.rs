//! Character-level byte-pair encoding with an end-of-word marker.
//!
//! Training greedily merges the most frequent adjacent symbol pair over the
//! word-frequency table; ties go to the lexicographically smallest pair.
//! Encoding applies merges by training rank.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const END_MARKER: &str = "</w>";
pub const DESK_VOCAB: usize = 2_000;
pub const FULL_VOCAB: usize = 50_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    vocab: BTreeSet<String>,
    end_marker: String,
    ranks: HashMap<(String, String), usize>,
}

/// Splits a word into base symbols, the last one carrying the end marker.
fn base_symbols(word: &str, end_marker: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i + 1 == chars.len() {
                format!("{c}{end_marker}")
            } else {
                c.to_string()
            }
        })
        .collect()
}

fn merge_pair(symbols: &[String], left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
            out.push(format!("{left}{right}"));
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

impl BpeModel {
    fn from_parts(
        merges: Vec<(String, String)>,
        vocab: BTreeSet<String>,
        end_marker: String,
    ) -> Self {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        BpeModel {
            merges,
            vocab,
            end_marker,
            ranks,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn end_marker(&self) -> &str {
        &self.end_marker
    }

    /// Trains on whitespace-separated words of `corpus` until the vocabulary
    /// holds `target_vocab` units or no pair occurs at least twice.
    pub fn train<S: AsRef<str>>(corpus: &[S], target_vocab: usize) -> Result<Self> {
        let mut freqs: BTreeMap<&str, usize> = BTreeMap::new();
        for line in corpus {
            for w in line.as_ref().split_whitespace() {
                *freqs.entry(w).or_default() += 1;
            }
        }
        if freqs.is_empty() {
            return Err(Error::InvalidArgument(
                "BPE training corpus is empty".into(),
            ));
        }
        let mut words: Vec<(Vec<String>, usize)> = freqs
            .iter()
            .map(|(w, &f)| (base_symbols(w, END_MARKER), f))
            .collect();
        let mut vocab: BTreeSet<String> =
            words.iter().flat_map(|(s, _)| s.iter().cloned()).collect();
        if target_vocab < vocab.len() {
            return Err(Error::InvalidArgument(format!(
                "target vocabulary {target_vocab} is smaller than the {} base symbols",
                vocab.len()
            )));
        }
        let mut merges = Vec::new();
        while vocab.len() < target_vocab {
            let mut counts: HashMap<(&str, &str), usize> = HashMap::new();
            for (syms, f) in &words {
                for pair in syms.windows(2) {
                    *counts
                        .entry((pair[0].as_str(), pair[1].as_str()))
                        .or_default() += f;
                }
            }
            let best = counts
                .into_iter()
                .filter(|(_, c)| *c >= 2)
                .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)));
            let Some(((l, r), _)) = best else { break };
            let (l, r) = (l.to_string(), r.to_string());
            for (syms, _) in &mut words {
                if syms.windows(2).any(|p| p[0] == l && p[1] == r) {
                    *syms = merge_pair(syms, &l, &r);
                }
            }
            vocab.insert(format!("{l}{r}"));
            merges.push((l, r));
        }
        Ok(Self::from_parts(merges, vocab, END_MARKER.to_string()))
    }

    /// Segments a word by repeatedly merging the lowest-rank adjacent pair.
    pub fn encode(&self, word: &str) -> Vec<String> {
        if word.is_empty() {
            return Vec::new();
        }
        let mut syms = base_symbols(word, &self.end_marker);
        loop {
            let best = syms
                .windows(2)
                .filter_map(|p| self.ranks.get(&(p[0].clone(), p[1].clone())))
                .min()
                .copied();
            let Some(rank) = best else { break };
            let (l, r) = &self.merges[rank];
            syms = merge_pair(&syms, l, r);
        }
        syms
    }

    /// Concatenates units and strips the end marker.
    pub fn decode(&self, units: &[String]) -> String {
        let joined: String = units.concat();
        joined
            .strip_suffix(self.end_marker.as_str())
            .map(str::to_string)
            .unwrap_or(joined)
    }

    /// Encodes every word of a line, space-separating the units.
    pub fn encode_line(&self, line: &str) -> Vec<Vec<String>> {
        line.split_whitespace().map(|w| self.encode(w)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "bpe v1 {} {}", self.merges.len(), self.end_marker).map_err(io)?;
        for (l, r) in &self.merges {
            writeln!(w, "{l} {r}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Loads a merge file. Without a vocabulary dump the vocabulary is the
    /// set of symbols mentioned by the merges and their results.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })?
            .map_err(|e| Error::io(path, e))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.len() != 4 || fields[0] != "bpe" || fields[1] != "v1" {
            return Err(Error::Parse {
                line: 1,
                message: format!("bad header {header:?}"),
            });
        }
        let n: usize = fields[2].parse().map_err(|_| Error::Parse {
            line: 1,
            message: "bad merge count".into(),
        })?;
        let end_marker = fields[3].to_string();
        let mut merges = Vec::with_capacity(n);
        let mut vocab = BTreeSet::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (l, r) = line.split_once(' ').ok_or(Error::Parse {
                line: i + 2,
                message: "expected \"left right\"".into(),
            })?;
            vocab.insert(l.to_string());
            vocab.insert(r.to_string());
            vocab.insert(format!("{l}{r}"));
            merges.push((l.to_string(), r.to_string()));
        }
        if merges.len() != n {
            return Err(Error::Parse {
                line: 1,
                message: format!("header announces {n} merges, found {}", merges.len()),
            });
        }
        Ok(Self::from_parts(merges, vocab, end_marker))
    }

    pub fn save_vocab(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for unit in &self.vocab {
            writeln!(w, "{unit}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Replaces the derived vocabulary with a dumped one.
    pub fn with_vocab_file(mut self, path: &Path) -> Result<Self> {
        self.vocab = load_vocab(path)?;
        Ok(self)
    }
}

pub fn load_vocab(path: &Path) -> Result<BTreeSet<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut vocab = BTreeSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.is_empty() {
            vocab.insert(line);
        }
    }
    Ok(vocab)
}

/// Shared-unit statistics between two tokenizer vocabularies, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Overlap {
    pub shared: usize,
    /// 100 |A∩B| / |A|
    pub over_first: f64,
    /// 100 |A∩B| / |B|
    pub over_second: f64,
    /// 100 |A∩B| / |A∪B|
    pub over_union: f64,
}

/// Percentage of the first vocabulary shared with the second. Asymmetric
/// unless both have the same size.
pub fn vocab_overlap(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Result<f64> {
    Ok(overlap_report(a, b)?.over_first)
}

pub fn overlap_report(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Result<Overlap> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empty vocabulary".into()));
    }
    let shared = a.intersection(b).count();
    let union = a.len() + b.len() - shared;
    Ok(Overlap {
        shared,
        over_first: 100.0 * shared as f64 / a.len() as f64,
        over_second: 100.0 * shared as f64 / b.len() as f64,
        over_union: 100.0 * shared as f64 / union as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn first_merge_is_aa() {
        let m = BpeModel::train(&["aaab aaab aab"], 100).unwrap();
        assert_eq!(m.merges()[0], ("a".to_string(), "a".to_string()));
        assert!(m.vocab().contains("aa"));
    }

    #[test]
    fn zero_merges_at_base_size() {
        // base symbols: a, b</w>
        let m = BpeModel::train(&["aaab aaab aab"], 2).unwrap();
        assert!(m.merges().is_empty());
        assert_eq!(m.encode("aab"), vec!["a", "a", "b</w>"]);
        assert!(BpeModel::train(&["aaab"], 1).is_err());
    }

    #[test]
    fn empty_corpus_is_error() {
        assert!(BpeModel::train::<&str>(&[], 10).is_err());
        assert!(BpeModel::train(&["   "], 10).is_err());
    }

    #[test]
    fn seen_word_is_single_unit() {
        let m = BpeModel::train(&["chat chat chat chien"], 100).unwrap();
        assert_eq!(m.encode("chat"), vec!["chat</w>"]);
    }

    #[test]
    fn unseen_characters_pass_through() {
        let m = BpeModel::train(&["aa aa"], 100).unwrap();
        assert_eq!(m.encode("xyz"), vec!["x", "y", "z</w>"]);
        assert_eq!(m.decode(&m.encode("xyz")), "xyz");
    }

    #[test]
    fn tie_break_is_lexicographic() {
        // ("a","b</w>") and ("c","d</w>") both occur twice
        let m = BpeModel::train(&["ab cd ab cd"], 100).unwrap();
        assert_eq!(m.merges()[0], ("a".to_string(), "b</w>".to_string()));
    }

    #[test]
    fn overlap_examples() {
        let a = set(&["a", "b", "c", "d"]);
        assert_eq!(vocab_overlap(&a, &a).unwrap(), 100.0);
        assert_eq!(
            vocab_overlap(&a, &set(&["c", "d", "e", "f"])).unwrap(),
            50.0
        );
        assert_eq!(vocab_overlap(&a, &set(&["x"])).unwrap(), 0.0);
        let r = overlap_report(&a, &set(&["c", "d"])).unwrap();
        assert_eq!((r.over_first, r.over_second), (50.0, 100.0));
        assert!(vocab_overlap(&a, &BTreeSet::new()).is_err());
    }
}
