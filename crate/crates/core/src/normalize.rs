//! ASR-style text conditions: lowercase, no punctuation, speaker turns as
//! pseudo-sentences, proper-name deanonymization and the repunctuation
//! contrast.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::corpus::{read_jsonl, Token, Utterance};
use crate::error::{Error, Result};

pub const DEFAULT_PLACEHOLDER: &str = "<pers>";

const EXTRA_PUNCTUATION: [char; 4] = ['«', '»', '—', '…'];

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_punctuation(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
        || EXTRA_PUNCTUATION.contains(&c)
}

fn kept_letter(c: char) -> bool {
    c.is_alphabetic() && !c.is_uppercase() && !is_punctuation(c)
}

/// Lowercases, replaces punctuation by spaces and collapses whitespace.
/// Apostrophes between two letters are kept (French elision).
pub fn normalize_text(raw: &str) -> String {
    // Characters that stay uppercase after lowercasing have no lowercase
    // form; they are dropped like punctuation.
    let lowered: Vec<char> = raw.chars().flat_map(char::to_lowercase).collect();
    let mut out = String::with_capacity(lowered.len());
    for (i, &c) in lowered.iter().enumerate() {
        let keep = if is_apostrophe(c) {
            let before = i > 0 && kept_letter(lowered[i - 1]);
            let after = lowered.get(i + 1).is_some_and(|&n| kept_letter(n));
            before && after
        } else {
            !is_punctuation(c) && !c.is_uppercase()
        };
        out.push(if keep { c } else { ' ' });
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A diarization speech turn from the ASR system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiarizationTurn {
    pub recording_id: String,
    #[serde(alias = "speaker")]
    pub speaker_id: String,
    pub start: f64,
    pub end: f64,
    #[serde(alias = "raw_text")]
    pub text: String,
}

pub fn read_turns(path: &Path) -> Result<Vec<DiarizationTurn>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let turns: Vec<DiarizationTurn> = read_jsonl(BufReader::new(file))?;
    for t in &turns {
        if t.start > t.end {
            return Err(Error::InvalidData(format!(
                "turn in {} starts after it ends ({} > {})",
                t.recording_id, t.start, t.end
            )));
        }
    }
    Ok(turns)
}

/// Counts reported by [`segment_turns`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SegmentStats {
    pub turns: usize,
    pub empty: usize,
    pub duplicates: usize,
    pub utterances: usize,
}

/// Turns each non-empty normalized speech turn into an utterance and drops
/// turns whose normalized text was already seen anywhere in the input.
pub fn segment_turns(turns: &[DiarizationTurn]) -> (Vec<Utterance>, SegmentStats) {
    let mut seen = HashSet::new();
    let mut stats = SegmentStats {
        turns: turns.len(),
        ..Default::default()
    };
    let mut out = Vec::new();
    for turn in turns {
        let text = normalize_text(&turn.text);
        if text.is_empty() {
            stats.empty += 1;
            continue;
        }
        if !seen.insert(text.clone()) {
            stats.duplicates += 1;
            continue;
        }
        let tokens = text
            .split(' ')
            .enumerate()
            .map(|(i, w)| Token::new(w, i + 1))
            .collect();
        out.push(Utterance {
            tokens,
            recording_id: turn.recording_id.clone(),
            speaker_id: Some(turn.speaker_id.clone()),
            time_span: Some((turn.start, turn.end)),
        });
    }
    stats.utterances = out.len();
    (out, stats)
}

/// Ordered list of distinct replacement names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NameInventory {
    names: Vec<String>,
}

impl NameInventory {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            if normalize_text(n) != n || n.contains(' ') || n.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "replacement name {n:?} is not a normalized single token"
                )));
            }
            if !seen.insert(n.to_string()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate replacement name {n:?}"
                )));
            }
            out.push(n.to_string());
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("empty name inventory".into()));
        }
        Ok(NameInventory { names: out })
    }

    /// One name per non-empty line.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut names = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if !line.is_empty() {
                names.push(line.to_string());
            }
        }
        Self::new(&names)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

fn recording_seed(seed: u64, recording: &str) -> u64 {
    // FNV-1a over the recording id, mixed with the user seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in recording.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Replaces every `placeholder` token by a name. Each placeholder occurrence
/// in a recording is its own slot; slots of a recording get pairwise
/// distinct names drawn from a permutation seeded by `(seed, recording_id)`.
pub fn deanonymize(
    utts: &[Utterance],
    placeholder: &str,
    names: &NameInventory,
    seed: u64,
) -> Result<Vec<Utterance>> {
    let mut slots: BTreeMap<&str, usize> = BTreeMap::new();
    for u in utts {
        let n = u.tokens.iter().filter(|t| t.surface == placeholder).count();
        *slots.entry(u.recording_id.as_str()).or_default() += n;
    }
    let mut assignments: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (&rec, &count) in &slots {
        if count == 0 {
            continue;
        }
        if count > names.names.len() {
            return Err(Error::NameInventory {
                recording: rec.to_string(),
                slots: count,
                names: names.names.len(),
            });
        }
        let mut perm: Vec<&str> = names.names.iter().map(String::as_str).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(recording_seed(seed, rec)));
        perm.truncate(count);
        assignments.insert(rec, perm);
    }
    let mut next: BTreeMap<String, usize> = BTreeMap::new();
    let out = utts
        .iter()
        .map(|u| {
            let mut u = u.clone();
            for tok in &mut u.tokens {
                if tok.surface == placeholder {
                    let k = next.entry(u.recording_id.clone()).or_default();
                    tok.surface = assignments[u.recording_id.as_str()][*k].to_string();
                    *k += 1;
                }
            }
            u
        })
        .collect();
    Ok(out)
}

/// Appends a synthetic "." token to each utterance.
pub fn repunctuate(utts: &[Utterance]) -> Vec<Utterance> {
    utts.iter()
        .map(|u| {
            let mut u = u.clone();
            let index = u.tokens.len() + 1;
            u.tokens.push(Token {
                surface: ".".into(),
                index,
                oov: None,
                synthetic: true,
            });
            u
        })
        .collect()
}

/// Removes synthetic tokens, undoing [`repunctuate`].
pub fn strip_synthetic(utts: &[Utterance]) -> Vec<Utterance> {
    utts.iter()
        .map(|u| {
            let mut u = u.clone();
            u.tokens.retain(|t| !t.synthetic);
            for (i, t) in u.tokens.iter_mut().enumerate() {
                t.index = i + 1;
            }
            u
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn turn(rec: &str, text: &str) -> DiarizationTurn {
        DiarizationTurn {
            recording_id: rec.into(),
            speaker_id: "s1".into(),
            start: 0.0,
            end: 1.0,
            text: text.into(),
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_text("Bonjour, Paris !"), "bonjour paris");
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("L'homme d’Orléans"), "l'homme d’orléans");
        assert_eq!(normalize_text("« Oui » … 'non'"), "oui non");
        assert_eq!(normalize_text("fin.Début"), "fin début");
        assert_eq!(normalize_text("  a \t\n b  "), "a b");
    }

    #[test]
    fn segment_drops_empty_and_duplicates() {
        let (utts, stats) = segment_turns(&[
            turn("r", "Oui, oui."),
            turn("r", "..."),
            turn("r", "bonjour"),
        ]);
        assert_eq!(utts.len(), 2);
        assert_eq!(utts[0].surfaces(), vec!["oui", "oui"]);
        assert_eq!(stats.empty, 1);

        let (utts, stats) = segment_turns(&[turn("a", "Bonjour !"), turn("b", "bonjour")]);
        assert_eq!(utts.len(), 1);
        assert_eq!(stats.duplicates, 1);
    }

    #[test]
    fn deanonymize_distinct_and_deterministic() {
        let names = NameInventory::new(&["anne", "bruno", "chloé", "david", "émile"]).unwrap();
        let utts = vec![Utterance::from_words("rec", &["<pers>", "parle", "à", "<pers>"]).unwrap()];
        let a = deanonymize(&utts, DEFAULT_PLACEHOLDER, &names, 1).unwrap();
        let b = deanonymize(&utts, DEFAULT_PLACEHOLDER, &names, 1).unwrap();
        assert_eq!(a, b);
        let (x, y) = (&a[0].tokens[0].surface, &a[0].tokens[3].surface);
        assert_ne!(x, y);
        assert!(names.names().contains(x) && names.names().contains(y));
    }

    #[test]
    fn deanonymize_without_placeholders_is_identity() {
        let names = NameInventory::new(&["anne"]).unwrap();
        let utts = vec![Utterance::from_words("rec", &["bonjour"]).unwrap()];
        assert_eq!(
            deanonymize(&utts, DEFAULT_PLACEHOLDER, &names, 9).unwrap(),
            utts
        );
    }

    #[test]
    fn deanonymize_too_many_slots() {
        let names = NameInventory::new(&["anne"]).unwrap();
        let utts = vec![Utterance::from_words("rec7", &["<pers>", "<pers>"]).unwrap()];
        match deanonymize(&utts, DEFAULT_PLACEHOLDER, &names, 0) {
            Err(Error::NameInventory { recording, .. }) => assert_eq!(recording, "rec7"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn name_inventory_validation() {
        assert!(NameInventory::new(&["Anne"]).is_err());
        assert!(NameInventory::new(&["anne", "anne"]).is_err());
        assert!(NameInventory::new::<&str>(&[]).is_err());
    }

    #[test]
    fn repunctuate_appends_synthetic_period() {
        let utts = vec![Utterance::from_words("r", &["bonjour"]).unwrap()];
        let rp = repunctuate(&utts);
        assert_eq!(rp[0].surfaces(), vec!["bonjour", "."]);
        assert!(rp[0].tokens[1].synthetic);
        assert!(repunctuate(&[]).is_empty());
        assert_eq!(strip_synthetic(&rp), utts);
    }
}
