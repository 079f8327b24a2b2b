//! Small deterministic corpora for smoke runs and tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DepTree, LabeledDocument, SluSample, Utterance};
use crate::error::Result;
use crate::normalize::DiarizationTurn;

const DETS: [&str; 6] = ["le", "la", "un", "une", "ce", "mon"];
const NOUNS: [&str; 20] = [
    "chat", "chien", "enfant", "voisin", "livre", "pain", "train", "film", "jardin", "maison",
    "femme", "homme", "oiseau", "repas", "journal", "ami", "camion", "gâteau", "village", "piano",
];
const VERBS: [&str; 14] = [
    "voit", "mange", "prend", "aime", "cherche", "regarde", "lit", "porte", "trouve", "garde",
    "dort", "arrive", "parle", "attend",
];

pub const TOY_POS: [&str; 3] = ["DET", "NOUN", "VERB"];
pub const TOY_LABELS: [&str; 4] = ["det", "subj", "obj", "root"];

/// Sentences `DET NOUN VERB (DET NOUN)?`: determiners attach to the next
/// noun, the first noun is the verb's subject, the second its object.
pub fn parser_corpus(n: usize, seed: u64) -> Result<Vec<DepTree>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let transitive = rng.gen_bool(0.6);
            let mut words = vec![
                *DETS.choose(&mut rng).unwrap(),
                *NOUNS.choose(&mut rng).unwrap(),
                *VERBS.choose(&mut rng).unwrap(),
            ];
            let mut heads = vec![2, 3, 0];
            let mut labels = vec!["det", "subj", "root"];
            let mut pos = vec!["DET", "NOUN", "VERB"];
            if transitive {
                words.push(DETS.choose(&mut rng).unwrap());
                words.push(NOUNS.choose(&mut rng).unwrap());
                heads.extend([5, 3]);
                labels.extend(["det", "obj"]);
                pos.extend(["DET", "NOUN"]);
            }
            let utt = Utterance::from_words(format!("toy-{:04}", k + 1), &words)?;
            DepTree::new(
                utt,
                heads,
                labels.into_iter().map(String::from).collect(),
                pos.into_iter().map(String::from).collect(),
            )
        })
        .collect()
}

const CITIES: [&str; 6] = ["paris", "lyon", "nice", "lille", "nantes", "brest"];
const NUMBERS: [&str; 4] = ["one", "two", "three", "four"];
const ROOM_TYPES: [&str; 3] = ["single", "double", "twin"];
const DAYS: [&str; 7] = [
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "saturday",
    "sunday",
];
const COMMANDS: [&[&str]; 3] = [
    &["i", "would", "like", "to", "book"],
    &["i", "want", "to", "reserve"],
    &["book"],
];
const FILLERS: [&str; 4] = ["uh", "please", "well", "hum"];

pub const TOY_CONCEPTS: [&str; 5] = ["cmd-task", "nb-room", "room-type", "loc-city", "time-date"];

/// Value rules matching [`slu_corpus`].
pub const TOY_RULES: &str = r#"{
  "cmd-task": [{"pattern": ".*(book|reserve)", "value": "booking"}],
  "nb-room": [
    {"pattern": "one", "value": "1"},
    {"pattern": "two", "value": "2"},
    {"pattern": "three", "value": "3"},
    {"pattern": "four", "value": "4"}
  ],
  "room-type": [{"pattern": "(single|double|twin) rooms?", "value": "$1"}]
}
"#;

/// Templated hotel-booking requests with BIO concept tags.
pub fn slu_corpus(n: usize, seed: u64) -> Result<Vec<SluSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let mut words: Vec<String> = Vec::new();
            let mut tags: Vec<String> = Vec::new();
            let mut push = |ws: &[&str], concept: Option<&str>| {
                for (i, w) in ws.iter().enumerate() {
                    words.push(w.to_string());
                    tags.push(match concept {
                        None => "O".to_string(),
                        Some(c) if i == 0 => format!("B-{c}"),
                        Some(c) => format!("I-{c}"),
                    });
                }
            };
            if rng.gen_bool(0.3) {
                push(&[FILLERS.choose(&mut rng).unwrap()], None);
            }
            push(COMMANDS.choose(&mut rng).unwrap(), Some("cmd-task"));
            let number = *NUMBERS.choose(&mut rng).unwrap();
            push(&[number], Some("nb-room"));
            let kind = ROOM_TYPES.choose(&mut rng).unwrap();
            let room = if number == "one" { "room" } else { "rooms" };
            push(&[kind, room], Some("room-type"));
            if rng.gen_bool(0.8) {
                push(&["in"], None);
                push(&[CITIES.choose(&mut rng).unwrap()], Some("loc-city"));
            }
            if rng.gen_bool(0.6) {
                push(&["for"], None);
                push(&[DAYS.choose(&mut rng).unwrap()], Some("time-date"));
            }
            if rng.gen_bool(0.3) {
                push(&[FILLERS.choose(&mut rng).unwrap()], None);
            }
            Ok(SluSample {
                utterance: Utterance::from_words(format!("slu-{:04}", k + 1), &words)?,
                bio_tags: tags,
            })
        })
        .collect()
}

const TOPICS: [(&str, &[&str]); 3] = [
    (
        "sport",
        &[
            "match",
            "équipe",
            "but",
            "joueur",
            "stade",
            "victoire",
            "entraîneur",
            "championnat",
            "score",
            "coupe",
        ],
    ),
    (
        "politique",
        &[
            "ministre",
            "élection",
            "député",
            "gouvernement",
            "loi",
            "vote",
            "parti",
            "réforme",
            "sénat",
            "président",
        ],
    ),
    (
        "météo",
        &[
            "pluie",
            "soleil",
            "nuage",
            "orage",
            "température",
            "vent",
            "neige",
            "prévision",
            "degré",
            "averse",
        ],
    ),
];
const SHARED: [&str; 16] = [
    "le",
    "de",
    "et",
    "un",
    "aujourd'hui",
    "demain",
    "pays",
    "ville",
    "journal",
    "soir",
    "matin",
    "semaine",
    "grand",
    "nouveau",
    "français",
    "région",
];

/// Short news transcripts over three unevenly sized categories.
pub fn classif_corpus(n: usize, seed: u64) -> Vec<LabeledDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = [0.5, 0.3, 0.2];
    (0..n)
        .map(|k| {
            let r: f64 = rng.gen();
            let class = if r < weights[0] {
                0
            } else if r < weights[0] + weights[1] {
                1
            } else {
                2
            };
            let (name, vocab) = TOPICS[class];
            let len = rng.gen_range(15..30);
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.4) {
                        *vocab.choose(&mut rng).unwrap()
                    } else {
                        *SHARED.choose(&mut rng).unwrap()
                    }
                })
                .collect();
            LabeledDocument {
                id: format!("doc-{:04}", k + 1),
                text: words.join(" "),
                category: name.to_string(),
                channel: Some(["tv1", "tv2"][k % 2].to_string()),
                date: None,
            }
        })
        .collect()
}

/// Raw diarization turns with casing, punctuation, empty turns, repeats and
/// masked names.
pub fn diarization_turns(n_recordings: usize, seed: u64) -> Vec<DiarizationTurn> {
    let lines = [
        "Bonjour, et bienvenue !",
        "Alors, <pers> m'a dit qu'il viendrait demain.",
        "Oui, oui.",
        "",
        "Vous êtes sûr ? C'est l'histoire de <pers> et <pers>…",
        "Euh... non, je ne sais pas.",
        "Merci beaucoup.",
        "Le chat dort dans le jardin.",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for r in 0..n_recordings {
        let mut t = 0.0;
        for s in 0..6 {
            let dur = rng.gen_range(1.0..6.0f64);
            out.push(DiarizationTurn {
                recording_id: format!("rec{:02}", r + 1),
                speaker_id: format!("spk{}", s % 2 + 1),
                start: t,
                end: t + dur,
                text: lines.choose(&mut rng).unwrap().to_string(),
            });
            t += dur;
        }
    }
    out
}

pub const TOY_NAMES: [&str; 8] = [
    "amandine",
    "bertrand",
    "capucine",
    "dorothée",
    "évariste",
    "fulbert",
    "gontran",
    "hortense",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parser_corpus_is_valid_and_deterministic() {
        let a = parser_corpus(50, 3).unwrap();
        assert_eq!(a, parser_corpus(50, 3).unwrap());
        assert!(a.iter().all(|t| t.validate().is_ok()));
        assert!(a.iter().any(|t| t.len() == 5) && a.iter().any(|t| t.len() == 3));
    }

    #[test]
    fn slu_corpus_is_valid() {
        let s = slu_corpus(100, 1).unwrap();
        assert!(s.iter().all(|x| x.validate().is_ok()));
        assert_eq!(crate::slu::corpus_concepts(&s), {
            let mut c: Vec<String> = TOY_CONCEPTS.iter().map(|s| s.to_string()).collect();
            c.sort();
            c
        });
        crate::slu::ValueRules::parse(TOY_RULES).unwrap();
    }

    #[test]
    fn classif_corpus_has_three_classes() {
        let docs = classif_corpus(600, 1);
        let mut cats: Vec<&str> = docs.iter().map(|d| d.category.as_str()).collect();
        cats.sort();
        cats.dedup();
        assert_eq!(cats.len(), 3);
    }
}
