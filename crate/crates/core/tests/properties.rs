use std::collections::{BTreeMap, HashSet};

use oralkit::corpus::{
    find_cycle, format_conllu, parse_conllu, stratified_split, DepTree, Part, Utterance,
};
use oralkit::metrics::{align_error_rate, weighted_f1};
use oralkit::normalize::{normalize_text, repunctuate, strip_synthetic};
use oralkit::slu::{bio_decode, bio_encode, repair_bio};
use proptest::prelude::*;

/// Brute force: follow heads for at most n steps from every token.
fn has_cycle(heads: &[usize]) -> bool {
    let n = heads.len();
    (1..=n).any(|start| {
        let mut cur = start;
        for _ in 0..=n {
            if cur == 0 {
                return false;
            }
            cur = heads[cur - 1];
        }
        true
    })
}

fn word() -> impl Strategy<Value = String> {
    "[a-zé]{1,6}"
}

proptest! {
    #[test]
    fn normalize_is_idempotent(raw in "\\PC{0,40}") {
        let once = normalize_text(&raw);
        prop_assert_eq!(normalize_text(&once), once.clone());
        prop_assert!(!once.starts_with(' ') && !once.ends_with(' ') && !once.contains("  "));
    }

    #[test]
    fn cycle_detection_matches_brute_force(heads in (1usize..8).prop_flat_map(|n| prop::collection::vec(0..=n, n))) {
        let n = heads.len();
        let self_loop = heads.iter().enumerate().any(|(i, &h)| h == i + 1);
        let found = find_cycle(&heads);
        prop_assert_eq!(found.is_some(), has_cycle(&heads) || self_loop);
        if let Some(t) = found {
            prop_assert!((1..=n).contains(&t));
        }
    }

    #[test]
    fn conllu_round_trip(words in prop::collection::vec(word(), 1..8), seed in any::<u64>()) {
        // a chain rooted at a random token is always a valid tree
        let n = words.len();
        let root = (seed as usize) % n + 1;
        let heads: Vec<usize> = (1..=n)
            .map(|i| if i == root { 0 } else if i < root { i + 1 } else { i - 1 })
            .collect();
        let labels = (1..=n).map(|i| if i == root { "root".to_string() } else { "dep".to_string() }).collect();
        let pos = vec!["X".to_string(); n];
        let tree = DepTree::new(Utterance::from_words("rec", &words).unwrap(), heads, labels, pos).unwrap();
        let mut buf = Vec::new();
        format_conllu(std::slice::from_ref(&tree), &mut buf).unwrap();
        let back = parse_conllu(&buf[..], "rec").unwrap();
        prop_assert_eq!(back, vec![tree]);
    }

    #[test]
    fn bio_repair_yields_decodable_tags(
        raw in prop::collection::vec(prop::sample::select(vec!["O", "B-a", "I-a", "B-b", "I-b"]), 0..12)
    ) {
        let (tags, _) = repair_bio(&raw).unwrap();
        let words: Vec<String> = (0..tags.len()).map(|i| format!("w{i}")).collect();
        let spans = bio_decode(&tags, &words).unwrap();
        prop_assert_eq!(bio_encode(&spans, tags.len()).unwrap(), tags.clone());
        let (again, fixes) = repair_bio(&tags).unwrap();
        prop_assert_eq!(again, tags);
        prop_assert_eq!(fixes, 0);
    }

    #[test]
    fn split_is_a_partition_with_stratum_ratios(
        strata in prop::collection::vec(0u8..4, 1..200),
        seed in any::<u64>()
    ) {
        let items: Vec<(String, String)> = strata
            .iter()
            .enumerate()
            .map(|(k, s)| (format!("{k:04}"), format!("s{s}")))
            .collect();
        let spec = stratified_split(&items, (0.8, 0.1, 0.1), seed).unwrap();
        prop_assert_eq!(spec.parts.len(), items.len());
        prop_assert_eq!(&spec, &stratified_split(&items, (0.8, 0.1, 0.1), seed).unwrap());
        let mut per: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
        for (id, s) in &items {
            per.entry(s.as_str()).or_default()[spec.parts[id] as usize] += 1;
        }
        for counts in per.values() {
            let total: usize = counts.iter().sum();
            for (c, r) in counts.iter().zip([0.8, 0.1, 0.1]) {
                prop_assert!((*c as f64 - r * total as f64).abs() < 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn weighted_f1_is_invariant_to_relabelling(
        pairs in prop::collection::vec((0u8..4, 0u8..4), 1..40)
    ) {
        let gold: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        let perm = |x: &u8| [2u8, 3, 0, 1][*x as usize] + 10;
        let a = weighted_f1(&gold, &pred).unwrap();
        let b = weighted_f1(
            &gold.iter().map(perm).collect::<Vec<_>>(),
            &pred.iter().map(perm).collect::<Vec<_>>(),
        ).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn alignment_is_bounded_and_symmetric(
        r in prop::collection::vec(0u8..3, 0..10),
        h in prop::collection::vec(0u8..3, 0..10)
    ) {
        let a = align_error_rate(&r, &h);
        let b = align_error_rate(&h, &r);
        prop_assert_eq!(a.errors(), b.errors());
        prop_assert!(a.errors() <= r.len().max(h.len()));
        prop_assert!(a.errors() >= r.len().abs_diff(h.len()));
        prop_assert_eq!(a.reference_len + a.insertions - a.deletions, h.len());
    }

    #[test]
    fn repunc_round_trips(sents in prop::collection::vec(prop::collection::vec(word(), 1..6), 1..5)) {
        let utts: Vec<Utterance> = sents
            .iter()
            .enumerate()
            .map(|(k, w)| Utterance::from_words(format!("r{k}"), w).unwrap())
            .collect();
        let p = repunctuate(&utts);
        prop_assert_eq!(strip_synthetic(&p), utts);
    }
}

#[test]
fn unicode_punctuation_and_elision() {
    assert_eq!(
        normalize_text("L'homme « dit » : Bonjour !"),
        "l'homme dit bonjour"
    );
    assert_eq!(normalize_text("' quoi'"), "quoi");
    let distinct: HashSet<String> = ["A.B", "a b", "a  b "]
        .iter()
        .map(|s| normalize_text(s))
        .collect();
    assert_eq!(distinct.len(), 1);
}

#[test]
fn split_parts_cover_all_three() {
    let items: Vec<(String, String)> = (0..20).map(|k| (format!("{k}"), String::new())).collect();
    let spec = stratified_split(&items, (0.8, 0.1, 0.1), 3).unwrap();
    assert_eq!(spec.sizes(), [16, 2, 2]);
    assert_eq!(spec.ids(Part::Dev).len(), 2);
}
