use oralkit::embed::{EmbeddingProvider, LookupTable};
use oralkit::slu::{SluTagger, TaggerConfig};
use oralkit::toy;

#[test]
fn slu_tagger_learns_toy_grammar() {
    let samples = toy::slu_corpus(300, 4).unwrap();
    let (train, dev) = samples.split_at(240);
    let utts: Vec<_> = train.iter().map(|s| s.utterance.clone()).collect();
    let provider = EmbeddingProvider::Lookup(LookupTable::from_corpus(&utts, 32, 4));
    let config = TaggerConfig {
        epochs: 15,
        ..TaggerConfig::default()
    };
    let (tagger, log) = SluTagger::train(train, dev, &provider, None, &config).unwrap();
    let best = log.iter().map(|e| e.dev_cer).fold(f64::INFINITY, f64::min);
    assert!(best <= 10.0, "best dev CER {best}");
    let tags = tagger
        .tag(
            &dev.iter().map(|s| s.utterance.clone()).collect::<Vec<_>>(),
            None,
        )
        .unwrap();
    assert_eq!(tags.len(), dev.len());
    assert!(tags
        .iter()
        .zip(dev)
        .all(|(t, s)| t.len() == s.utterance.len()));
}
