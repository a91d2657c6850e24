mod common;

use common::{capitalized_corpus, TOY_TEXTS};
use emoter::corpus::{inject_writer_token, Corpus, Document, Span};
use emoter::evaluation::{span_prf, MatchMode};
use emoter::span_tagger::{tags_to_spans, train_tagger, BilouTag, TaggerConfig};

fn predictions(model: &emoter::span_tagger::TaggerModel, corpus: &Corpus) -> Vec<Vec<Span>> {
    corpus
        .documents
        .iter()
        .map(|d| model.predict_spans(&d.tokens))
        .collect()
}

#[test]
fn learns_capitalized_experiencers() {
    let corpus = capitalized_corpus(&TOY_TEXTS);
    let model = train_tagger(&corpus, &Corpus::default(), &TaggerConfig::new(1)).unwrap();
    let prf = span_prf(
        &corpus.documents,
        &predictions(&model, &corpus),
        MatchMode::Strict,
        true,
    )
    .unwrap();
    assert_eq!(prf.f1, 1.0);
}

#[test]
fn tags_unseen_sentence() {
    let corpus = capitalized_corpus(&TOY_TEXTS);
    let model = train_tagger(&corpus, &Corpus::default(), &TaggerConfig::new(1)).unwrap();
    let doc = inject_writer_token(Document::from_text("new", "we saw Anna leave"), None).unwrap();
    assert_eq!(
        model.predict_spans(&doc.tokens),
        vec![Span::new(0, 1), Span::new(3, 4)]
    );
}

#[test]
fn converges_within_twenty_epochs() {
    let corpus = capitalized_corpus(&TOY_TEXTS);
    // Dev equal to train: training stops once the training data is tagged
    // perfectly and patience runs out.
    let mut config = TaggerConfig::new(3);
    config.max_epochs = 20;
    config.patience = 1;
    let model = train_tagger(&corpus, &corpus, &config).unwrap();
    let prf = span_prf(
        &corpus.documents,
        &predictions(&model, &corpus),
        MatchMode::Strict,
        false,
    )
    .unwrap();
    assert_eq!(prf.f1, 1.0);
    assert!(model.epoch_count() < 20);
}

#[test]
fn same_seed_same_model() {
    let corpus = capitalized_corpus(&TOY_TEXTS);
    let a = train_tagger(&corpus, &Corpus::default(), &TaggerConfig::new(5)).unwrap();
    let b = train_tagger(&corpus, &Corpus::default(), &TaggerConfig::new(5)).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
}

#[test]
fn writer_always_predicted_even_without_training_signal() {
    let corpus = capitalized_corpus(&TOY_TEXTS[..1]);
    let mut config = TaggerConfig::new(0);
    config.max_epochs = 1;
    let model = train_tagger(&corpus, &Corpus::default(), &config).unwrap();
    let doc = inject_writer_token(Document::from_text("x", ""), None).unwrap();
    assert_eq!(model.predict_tags(&doc.tokens), vec![BilouTag::U]);
    assert_eq!(tags_to_spans(&[BilouTag::U]), vec![Span::new(0, 1)]);
}
