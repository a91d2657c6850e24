mod common;

use common::labels;
use emoter::classifier::{
    encode_with_indicators, predict_labels, predict_labels_at, train_multilabel, ClassifierConfig,
};
use emoter::corpus::{inject_writer_token, Document, LabelSet, Span};
use proptest::prelude::*;

fn instance(text: &str, span: (usize, usize)) -> emoter::classifier::EncodedInstance {
    let doc = inject_writer_token(Document::from_text("d", text), None).unwrap();
    encode_with_indicators(&doc, Span::new(span.0, span.1)).unwrap()
}

fn toy_data() -> Vec<(
    emoter::classifier::EncodedInstance,
    std::collections::BTreeSet<String>,
)> {
    vec![
        (instance("I felt ashamed", (0, 1)), labels(&["shame"])),
        (instance("I was so ashamed", (0, 1)), labels(&["shame"])),
        (instance("I felt happy", (0, 1)), labels(&["joy"])),
        (instance("we were happy", (0, 1)), labels(&["joy"])),
        (instance("then Anna cried", (2, 3)), labels(&["sadness"])),
        (instance("later Bob cried", (2, 3)), labels(&["sadness"])),
        (instance("then Carla yelled", (2, 3)), labels(&["anger"])),
        (instance("later David yelled", (2, 3)), labels(&["anger"])),
    ]
}

#[test]
fn separable_toy_set_is_learned() {
    let data = toy_data();
    let model =
        train_multilabel(&data, &[], &LabelSet::emotions(), &ClassifierConfig::new(1)).unwrap();
    for (inst, gold) in &data {
        assert_eq!(&predict_labels(&model, inst), gold);
    }
    assert_eq!(
        predict_labels(&model, &instance("I am ashamed", (0, 1))),
        labels(&["shame"])
    );
}

#[test]
fn training_is_deterministic() {
    let data = toy_data();
    let config = ClassifierConfig::new(17);
    let a = train_multilabel(&data, &data, &LabelSet::emotions(), &config).unwrap();
    let b = train_multilabel(&data, &data, &LabelSet::emotions(), &config).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
}

#[test]
fn finite_difference_gradient_check() {
    let worst = common::worst_gradient_error(99, 100);
    assert!(worst <= 1e-4, "worst relative error {worst}");
}

proptest! {
    #[test]
    fn raising_threshold_never_adds_labels(seed in 0u64..50, lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let data = toy_data();
        let mut config = ClassifierConfig::new(seed);
        config.max_epochs = 2;
        let model = train_multilabel(&data, &[], &LabelSet::emotions(), &config).unwrap();
        for (inst, _) in &data {
            let low = predict_labels_at(&model, inst, lo);
            let high = predict_labels_at(&model, inst, hi);
            prop_assert!(high.is_subset(&low));
        }
    }
}
