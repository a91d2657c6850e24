#![allow(dead_code)]

use std::collections::BTreeSet;

use emoter::classifier::MultiLabelModel;
use emoter::corpus::{
    inject_writer_token, Corpus, Document, ExperiencerAnnotation, ExperiencerLabels, LabelSet, Span,
};
use emoter::evaluation::LabeledSpan;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Maximum number of disjoint overlapping pairs, by exhaustive search.
pub fn brute_force_max_matching(gold: &[Span], pred: &[Span]) -> usize {
    fn go(i: usize, gold: &[Span], pred: &[Span], used: &mut Vec<bool>) -> usize {
        if i == gold.len() {
            return 0;
        }
        let mut best = go(i + 1, gold, pred, used);
        for j in 0..pred.len() {
            let overlap = gold[i].start < pred[j].end && pred[j].start < gold[i].end;
            if !used[j] && overlap {
                used[j] = true;
                best = best.max(1 + go(i + 1, gold, pred, used));
                used[j] = false;
            }
        }
        best
    }
    go(0, gold, pred, &mut vec![false; pred.len()])
}

/// Up to `max_spans` pairwise disjoint spans inside `[0, length)`.
pub fn random_layout<R: Rng>(rng: &mut R, length: usize, max_spans: usize) -> Vec<Span> {
    let wanted = rng.random_range(0..=max_spans);
    let mut spans = Vec::new();
    let mut position = 0;
    while spans.len() < wanted && position < length {
        let start = position + rng.random_range(0..3);
        if start >= length {
            break;
        }
        let end = (start + rng.random_range(1..=4)).min(length);
        spans.push(Span::new(start, end));
        position = end;
    }
    spans
}

pub fn labels(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn labeled(start: usize, end: usize, names: &[&str]) -> LabeledSpan {
    LabeledSpan {
        span: Span::new(start, end),
        is_writer: false,
        labels: labels(names),
    }
}

/// A document of `length` filler tokens (plus the writer token) whose
/// non-writer gold spans are `spans`.
pub fn doc_with_spans(id: &str, length: usize, spans: &[Span]) -> Document {
    let text = (0..length)
        .map(|i| format!("t{i}"))
        .collect::<Vec<_>>()
        .join(" ");
    let mut doc = inject_writer_token(
        Document::from_text(id, text),
        Some(ExperiencerLabels::default()),
    )
    .unwrap();
    for &span in spans {
        doc.annotations.push(ExperiencerAnnotation::new(
            span,
            false,
            ExperiencerLabels::default(),
        ));
    }
    doc
}

/// Toy tagger corpus: capitalized tokens that are not sentence-initial are
/// unit-length experiencers.
pub fn capitalized_corpus(texts: &[&str]) -> Corpus {
    let docs = texts
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let mut doc = inject_writer_token(
                Document::from_text(format!("toy-{i}"), *text),
                Some(ExperiencerLabels::default()),
            )
            .unwrap();
            let spans: Vec<Span> = doc
                .tokens
                .iter()
                .enumerate()
                .skip(2)
                .filter(|(_, t)| t.surface.chars().next().is_some_and(char::is_uppercase))
                .map(|(i, _)| Span::new(i, i + 1))
                .collect();
            for span in spans {
                doc.annotations.push(ExperiencerAnnotation::new(
                    span,
                    false,
                    ExperiencerLabels::default(),
                ));
            }
            doc
        })
        .collect();
    Corpus::new(docs)
}

pub const TOY_TEXTS: [&str; 12] = [
    "we saw Anna leave",
    "then Bob cried",
    "later Carla laughed loudly",
    "the dog barked at David",
    "yesterday Elena and Frank argued",
    "my friend met Greta",
    "they told Hugo everything",
    "nobody called Ida back",
    "so Jonas waited",
    "our teacher praised Karin",
    "the bus left without Lukas",
    "it rained while Mia slept",
];

/// Largest relative error between analytic and central-difference gradients
/// over `probes` random models, each probing one bias or weight.
pub fn worst_gradient_error(seed: u64, probes: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = LabelSet::emotions();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let mut model = MultiLabelModel::zeros(labels.clone(), 12, 0.5, 0);
        let mut features: Vec<u32> = (0..rng.random_range(1..8))
            .map(|_| rng.random_range(0..4096))
            .collect();
        features.sort_unstable();
        features.dedup();
        for &f in &features {
            for k in 0..labels.len() {
                model.set_weight(f, k, rng.random_range(-2.0..2.0));
            }
        }
        for k in 0..labels.len() {
            model.set_bias(k, rng.random_range(-1.0..1.0));
        }
        let targets: Vec<bool> = (0..labels.len()).map(|_| rng.random_bool(0.3)).collect();
        let gradient = model.gradient(&features, &targets);

        let k = rng.random_range(0..labels.len());
        let (analytic, numeric) = if rng.random_bool(0.5) {
            let b = model.bias(k);
            model.set_bias(k, b + h);
            let up = model.loss(&features, &targets);
            model.set_bias(k, b - h);
            let down = model.loss(&features, &targets);
            (gradient.bias[k], (up - down) / (2.0 * h))
        } else {
            let f = features[rng.random_range(0..features.len())];
            let w = model.weight(f, k);
            model.set_weight(f, k, w + h);
            let up = model.loss(&features, &targets);
            model.set_weight(f, k, w - h);
            let down = model.loss(&features, &targets);
            let analytic = gradient.weights.iter().find(|(id, _)| *id == f).unwrap().1[k];
            (analytic, (up - down) / (2.0 * h))
        };
        worst = worst.max((analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8));
    }
    worst
}
