//! Template-generated corpora for tests and smoke runs.
//!
//! Each document opens with a writer sentence ("I felt ashamed.") followed by
//! zero to two sentences in which a named experiencer reacts with a cue verb
//! keyed to one emotion. Capitalized place names and mentioned people that
//! feel nothing act as distractors for the span tagger.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    inject_writer_token, Corpus, Document, ExperiencerAnnotation, ExperiencerLabels, Span,
    APPRAISAL_LABELS, EMOTION_LABELS,
};

const FIRST_NAMES: [&str; 16] = [
    "Anna", "Bob", "Carla", "David", "Elena", "Frank", "Greta", "Hugo", "Ida", "Jonas", "Karin",
    "Lukas", "Mia", "Nils", "Olga", "Paul",
];
const LAST_NAMES: [&str; 6] = ["Berg", "Meyer", "Novak", "Smith", "Weber", "Klein"];
const RELATIVES: [&str; 5] = ["brother", "sister", "mother", "father", "neighbour"];
const PLACES: [&str; 8] = [
    "Paris", "Berlin", "Oslo", "Madrid", "Vienna", "Lisbon", "Prague", "Dublin",
];
const OPENERS: [&str; 4] = ["Then", "Later", "Afterwards", "Suddenly"];

/// Writer adjective and experiencer cue verbs per emotion, in label order.
const CUES: [(&str, [&str; 2]); 8] = [
    ("angry", ["yelled", "fumed"]),
    ("disgusted", ["gagged", "grimaced"]),
    ("afraid", ["trembled", "panicked"]),
    ("happy", ["laughed", "cheered"]),
    ("fine", ["shrugged", "nodded"]),
    ("odd", ["sighed", "wondered"]),
    ("sad", ["cried", "wept"]),
    ("ashamed", ["blushed", "cringed"]),
];

/// Appraisal dimensions scored 5 for each emotion; all others score 0–2.
fn high_appraisals(emotion: usize) -> &'static [&'static str] {
    match emotion {
        0 => &["other_responsibility", "goal_relevance", "urgency"],
        1 => &["suddenness", "other_responsibility"],
        2 => &["suddenness", "urgency", "attend"],
        3 => &["pleasantness", "goal_conduciveness"],
        4 => &["familiarity"],
        5 => &["consider"],
        6 => &["goal_relevance", "situational_responsibility"],
        _ => &["self_responsibility", "internal_check"],
    }
}

fn labels_for(emotion: usize, rng: &mut ChaCha8Rng) -> ExperiencerLabels {
    let high = high_appraisals(emotion);
    let appraisal_scores: BTreeMap<String, u8> = APPRAISAL_LABELS
        .iter()
        .map(|&label| {
            let score = if high.contains(&label) {
                5
            } else {
                rng.random_range(0..=2)
            };
            (label.to_string(), score)
        })
        .collect();
    ExperiencerLabels {
        emotions: BTreeSet::from([EMOTION_LABELS[emotion].to_string()]),
        appraisal_scores,
    }
}

/// Renders words as text, attaching sentence punctuation to the preceding
/// word. The tokenizer splits it off again, so token indices are preserved.
fn render(words: &[String]) -> String {
    let mut text = String::new();
    for w in words {
        if !text.is_empty() && w != "." && w != "," {
            text.push(' ');
        }
        text.push_str(w);
    }
    text
}

fn experiencer(rng: &mut ChaCha8Rng) -> Vec<String> {
    match rng.random_range(0..6) {
        0 => vec!["my".into(), RELATIVES.choose(rng).unwrap().to_string()],
        1 => vec![
            FIRST_NAMES.choose(rng).unwrap().to_string(),
            LAST_NAMES.choose(rng).unwrap().to_string(),
        ],
        _ => vec![FIRST_NAMES.choose(rng).unwrap().to_string()],
    }
}

fn document(index: usize, rng: &mut ChaCha8Rng) -> Document {
    let writer_emotion = rng.random_range(0..CUES.len());
    let mut words: Vec<String> = ["I", "felt", CUES[writer_emotion].0, "."]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut spans: Vec<(Span, ExperiencerLabels)> = Vec::new();

    for _ in 0..rng.random_range(0..=2) {
        let emotion = rng.random_range(0..CUES.len());
        words.push(OPENERS.choose(rng).unwrap().to_string());
        let who = experiencer(rng);
        // +1 for the writer token injected below.
        let start = words.len() + 1;
        words.extend(who.iter().cloned());
        spans.push((
            Span::new(start, start + who.len()),
            labels_for(emotion, rng),
        ));
        words.push(CUES[emotion].1.choose(rng).unwrap().to_string());
        match rng.random_range(0..3) {
            0 => {
                words.push("in".into());
                words.push(PLACES.choose(rng).unwrap().to_string());
            }
            1 => {
                words.push("about".into());
                words.push(FIRST_NAMES.choose(rng).unwrap().to_string());
            }
            _ => {}
        }
        words.push(".".into());
    }

    let mut doc = Document::from_text(format!("syn-{index:04}"), render(&words));
    debug_assert_eq!(doc.tokens.len(), words.len());
    for (span, labels) in spans {
        doc.annotations.push(ExperiencerAnnotation::new(
            Span::new(span.start - 1, span.end - 1),
            false,
            labels,
        ));
    }
    let writer = labels_for(writer_emotion, rng);
    inject_writer_token(doc, Some(writer)).expect("fresh document has no writer token")
}

/// Generates `size` documents deterministically from `seed`.
pub fn synthetic_corpus(size: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Corpus::new((0..size).map(|i| document(i, &mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{find_overlap, tokenize};

    #[test]
    fn deterministic() {
        assert_eq!(synthetic_corpus(20, 3), synthetic_corpus(20, 3));
        assert_ne!(synthetic_corpus(20, 3), synthetic_corpus(20, 4));
    }

    #[test]
    fn documents_are_well_formed() {
        for doc in &synthetic_corpus(100, 9).documents {
            assert_eq!(doc.tokens.len(), tokenize(&doc.text).len() + 1);
            assert!(doc.writer_annotation().is_some());
            assert!(find_overlap(&doc.spans()).is_none());
            for ann in &doc.annotations {
                assert!(ann.span.end <= doc.tokens.len());
                assert_eq!(ann.emotions.len(), 1);
                if !ann.is_writer {
                    let first = &doc.tokens[ann.span.start].surface;
                    assert!(first == "my" || first.chars().next().unwrap().is_uppercase());
                }
            }
        }
    }

    #[test]
    fn has_non_writer_spans_and_distractors() {
        let c = synthetic_corpus(50, 1);
        assert!(c.annotation_count() > 50 + 20);
        assert!(c.documents.iter().any(|d| d.text.contains(" in ")));
    }
}
