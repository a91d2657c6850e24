//! Experiencer span detection with a greedy left-to-right BILOU tagger
//! trained as an averaged perceptron over hashed features.
//!
//! The writer token is never left to the learner: it is always tagged `U`,
//! both during training (no update) and at prediction time.

mod bilou;
mod features;

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use self::bilou::{spans_to_tags, tags_to_spans, BilouTag};
pub use self::features::{extract_features, word_shape, FeatureVector, History};

use self::features::{combine, history_features, static_features};
use crate::corpus::{Corpus, Span, Token};
use crate::evaluation::{span_prf, MatchMode};
use crate::hashing::FeatureHasher;

const TAGS: usize = 5;
pub const DEFAULT_FEATURE_SPACE_BITS: u32 = 22;
const MODEL_FORMAT: &str = "emoter-tagger";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum TaggerError {
    #[error("training corpus is empty")]
    EmptyTrainingCorpus,
    #[error("max_epochs must be at least 1")]
    NoEpochs,
    #[error("spans {0:?} and {1:?} overlap")]
    OverlappingSpans(Span, Span),
    #[error("span [{start}, {end}) out of range for {length} tokens")]
    SpanOutOfRange {
        start: usize,
        end: usize,
        length: usize,
    },
    #[error("document {id}: {source}")]
    Document {
        id: String,
        #[source]
        source: Box<TaggerError>,
    },
    #[error(transparent)]
    Evaluation(#[from] crate::evaluation::EvalError),
    #[error("invalid tagger model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub feature_space_bits: u32,
}

impl TaggerConfig {
    /// Defaults: 50 epochs, patience 5, 2^22 feature buckets.
    pub fn new(seed: u64) -> Self {
        TaggerConfig {
            max_epochs: 50,
            patience: 5,
            seed,
            feature_space_bits: DEFAULT_FEATURE_SPACE_BITS,
        }
    }
}

/// A finalized tagger. Scores use the averaged weights only.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    feature_space_bits: u32,
    seed: u64,
    epoch_count: usize,
    averaged_weights: HashMap<u32, [f64; TAGS]>,
}

impl TaggerModel {
    pub fn feature_space_bits(&self) -> u32 {
        self.feature_space_bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Epoch whose averaged weights were kept (1-based).
    pub fn epoch_count(&self) -> usize {
        self.epoch_count
    }

    pub fn weight(&self, feature: u32, tag: BilouTag) -> f64 {
        self.averaged_weights
            .get(&feature)
            .map_or(0.0, |w| w[tag.index()])
    }

    fn hasher(&self) -> FeatureHasher {
        FeatureHasher::new(self.feature_space_bits)
    }

    fn best_tag(&self, features: &FeatureVector) -> BilouTag {
        let mut scores = [0.0f64; TAGS];
        for id in features.ids() {
            if let Some(w) = self.averaged_weights.get(id) {
                for (s, w) in scores.iter_mut().zip(w) {
                    *s += w;
                }
            }
        }
        argmax(&scores)
    }

    /// Greedy left-to-right decoding.
    pub fn predict_tags(&self, tokens: &[Token]) -> Vec<BilouTag> {
        let hasher = self.hasher();
        let mut tags = Vec::with_capacity(tokens.len());
        for position in 0..tokens.len() {
            let tag = if tokens[position].is_writer_token {
                BilouTag::U
            } else {
                let fv = combine(
                    &static_features(tokens, position, &hasher),
                    history_features(history(&tags), &hasher),
                );
                self.best_tag(&fv)
            };
            tags.push(tag);
        }
        tags
    }

    pub fn predict_spans(&self, tokens: &[Token]) -> Vec<Span> {
        tags_to_spans(&self.predict_tags(tokens))
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<(), TaggerError> {
        let mut weights: Vec<(u32, String, f64)> = Vec::new();
        let mut ids: Vec<&u32> = self.averaged_weights.keys().collect();
        ids.sort_unstable();
        for id in ids {
            for tag in BilouTag::ALL {
                let w = self.averaged_weights[id][tag.index()];
                if w != 0.0 {
                    weights.push((*id, tag.as_str().to_string(), w));
                }
            }
        }
        let file = TaggerFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            feature_space_bits: self.feature_space_bits,
            seed: self.seed,
            epoch_count: self.epoch_count,
            weights,
        };
        serde_json::to_writer(&mut writer, &file)
            .map_err(|e| TaggerError::Format(e.to_string()))?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to memory cannot fail");
        buf
    }

    pub fn read_from<R: Read>(reader: R) -> Result<Self, TaggerError> {
        let file: TaggerFile =
            serde_json::from_reader(reader).map_err(|e| TaggerError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(TaggerError::Format(format!(
                "expected {MODEL_FORMAT} version {MODEL_VERSION}, found {} version {}",
                file.format, file.version
            )));
        }
        if !(1..=32).contains(&file.feature_space_bits) {
            return Err(TaggerError::Format(
                "feature_space_bits out of range".into(),
            ));
        }
        let limit = 1u64 << file.feature_space_bits;
        let mut averaged_weights: HashMap<u32, [f64; TAGS]> = HashMap::new();
        for (id, tag, w) in file.weights {
            if id as u64 >= limit {
                return Err(TaggerError::Format(format!(
                    "feature id {id} outside feature space"
                )));
            }
            let tag: BilouTag = tag.parse()?;
            averaged_weights.entry(id).or_insert([0.0; TAGS])[tag.index()] = w;
        }
        Ok(TaggerModel {
            feature_space_bits: file.feature_space_bits,
            seed: file.seed,
            epoch_count: file.epoch_count,
            averaged_weights,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TaggerFile {
    format: String,
    version: u32,
    feature_space_bits: u32,
    seed: u64,
    epoch_count: usize,
    weights: Vec<(u32, String, f64)>,
}

fn history(tags: &[BilouTag]) -> History {
    let n = tags.len();
    [
        n.checked_sub(1).map(|i| tags[i]),
        n.checked_sub(2).map(|i| tags[i]),
    ]
}

fn argmax<T: PartialOrd + Copy>(scores: &[T; TAGS]) -> BilouTag {
    let mut best = 0;
    for i in 1..TAGS {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    BilouTag::from_index(best).expect("index below TAGS")
}

/// Integer perceptron weights with lazily accumulated sums for averaging.
#[derive(Default)]
struct PerceptronState {
    entries: HashMap<u32, Entry>,
    clock: u64,
}

#[derive(Default, Clone, Copy)]
struct Entry {
    weight: [i64; TAGS],
    total: [i64; TAGS],
    stamp: [u64; TAGS],
}

impl PerceptronState {
    fn best_tag(&self, features: &FeatureVector) -> BilouTag {
        let mut scores = [0i64; TAGS];
        for id in features.ids() {
            if let Some(e) = self.entries.get(id) {
                for (s, w) in scores.iter_mut().zip(e.weight) {
                    *s += w;
                }
            }
        }
        argmax(&scores)
    }

    fn update(&mut self, features: &FeatureVector, gold: BilouTag, guess: BilouTag) {
        self.clock += 1;
        if gold == guess {
            return;
        }
        let clock = self.clock;
        for &id in features.ids() {
            let entry = self.entries.entry(id).or_default();
            for (tag, delta) in [(gold, 1), (guess, -1)] {
                let t = tag.index();
                entry.total[t] += (clock - entry.stamp[t]) as i64 * entry.weight[t];
                entry.stamp[t] = clock;
                entry.weight[t] += delta;
            }
        }
    }

    fn averaged(&self, config: &TaggerConfig, epoch: usize) -> TaggerModel {
        let clock = self.clock.max(1);
        let mut averaged_weights = HashMap::with_capacity(self.entries.len());
        for (&id, e) in &self.entries {
            let w: [f64; TAGS] = std::array::from_fn(|t| {
                let total = e.total[t] + (clock - e.stamp[t]) as i64 * e.weight[t];
                total as f64 / clock as f64
            });
            if w.iter().any(|&v| v != 0.0) {
                averaged_weights.insert(id, w);
            }
        }
        TaggerModel {
            feature_space_bits: config.feature_space_bits,
            seed: config.seed,
            epoch_count: epoch,
            averaged_weights,
        }
    }
}

struct TrainingDoc {
    static_features: Vec<Vec<u32>>,
    gold: Vec<BilouTag>,
    writer: Vec<bool>,
}

/// Trains the tagger. Documents are visited in an order reshuffled every
/// epoch from `config.seed`. After each epoch the averaged model is scored
/// on `dev` (relaxed span F1 without writer spans); training stops once
/// `patience` epochs pass without improvement and the best epoch's model is
/// returned. When `dev` has no non-writer spans all epochs run and the last
/// model is returned.
pub fn train_tagger(
    train: &Corpus,
    dev: &Corpus,
    config: &TaggerConfig,
) -> Result<TaggerModel, TaggerError> {
    if train.is_empty() {
        return Err(TaggerError::EmptyTrainingCorpus);
    }
    if config.max_epochs == 0 {
        return Err(TaggerError::NoEpochs);
    }
    let hasher = FeatureHasher::new(config.feature_space_bits);
    let docs = train
        .documents
        .iter()
        .map(|doc| {
            let gold = spans_to_tags(&doc.spans(), doc.tokens.len()).map_err(|e| {
                TaggerError::Document {
                    id: doc.id.clone(),
                    source: Box::new(e),
                }
            })?;
            Ok(TrainingDoc {
                static_features: (0..doc.tokens.len())
                    .map(|p| static_features(&doc.tokens, p, &hasher))
                    .collect(),
                gold,
                writer: doc.tokens.iter().map(|t| t.is_writer_token).collect(),
            })
        })
        .collect::<Result<Vec<_>, TaggerError>>()?;

    let dev_selects = dev
        .documents
        .iter()
        .flat_map(|d| &d.annotations)
        .any(|a| !a.is_writer);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut state = PerceptronState::default();
    let mut best: Option<(f64, TaggerModel)> = None;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            train_document(&mut state, &docs[i], &hasher);
        }
        let model = state.averaged(config, epoch);
        if !dev_selects {
            best = Some((0.0, model));
            continue;
        }
        let predicted: Vec<Vec<Span>> = dev
            .documents
            .iter()
            .map(|d| model.predict_spans(&d.tokens))
            .collect();
        let f1 = span_prf(&dev.documents, &predicted, MatchMode::Relaxed, false)?.f1;
        match &best {
            Some((best_f1, _)) if f1 <= *best_f1 => {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
            _ => {
                best = Some((f1, model));
                stale = 0;
            }
        }
    }
    Ok(best.expect("at least one epoch ran").1)
}

fn train_document(state: &mut PerceptronState, doc: &TrainingDoc, hasher: &FeatureHasher) {
    let mut predicted: Vec<BilouTag> = Vec::with_capacity(doc.gold.len());
    for position in 0..doc.gold.len() {
        if doc.writer[position] {
            predicted.push(BilouTag::U);
            continue;
        }
        let fv = combine(
            &doc.static_features[position],
            history_features(history(&predicted), hasher),
        );
        let guess = state.best_tag(&fv);
        state.update(&fv, doc.gold[position], guess);
        predicted.push(guess);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{inject_writer_token, Document, ExperiencerAnnotation, ExperiencerLabels};

    fn doc(id: &str, text: &str, spans: &[(usize, usize)]) -> Document {
        let mut d = inject_writer_token(
            Document::from_text(id, text),
            Some(ExperiencerLabels::default()),
        )
        .unwrap();
        for &(s, e) in spans {
            d.annotations.push(ExperiencerAnnotation::new(
                Span::new(s, e),
                false,
                ExperiencerLabels::default(),
            ));
        }
        d
    }

    #[test]
    fn zero_epochs_and_empty_corpus_rejected() {
        let train = Corpus::new(vec![doc("a", "x y", &[])]);
        let mut config = TaggerConfig::new(1);
        config.max_epochs = 0;
        assert!(matches!(
            train_tagger(&train, &Corpus::default(), &config),
            Err(TaggerError::NoEpochs)
        ));
        assert!(matches!(
            train_tagger(
                &Corpus::default(),
                &Corpus::default(),
                &TaggerConfig::new(1)
            ),
            Err(TaggerError::EmptyTrainingCorpus)
        ));
    }

    #[test]
    fn empty_document_predicts_nothing() {
        let train = Corpus::new(vec![doc("a", "Anna left", &[(1, 2)])]);
        let mut config = TaggerConfig::new(3);
        config.max_epochs = 2;
        let model = train_tagger(&train, &Corpus::default(), &config).unwrap();
        assert!(model.predict_spans(&[]).is_empty());
        assert!(model.predict_tags(&[]).is_empty());
    }

    #[test]
    fn writer_token_always_emitted() {
        // A model trained on documents without writer annotations still emits
        // the writer span.
        let mut plain = inject_writer_token(Document::from_text("a", "nobody here"), None).unwrap();
        plain.annotations.clear();
        let mut config = TaggerConfig::new(3);
        config.max_epochs = 3;
        let model = train_tagger(
            &Corpus::new(vec![plain.clone()]),
            &Corpus::default(),
            &config,
        )
        .unwrap();
        assert_eq!(model.predict_spans(&plain.tokens), vec![Span::writer()]);
    }

    #[test]
    fn persistence_round_trip_and_version_check() {
        let train = Corpus::new(vec![
            doc("a", "Anna cried today", &[(1, 2)]),
            doc("b", "then Bob Smith cried", &[(2, 4)]),
        ]);
        let mut config = TaggerConfig::new(9);
        config.max_epochs = 4;
        let model = train_tagger(&train, &Corpus::default(), &config).unwrap();
        let bytes = model.to_bytes();
        let loaded = TaggerModel::read_from(bytes.as_slice()).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(loaded.to_bytes(), bytes);

        let text = String::from_utf8(bytes)
            .unwrap()
            .replace("\"version\":1", "\"version\":2");
        assert!(matches!(
            TaggerModel::read_from(text.as_bytes()),
            Err(TaggerError::Format(_))
        ));
    }

    #[test]
    fn argmax_prefers_outside_on_ties() {
        assert_eq!(argmax(&[0i64; TAGS]), BilouTag::O);
        assert_eq!(argmax(&[0, 2, 2, 0, 1]), BilouTag::B);
    }
}
