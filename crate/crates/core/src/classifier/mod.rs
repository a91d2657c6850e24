//! Span-conditioned multi-label classification.
//!
//! The target experiencer is marked with indicator tokens and one logistic
//! head per label is trained over hashed features by plain SGD. Emotions and
//! appraisals use two independently trained models of this kind.

mod encode;

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use self::encode::{
    encode_tokens, encode_with_indicators, instance_features, EncodeOptions, EncodedInstance,
    CLOSE_MARKER, OPEN_MARKER,
};

use crate::corpus::LabelSet;
use crate::hashing::FeatureHasher;

pub const DEFAULT_FEATURE_SPACE_BITS: u32 = 20;
const MODEL_FORMAT: &str = "emoter-multilabel";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("span [{start}, {end}) is invalid for {length} tokens")]
    InvalidSpan {
        start: usize,
        end: usize,
        length: usize,
    },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("max_epochs must be at least 1")]
    NoEpochs,
    #[error("gold label `{0}` is not in the label set")]
    UnknownLabel(String),
    #[error("invalid classifier model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub decision_threshold: f64,
    pub seed: u64,
    pub feature_space_bits: u32,
}

impl ClassifierConfig {
    pub fn new(seed: u64) -> Self {
        ClassifierConfig {
            max_epochs: 30,
            patience: 3,
            learning_rate: 0.1,
            decision_threshold: 0.5,
            seed,
            feature_space_bits: DEFAULT_FEATURE_SPACE_BITS,
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Negative log-likelihood of target `y` under logit `z`.
pub fn logistic_loss(z: f64, y: bool) -> f64 {
    // softplus(z) - y * z
    let softplus = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    softplus - if y { z } else { 0.0 }
}

/// Derivative of [`logistic_loss`] with respect to `z`.
pub fn logistic_loss_derivative(z: f64, y: bool) -> f64 {
    sigmoid(z) - if y { 1.0 } else { 0.0 }
}

/// Sparse gradient of the summed per-label loss for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub bias: Vec<f64>,
    /// One entry per active feature, holding a per-label vector.
    pub weights: Vec<(u32, Vec<f64>)>,
}

/// One logistic head per label over a shared hashed feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelModel {
    labels: LabelSet,
    feature_space_bits: u32,
    weights: HashMap<u32, Vec<f64>>,
    bias: Vec<f64>,
    decision_threshold: f64,
    seed: u64,
    epoch_count: usize,
}

impl MultiLabelModel {
    /// A model with all weights zero.
    pub fn zeros(
        labels: LabelSet,
        feature_space_bits: u32,
        decision_threshold: f64,
        seed: u64,
    ) -> Self {
        let bias = vec![0.0; labels.len()];
        MultiLabelModel {
            labels,
            feature_space_bits,
            weights: HashMap::new(),
            bias,
            decision_threshold,
            seed,
            epoch_count: 0,
        }
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn decision_threshold(&self) -> f64 {
        self.decision_threshold
    }

    pub fn set_decision_threshold(&mut self, threshold: f64) {
        self.decision_threshold = threshold;
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn epoch_count(&self) -> usize {
        self.epoch_count
    }

    pub fn hasher(&self) -> FeatureHasher {
        FeatureHasher::new(self.feature_space_bits)
    }

    pub fn weight(&self, feature: u32, label: usize) -> f64 {
        self.weights.get(&feature).map_or(0.0, |w| w[label])
    }

    pub fn set_weight(&mut self, feature: u32, label: usize, value: f64) {
        let n = self.labels.len();
        self.weights.entry(feature).or_insert_with(|| vec![0.0; n])[label] = value;
    }

    pub fn bias(&self, label: usize) -> f64 {
        self.bias[label]
    }

    pub fn set_bias(&mut self, label: usize, value: f64) {
        self.bias[label] = value;
    }

    /// Per-label logits for a feature set.
    pub fn logits(&self, features: &[u32]) -> Vec<f64> {
        let mut z = self.bias.clone();
        for id in features {
            if let Some(w) = self.weights.get(id) {
                for (zi, wi) in z.iter_mut().zip(w) {
                    *zi += wi;
                }
            }
        }
        z
    }

    /// Per-label probabilities, in label-set order.
    pub fn scores(&self, instance: &EncodedInstance) -> Vec<f64> {
        self.logits(&instance_features(instance, &self.hasher()))
            .into_iter()
            .map(sigmoid)
            .collect()
    }

    /// Summed logistic loss over all labels. `targets[k]` is the gold value
    /// of label `k`.
    pub fn loss(&self, features: &[u32], targets: &[bool]) -> f64 {
        self.logits(features)
            .into_iter()
            .zip(targets)
            .map(|(z, &y)| logistic_loss(z, y))
            .sum()
    }

    pub fn gradient(&self, features: &[u32], targets: &[bool]) -> Gradient {
        let bias: Vec<f64> = self
            .logits(features)
            .into_iter()
            .zip(targets)
            .map(|(z, &y)| logistic_loss_derivative(z, y))
            .collect();
        // Features are binary, so d loss / d w[f][k] equals the bias term.
        let weights = features.iter().map(|&f| (f, bias.clone())).collect();
        Gradient { bias, weights }
    }

    fn apply(&mut self, gradient: &Gradient, learning_rate: f64) {
        let n = self.labels.len();
        for (b, g) in self.bias.iter_mut().zip(&gradient.bias) {
            *b -= learning_rate * g;
        }
        for (f, g) in &gradient.weights {
            let w = self.weights.entry(*f).or_insert_with(|| vec![0.0; n]);
            for (wi, gi) in w.iter_mut().zip(g) {
                *wi -= learning_rate * gi;
            }
        }
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<(), ClassifierError> {
        let mut ids: Vec<&u32> = self.weights.keys().collect();
        ids.sort_unstable();
        let mut weights = Vec::new();
        for id in ids {
            for (k, &w) in self.weights[id].iter().enumerate() {
                if w != 0.0 {
                    weights.push((*id, k, w));
                }
            }
        }
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            labels: self.labels.as_slice().to_vec(),
            feature_space_bits: self.feature_space_bits,
            seed: self.seed,
            epoch_count: self.epoch_count,
            decision_threshold: self.decision_threshold,
            bias: self.bias.clone(),
            weights,
        };
        serde_json::to_writer(&mut writer, &file)
            .map_err(|e| ClassifierError::Format(e.to_string()))?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to memory cannot fail");
        buf
    }

    pub fn read_from<R: Read>(reader: R) -> Result<Self, ClassifierError> {
        let file: ModelFile =
            serde_json::from_reader(reader).map_err(|e| ClassifierError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(ClassifierError::Format(format!(
                "expected {MODEL_FORMAT} version {MODEL_VERSION}, found {} version {}",
                file.format, file.version
            )));
        }
        let labels =
            LabelSet::new(file.labels).map_err(|e| ClassifierError::Format(e.to_string()))?;
        if file.bias.len() != labels.len() {
            return Err(ClassifierError::Format(
                "bias length does not match label count".into(),
            ));
        }
        if !(1..=32).contains(&file.feature_space_bits) {
            return Err(ClassifierError::Format(
                "feature_space_bits out of range".into(),
            ));
        }
        let mut model = MultiLabelModel::zeros(
            labels,
            file.feature_space_bits,
            file.decision_threshold,
            file.seed,
        );
        model.bias = file.bias;
        model.epoch_count = file.epoch_count;
        let limit = 1u64 << file.feature_space_bits;
        for (id, k, w) in file.weights {
            if id as u64 >= limit || k >= model.labels.len() {
                return Err(ClassifierError::Format(format!(
                    "weight ({id}, {k}) out of range"
                )));
            }
            model.set_weight(id, k, w);
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    labels: Vec<String>,
    feature_space_bits: u32,
    seed: u64,
    epoch_count: usize,
    decision_threshold: f64,
    bias: Vec<f64>,
    weights: Vec<(u32, usize, f64)>,
}

/// Labels whose probability is at least the model's decision threshold.
pub fn predict_labels(model: &MultiLabelModel, instance: &EncodedInstance) -> BTreeSet<String> {
    predict_labels_at(model, instance, model.decision_threshold)
}

pub fn predict_labels_at(
    model: &MultiLabelModel,
    instance: &EncodedInstance,
    threshold: f64,
) -> BTreeSet<String> {
    model
        .scores(instance)
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| p >= threshold)
        .map(|(k, _)| {
            model
                .labels
                .get(k)
                .expect("score index within labels")
                .to_string()
        })
        .collect()
}

struct Prepared {
    features: Vec<u32>,
    targets: Vec<bool>,
}

fn prepare(
    data: &[(EncodedInstance, BTreeSet<String>)],
    labels: &LabelSet,
    hasher: &FeatureHasher,
) -> Result<Vec<Prepared>, ClassifierError> {
    data.iter()
        .map(|(instance, gold)| {
            if let Some(label) = labels.first_unknown(gold) {
                return Err(ClassifierError::UnknownLabel(label.to_string()));
            }
            Ok(Prepared {
                features: instance_features(instance, hasher),
                targets: labels.iter().map(|l| gold.contains(l)).collect(),
            })
        })
        .collect()
}

fn micro_f1(model: &MultiLabelModel, data: &[Prepared]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for item in data {
        for (z, &y) in model.logits(&item.features).into_iter().zip(&item.targets) {
            match (sigmoid(z) >= model.decision_threshold, y) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    crate::evaluation::Prf::from_counts(tp, fp, fn_).f1
}

/// Trains one logistic head per label with SGD, reshuffling the training
/// order every epoch from `config.seed`. Early stopping keeps the epoch with
/// the best dev micro-F1; with an empty dev set every epoch runs and the
/// final model is returned.
pub fn train_multilabel(
    train: &[(EncodedInstance, BTreeSet<String>)],
    dev: &[(EncodedInstance, BTreeSet<String>)],
    labels: &LabelSet,
    config: &ClassifierConfig,
) -> Result<MultiLabelModel, ClassifierError> {
    if train.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if config.max_epochs == 0 {
        return Err(ClassifierError::NoEpochs);
    }
    let hasher = FeatureHasher::new(config.feature_space_bits);
    let train = prepare(train, labels, &hasher)?;
    let dev = prepare(dev, labels, &hasher)?;

    let mut model = MultiLabelModel::zeros(
        labels.clone(),
        config.feature_space_bits,
        config.decision_threshold,
        config.seed,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(f64, MultiLabelModel)> = None;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let g = model.gradient(&train[i].features, &train[i].targets);
            model.apply(&g, config.learning_rate);
        }
        model.epoch_count = epoch;
        if dev.is_empty() {
            continue;
        }
        let f1 = micro_f1(&model, &dev);
        match &best {
            Some((best_f1, _)) if f1 <= *best_f1 => {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
            _ => {
                best = Some((f1, model.clone()));
                stale = 0;
            }
        }
    }
    Ok(match best {
        Some((_, m)) => m,
        None => model,
    })
}
