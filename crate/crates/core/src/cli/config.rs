//! Run configuration: a flat TOML file with an explicit schema version.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::ClassifierConfig;
use crate::corpus::{LabelSet, SplitSpec, APPRAISAL_LABELS, EMOTION_LABELS, MAX_APPRAISAL_SCORE};
use crate::evaluation::{MatchMode, ReportFormat};
use crate::pipeline::{PipelineConfig, TrainingConfig};
use crate::span_tagger::TaggerConfig;

pub const CONFIG_SCHEMA_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error(
        "config schema_version `{found}` is not supported (expected `{CONFIG_SCHEMA_VERSION}`)"
    )]
    SchemaVersion { found: String },
    #[error("config value `{key}` {message}")]
    Invalid { key: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: String,

    pub corpus: PathBuf,
    pub model_dir: PathBuf,
    pub out_dir: PathBuf,

    pub seed: u64,
    pub train_count: usize,
    pub dev_count: usize,
    pub test_count: usize,

    pub tagger_max_epochs: usize,
    pub tagger_patience: usize,
    pub tagger_feature_bits: u32,

    pub classifier_max_epochs: usize,
    pub classifier_patience: usize,
    pub learning_rate: f64,
    pub classifier_feature_bits: u32,
    pub decision_threshold: f64,

    pub appraisal_threshold: u8,
    pub include_writer_prefix: bool,
    pub emotion_labels: Vec<String>,
    pub appraisal_labels: Vec<String>,

    pub match_mode: MatchMode,
    pub include_writer: bool,
    pub format: ReportFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        let split = SplitSpec::standard(42);
        let tagger = TaggerConfig::new(42);
        let classifier = ClassifierConfig::new(42);
        let pipeline = PipelineConfig::default();
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION.to_string(),
            corpus: PathBuf::from("corpus.jsonl"),
            model_dir: PathBuf::from("models"),
            out_dir: PathBuf::from("out"),
            seed: split.seed,
            train_count: split.train_count,
            dev_count: split.dev_count,
            test_count: split.test_count,
            tagger_max_epochs: tagger.max_epochs,
            tagger_patience: tagger.patience,
            tagger_feature_bits: tagger.feature_space_bits,
            classifier_max_epochs: classifier.max_epochs,
            classifier_patience: classifier.patience,
            learning_rate: classifier.learning_rate,
            classifier_feature_bits: classifier.feature_space_bits,
            decision_threshold: classifier.decision_threshold,
            appraisal_threshold: pipeline.appraisal_threshold,
            include_writer_prefix: pipeline.include_writer_prefix,
            emotion_labels: EMOTION_LABELS.iter().map(|s| s.to_string()).collect(),
            appraisal_labels: APPRAISAL_LABELS.iter().map(|s| s.to_string()).collect(),
            match_mode: MatchMode::Relaxed,
            include_writer: false,
            format: ReportFormat::Markdown,
        }
    }
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

impl RunConfig {
    /// Parses and validates a config file. Relative paths inside the file
    /// are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = RunConfig::parse(&text)?;
        if let Some(base) = path.parent() {
            for p in [
                &mut config.corpus,
                &mut config.model_dir,
                &mut config.out_dir,
            ] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion {
                found: self.schema_version.clone(),
            });
        }
        for (key, bits) in [
            ("tagger_feature_bits", self.tagger_feature_bits),
            ("classifier_feature_bits", self.classifier_feature_bits),
        ] {
            if !(1..=32).contains(&bits) {
                return Err(invalid(key, "must be between 1 and 32"));
            }
        }
        if self.tagger_max_epochs == 0 {
            return Err(invalid("tagger_max_epochs", "must be at least 1"));
        }
        if self.classifier_max_epochs == 0 {
            return Err(invalid("classifier_max_epochs", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid("learning_rate", "must be a positive number"));
        }
        if !(0.0..=1.0).contains(&self.decision_threshold) {
            return Err(invalid("decision_threshold", "must be within [0, 1]"));
        }
        if self.appraisal_threshold > MAX_APPRAISAL_SCORE {
            return Err(invalid(
                "appraisal_threshold",
                format!("must be within [0, {MAX_APPRAISAL_SCORE}]"),
            ));
        }
        LabelSet::new(self.emotion_labels.clone())
            .map_err(|e| invalid("emotion_labels", e.to_string()))?;
        let appraisals = LabelSet::new(self.appraisal_labels.clone())
            .map_err(|e| invalid("appraisal_labels", e.to_string()))?;
        if let Some(label) = appraisals.iter().find(|l| !APPRAISAL_LABELS.contains(l)) {
            return Err(invalid(
                "appraisal_labels",
                format!("contains unknown dimension `{label}`"),
            ));
        }
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_count: self.train_count,
            dev_count: self.dev_count,
            test_count: self.test_count,
            seed: self.seed,
        }
    }

    pub fn emotion_label_set(&self) -> LabelSet {
        LabelSet::new(self.emotion_labels.clone()).expect("validated")
    }

    pub fn appraisal_label_set(&self) -> LabelSet {
        LabelSet::new(self.appraisal_labels.clone()).expect("validated")
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            appraisal_threshold: self.appraisal_threshold,
            include_writer_prefix: self.include_writer_prefix,
        }
    }

    pub fn training_config(&self) -> TrainingConfig {
        let classifier = ClassifierConfig {
            max_epochs: self.classifier_max_epochs,
            patience: self.classifier_patience,
            learning_rate: self.learning_rate,
            decision_threshold: self.decision_threshold,
            seed: self.seed,
            feature_space_bits: self.classifier_feature_bits,
        };
        TrainingConfig {
            tagger: TaggerConfig {
                max_epochs: self.tagger_max_epochs,
                patience: self.tagger_patience,
                seed: self.seed,
                feature_space_bits: self.tagger_feature_bits,
            },
            emotion: classifier,
            appraisal: classifier,
            pipeline: self.pipeline_config(),
            emotion_labels: self.emotion_label_set(),
            appraisal_labels: self.appraisal_label_set(),
        }
    }

    /// SHA-256 over every setting except file locations, so that moving a
    /// run directory does not change the hash.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.corpus = PathBuf::new();
        canonical.model_dir = PathBuf::new();
        canonical.out_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
