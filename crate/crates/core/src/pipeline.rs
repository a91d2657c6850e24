//! Gold-spans and pipeline regimes and the evaluation report over both.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::classifier::{
    encode_tokens, predict_labels, train_multilabel, ClassifierConfig, ClassifierError,
    EncodeOptions, EncodedInstance, MultiLabelModel,
};
use crate::corpus::{discretize_appraisals, Corpus, LabelSet, Span, Token, UnlabeledDocument};
use crate::evaluation::{
    gold_labeled_spans, gold_span_label_eval, pipeline_label_eval, span_counts,
    span_label_frequency, EvalError, EvaluationReport, LabelKind, LabelResult, LabelTable,
    LabeledSpan, MatchMode, ModePair, SpanMetrics, WriterFilter,
};
use crate::span_tagger::{train_tagger, TaggerConfig, TaggerError, TaggerModel};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Evaluation(#[from] EvalError),
    #[error("prediction for unknown document `{0}`")]
    UnknownDocument(String),
    #[error("prediction dump line {line}: {message}")]
    Dump { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Appraisal scores at or above this value count as gold positives.
    pub appraisal_threshold: u8,
    pub include_writer_prefix: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            appraisal_threshold: 4,
            include_writer_prefix: true,
        }
    }
}

impl PipelineConfig {
    fn encode_options(&self) -> EncodeOptions {
        EncodeOptions {
            include_writer_prefix: self.include_writer_prefix,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineBundle {
    pub tagger: TaggerModel,
    pub emotion_model: MultiLabelModel,
    pub appraisal_model: MultiLabelModel,
    pub config: PipelineConfig,
}

/// One classified span, as written to the prediction dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub is_writer: bool,
    pub emotions: BTreeSet<String>,
    pub appraisals: BTreeSet<String>,
}

impl PredictionRecord {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

/// Anything that proposes experiencer spans for a document.
pub trait SpanDetector {
    fn detect(&self, doc: &UnlabeledDocument) -> Vec<Span>;
}

impl SpanDetector for TaggerModel {
    fn detect(&self, doc: &UnlabeledDocument) -> Vec<Span> {
        self.predict_spans(&doc.tokens)
    }
}

/// Returns the gold spans of a corpus, looked up by document id.
#[derive(Debug, Clone, Default)]
pub struct OracleDetector {
    spans: HashMap<String, Vec<Span>>,
}

impl OracleDetector {
    pub fn new(corpus: &Corpus) -> Self {
        OracleDetector {
            spans: corpus
                .documents
                .iter()
                .map(|d| (d.id.clone(), d.spans()))
                .collect(),
        }
    }
}

impl SpanDetector for OracleDetector {
    fn detect(&self, doc: &UnlabeledDocument) -> Vec<Span> {
        self.spans.get(&doc.id).cloned().unwrap_or_default()
    }
}

/// A detector that finds nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullDetector;

impl SpanDetector for NullDetector {
    fn detect(&self, _doc: &UnlabeledDocument) -> Vec<Span> {
        Vec::new()
    }
}

fn classify(
    bundle: &PipelineBundle,
    doc_id: &str,
    tokens: &[Token],
    mut spans: Vec<Span>,
    is_writer: impl Fn(&Span) -> bool,
) -> Result<Vec<PredictionRecord>, ClassifierError> {
    spans.sort();
    spans
        .into_iter()
        .map(|span| {
            let instance = encode_tokens(tokens, span, bundle.config.encode_options())?;
            Ok(PredictionRecord {
                doc_id: doc_id.to_string(),
                start: span.start,
                end: span.end,
                is_writer: is_writer(&span),
                emotions: predict_labels(&bundle.emotion_model, &instance),
                appraisals: predict_labels(&bundle.appraisal_model, &instance),
            })
        })
        .collect()
}

/// Classifies every gold span. Records are ordered by document, then span.
pub fn run_gold_mode(
    bundle: &PipelineBundle,
    corpus: &Corpus,
) -> Result<Vec<PredictionRecord>, PipelineError> {
    let mut out = Vec::new();
    for doc in &corpus.documents {
        out.extend(classify(bundle, &doc.id, &doc.tokens, doc.spans(), |s| {
            doc.is_writer_span(s)
        })?);
    }
    Ok(out)
}

/// Detects spans with the bundled tagger and classifies them. Annotations
/// are stripped before the documents reach the detector.
pub fn run_pipeline_mode(
    bundle: &PipelineBundle,
    corpus: &Corpus,
) -> Result<Vec<PredictionRecord>, PipelineError> {
    let docs: Vec<UnlabeledDocument> = corpus.documents.iter().map(|d| d.strip()).collect();
    run_pipeline_mode_on(bundle, &docs, &bundle.tagger)
}

pub fn run_pipeline_mode_on<D: SpanDetector + ?Sized>(
    bundle: &PipelineBundle,
    docs: &[UnlabeledDocument],
    detector: &D,
) -> Result<Vec<PredictionRecord>, PipelineError> {
    let mut out = Vec::new();
    for doc in docs {
        let spans = detector.detect(doc);
        out.extend(classify(bundle, &doc.id, &doc.tokens, spans, |s| {
            doc.is_writer_span(s)
        })?);
    }
    Ok(out)
}

/// Groups records per corpus document, in corpus order.
fn group<'a>(
    corpus: &Corpus,
    records: &'a [PredictionRecord],
) -> Result<Vec<Vec<&'a PredictionRecord>>, PipelineError> {
    let index: HashMap<&str, usize> = corpus
        .documents
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i))
        .collect();
    let mut grouped = vec![Vec::new(); corpus.len()];
    for r in records {
        let i = *index
            .get(r.doc_id.as_str())
            .ok_or_else(|| PipelineError::UnknownDocument(r.doc_id.clone()))?;
        grouped[i].push(r);
    }
    Ok(grouped)
}

fn labeled(grouped: &[Vec<&PredictionRecord>], emotions: bool) -> Vec<Vec<LabeledSpan>> {
    grouped
        .iter()
        .map(|doc| {
            doc.iter()
                .map(|r| LabeledSpan {
                    span: r.span(),
                    is_writer: r.is_writer,
                    labels: if emotions {
                        r.emotions.clone()
                    } else {
                        r.appraisals.clone()
                    },
                })
                .collect()
        })
        .collect()
}

fn span_metrics(
    corpus: &Corpus,
    grouped: &[Vec<&PredictionRecord>],
) -> Result<SpanMetrics, EvalError> {
    let predicted: Vec<Vec<Span>> = grouped
        .iter()
        .map(|doc| doc.iter().map(|r| r.span()).collect())
        .collect();
    let prf =
        |mode, filter| span_counts(&corpus.documents, &predicted, mode, filter).map(|c| c.prf());
    Ok(SpanMetrics {
        incl_writer: ModePair {
            strict: prf(MatchMode::Strict, WriterFilter::Include)?,
            relaxed: prf(MatchMode::Relaxed, WriterFilter::Include)?,
        },
        excl_writer: ModePair {
            strict: prf(MatchMode::Strict, WriterFilter::Exclude)?,
            relaxed: prf(MatchMode::Relaxed, WriterFilter::Exclude)?,
        },
        writer_only: prf(MatchMode::Strict, WriterFilter::Only)?,
    })
}

/// Builds the evaluation report from gold-mode and/or pipeline-mode records.
/// Span metrics need pipeline records. Appraisal gold sets are discretized
/// at `appraisal_threshold` here, so one corpus supports threshold sweeps.
pub fn evaluate_records(
    corpus: &Corpus,
    gold_records: Option<&[PredictionRecord]>,
    pipeline_records: Option<&[PredictionRecord]>,
    emotion_labels: &LabelSet,
    appraisal_labels: &LabelSet,
    appraisal_threshold: u8,
) -> Result<EvaluationReport, PipelineError> {
    let gold_emotions: Vec<Vec<LabeledSpan>> = corpus
        .documents
        .iter()
        .map(|d| gold_labeled_spans(d, LabelKind::Emotion))
        .collect();
    let gold_appraisals: Vec<Vec<LabeledSpan>> = corpus
        .documents
        .iter()
        .map(|d| {
            gold_labeled_spans(
                d,
                LabelKind::Appraisal {
                    threshold: appraisal_threshold,
                },
            )
        })
        .collect();

    let mut emotions = LabelTable {
        labels: emotion_labels.clone(),
        gold: None,
        pipeline: None,
    };
    let mut appraisals = LabelTable {
        labels: appraisal_labels.clone(),
        gold: None,
        pipeline: None,
    };
    let mut spans = None;

    if let Some(records) = gold_records {
        let grouped = group(corpus, records)?;
        emotions.gold = Some(LabelResult::new(gold_span_label_eval(
            &gold_emotions,
            &labeled(&grouped, true),
            emotion_labels,
        )?));
        appraisals.gold = Some(LabelResult::new(gold_span_label_eval(
            &gold_appraisals,
            &labeled(&grouped, false),
            appraisal_labels,
        )?));
    }
    if let Some(records) = pipeline_records {
        let grouped = group(corpus, records)?;
        spans = Some(span_metrics(corpus, &grouped)?);
        emotions.pipeline = Some(LabelResult::new(pipeline_label_eval(
            &gold_emotions,
            &labeled(&grouped, true),
            emotion_labels,
        )?));
        appraisals.pipeline = Some(LabelResult::new(pipeline_label_eval(
            &gold_appraisals,
            &labeled(&grouped, false),
            appraisal_labels,
        )?));
    }

    Ok(EvaluationReport {
        spans,
        emotions,
        appraisals,
        emotion_frequency: span_label_frequency(gold_emotions.iter().flatten(), emotion_labels),
        appraisal_frequency: span_label_frequency(
            gold_appraisals.iter().flatten(),
            appraisal_labels,
        ),
        provenance: Vec::new(),
    })
}

/// Runs both regimes on `corpus` and assembles the full report.
pub fn full_report(
    bundle: &PipelineBundle,
    corpus: &Corpus,
) -> Result<EvaluationReport, PipelineError> {
    let gold = run_gold_mode(bundle, corpus)?;
    let pipeline = run_pipeline_mode(bundle, corpus)?;
    evaluate_records(
        corpus,
        Some(&gold),
        Some(&pipeline),
        bundle.emotion_model.labels(),
        bundle.appraisal_model.labels(),
        bundle.config.appraisal_threshold,
    )
}

/// Hyperparameters for training all three models of a bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub tagger: TaggerConfig,
    pub emotion: ClassifierConfig,
    pub appraisal: ClassifierConfig,
    pub pipeline: PipelineConfig,
    pub emotion_labels: LabelSet,
    pub appraisal_labels: LabelSet,
}

impl TrainingConfig {
    pub fn new(seed: u64) -> Self {
        TrainingConfig {
            tagger: TaggerConfig::new(seed),
            emotion: ClassifierConfig::new(seed),
            appraisal: ClassifierConfig::new(seed),
            pipeline: PipelineConfig::default(),
            emotion_labels: LabelSet::emotions(),
            appraisal_labels: LabelSet::appraisals(),
        }
    }
}

/// Classifier training instances from the gold spans of `corpus`: emotion
/// sets, or appraisal sets discretized at `appraisal_threshold` when
/// `emotions` is false.
pub fn classifier_instances(
    corpus: &Corpus,
    emotions: bool,
    config: &PipelineConfig,
) -> Result<Vec<(EncodedInstance, BTreeSet<String>)>, ClassifierError> {
    let mut out = Vec::new();
    for doc in &corpus.documents {
        for ann in &doc.annotations {
            let instance = encode_tokens(&doc.tokens, ann.span, config.encode_options())?;
            let labels = if emotions {
                ann.emotions.clone()
            } else {
                discretize_appraisals(ann, config.appraisal_threshold)
            };
            out.push((instance, labels));
        }
    }
    Ok(out)
}

/// Trains the tagger and both classifiers on the gold spans of `train`,
/// selecting epochs on `dev`.
pub fn train_bundle(
    train: &Corpus,
    dev: &Corpus,
    config: &TrainingConfig,
) -> Result<PipelineBundle, PipelineError> {
    let tagger = train_tagger(train, dev, &config.tagger)?;
    let emotion_model = train_multilabel(
        &classifier_instances(train, true, &config.pipeline)?,
        &classifier_instances(dev, true, &config.pipeline)?,
        &config.emotion_labels,
        &config.emotion,
    )?;
    let appraisal_model = train_multilabel(
        &classifier_instances(train, false, &config.pipeline)?,
        &classifier_instances(dev, false, &config.pipeline)?,
        &config.appraisal_labels,
        &config.appraisal,
    )?;
    Ok(PipelineBundle {
        tagger,
        emotion_model,
        appraisal_model,
        config: config.pipeline,
    })
}

/// Writes records as JSON lines.
pub fn write_predictions<W: Write>(
    mut writer: W,
    records: &[PredictionRecord],
) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictionRecord>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| PipelineError::Dump {
                line: i + 1,
                message: e.to_string(),
            })?;
        if record.start >= record.end {
            return Err(PipelineError::Dump {
                line: i + 1,
                message: format!("empty span [{}, {})", record.start, record.end),
            });
        }
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::MultiLabelModel;
    use crate::corpus::{
        inject_writer_token, Document, ExperiencerAnnotation, ExperiencerLabels, LabelSet,
    };
    use crate::span_tagger::{train_tagger, TaggerConfig};

    fn corpus() -> Corpus {
        let mut d = inject_writer_token(
            Document::from_text("d1", "then Anna cried"),
            Some(ExperiencerLabels::default()),
        )
        .unwrap();
        d.annotations.push(ExperiencerAnnotation::new(
            Span::new(2, 3),
            false,
            ExperiencerLabels::default(),
        ));
        Corpus::new(vec![d])
    }

    fn bundle(corpus: &Corpus) -> PipelineBundle {
        let mut config = TaggerConfig::new(0);
        config.max_epochs = 1;
        PipelineBundle {
            tagger: train_tagger(corpus, &Corpus::default(), &config).unwrap(),
            emotion_model: MultiLabelModel::zeros(LabelSet::emotions(), 16, 0.9, 0),
            appraisal_model: MultiLabelModel::zeros(LabelSet::appraisals(), 16, 0.9, 0),
            config: PipelineConfig::default(),
        }
    }

    #[test]
    fn gold_mode_yields_one_record_per_gold_span() {
        let c = corpus();
        let records = run_gold_mode(&bundle(&c), &c).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records[0].is_writer);
        assert_eq!(records[1].span(), Span::new(2, 3));
        assert!(run_gold_mode(&bundle(&c), &Corpus::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn oracle_detector_matches_gold_mode() {
        let c = corpus();
        let b = bundle(&c);
        let docs: Vec<_> = c.documents.iter().map(|d| d.strip()).collect();
        let oracle = run_pipeline_mode_on(&b, &docs, &OracleDetector::new(&c)).unwrap();
        assert_eq!(oracle, run_gold_mode(&b, &c).unwrap());
    }

    #[test]
    fn unknown_document_rejected() {
        let c = corpus();
        let mut records = run_gold_mode(&bundle(&c), &c).unwrap();
        records[0].doc_id = "nope".into();
        let err = evaluate_records(
            &c,
            Some(&records),
            None,
            &LabelSet::emotions(),
            &LabelSet::appraisals(),
            4,
        );
        assert!(matches!(err, Err(PipelineError::UnknownDocument(id)) if id == "nope"));
    }

    #[test]
    fn dump_round_trip() {
        let c = corpus();
        let records = run_gold_mode(&bundle(&c), &c).unwrap();
        let mut buf = Vec::new();
        write_predictions(&mut buf, &records).unwrap();
        assert_eq!(read_predictions(buf.as_slice()).unwrap(), records);
        assert!(matches!(
            read_predictions("{\"doc_id\":1}\n".as_bytes()),
            Err(PipelineError::Dump { line: 1, .. })
        ));
    }
}
