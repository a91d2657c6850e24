use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CliError, Command, CommonArgs, EvalMode, RunConfig};
use crate::classifier::MultiLabelModel;
use crate::corpus::{
    load_corpus_with, load_unlabeled, split_corpus, write_corpus, Corpus, CorpusError, Span,
    SCHEMA_VERSION,
};
use crate::evaluation::{percent, span_prf, EvaluationReport};
use crate::pipeline::{
    evaluate_records, read_predictions, run_gold_mode, run_pipeline_mode, run_pipeline_mode_on,
    train_bundle, write_predictions, PipelineBundle, PredictionRecord,
};
use crate::span_tagger::TaggerModel;

const TAGGER_FILE: &str = "tagger.json";
const EMOTION_FILE: &str = "emotion.json";
const APPRAISAL_FILE: &str = "appraisal.json";
const MANIFEST_FILE: &str = "manifest.json";

pub(super) fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { corpus, common } => validate(corpus, &common),
        Command::Split { common } => split(&common),
        Command::Train { common } => train(&common),
        Command::Evaluate {
            mode,
            models,
            common,
        } => evaluate(mode, models, &common),
        Command::Predict {
            input,
            models,
            common,
        } => predict(&input, models, &common),
        Command::Report {
            gold,
            pipeline,
            corpus,
            common,
        } => report(gold, pipeline, corpus, &common),
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::data)?;
    tmp.write_all(bytes).map_err(CliError::data)?;
    tmp.persist(path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn load(config: &RunConfig, path: &Path) -> Result<Corpus, CliError> {
    load_corpus_with(
        path,
        SCHEMA_VERSION,
        &config.emotion_label_set(),
        &config.appraisal_label_set(),
    )
    .map_err(CliError::data)
}

fn split_parts(config: &RunConfig, corpus: &Corpus) -> Result<(Corpus, Corpus, Corpus), CliError> {
    split_corpus(corpus, &config.split_spec()).map_err(|e| match e {
        // The requested counts come from the configuration.
        CorpusError::SplitTooLarge { .. } => CliError::Usage(e.to_string()),
        other => CliError::data(other),
    })
}

fn validate(corpus: Option<PathBuf>, common: &CommonArgs) -> Result<(), CliError> {
    let config = common.resolve()?;
    let path = corpus.unwrap_or_else(|| config.corpus.clone());
    let corpus = load(&config, &path)?;

    let mut out = String::new();
    out.push_str(&format!("corpus: {}\n", path.display()));
    out.push_str(&format!("loaded: {}\n", corpus.len()));
    out.push_str(&format!(
        "excluded (overlapping spans): {}\n",
        corpus.excluded_count()
    ));
    let annotations = corpus.documents.iter().flat_map(|d| &d.annotations);
    let writer = annotations.clone().filter(|a| a.is_writer).count();
    out.push_str(&format!(
        "spans: {} (writer {writer}, non-writer {})\n",
        corpus.annotation_count(),
        corpus.annotation_count() - writer
    ));
    out.push_str("emotions:\n");
    for label in config.emotion_label_set().iter() {
        let n = annotations
            .clone()
            .filter(|a| a.emotions.contains(label))
            .count();
        out.push_str(&format!("  {label}: {n}\n"));
    }
    out.push_str(&format!(
        "appraisals (score >= {}):\n",
        config.appraisal_threshold
    ));
    for label in config.appraisal_label_set().iter() {
        let n = annotations
            .clone()
            .filter(|a| {
                a.appraisal_scores
                    .get(label)
                    .is_some_and(|&s| s >= config.appraisal_threshold)
            })
            .count();
        out.push_str(&format!("  {label}: {n}\n"));
    }
    print!("{out}");
    Ok(())
}

fn split(common: &CommonArgs) -> Result<(), CliError> {
    let config = common.resolve()?;
    let corpus = load(&config, &config.corpus)?;
    let (train, dev, test) = split_parts(&config, &corpus)?;
    let dir = common.out.clone().unwrap_or_else(|| config.out_dir.clone());
    for (name, part) in [("train", &train), ("dev", &dev), ("test", &test)] {
        let mut buf = Vec::new();
        write_corpus(&mut buf, &part.documents).map_err(CliError::data)?;
        let path = dir.join(format!("{name}.jsonl"));
        write_atomic(&path, &buf)?;
        println!("{name}: {} documents -> {}", part.len(), path.display());
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    seed: u64,
    config_hash: String,
    corpus_sha256: String,
    split: BTreeMap<String, usize>,
    models: BTreeMap<String, String>,
    epochs: BTreeMap<String, usize>,
    dev_metrics: BTreeMap<String, f64>,
}

fn train(common: &CommonArgs) -> Result<(), CliError> {
    let config = common.resolve()?;
    let corpus = load(&config, &config.corpus)?;
    let (train, dev, _) = split_parts(&config, &corpus)?;
    let bundle = train_bundle(&train, &dev, &config.training_config()).map_err(CliError::data)?;
    let dir = common
        .out
        .clone()
        .unwrap_or_else(|| config.model_dir.clone());

    let files = [
        (TAGGER_FILE, bundle.tagger.to_bytes()),
        (EMOTION_FILE, bundle.emotion_model.to_bytes()),
        (APPRAISAL_FILE, bundle.appraisal_model.to_bytes()),
    ];
    let mut models = BTreeMap::new();
    for (name, bytes) in &files {
        write_atomic(&dir.join(name), bytes)?;
        models.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
    }

    let dev_report = evaluate_bundle(&bundle, &dev, EvalMode::Both, &config)?;
    let mut dev_metrics = BTreeMap::new();
    if let Some(spans) = &dev_report.spans {
        dev_metrics.insert(
            "span_f1_relaxed_excl_writer".to_string(),
            spans.excl_writer.relaxed.f1,
        );
        dev_metrics.insert(
            "span_f1_strict_excl_writer".to_string(),
            spans.excl_writer.strict.f1,
        );
    }
    for (key, table) in [
        ("emotion", &dev_report.emotions),
        ("appraisal", &dev_report.appraisals),
    ] {
        if let Some(gold) = &table.gold {
            dev_metrics.insert(format!("{key}_gold_micro_f1"), gold.aggregate.micro_avg.f1);
        }
        if let Some(pipeline) = &table.pipeline {
            dev_metrics.insert(
                format!("{key}_pipeline_micro_f1"),
                pipeline.aggregate.micro_avg.f1,
            );
        }
    }
    let manifest = Manifest {
        format: "emoter-manifest".to_string(),
        version: 1,
        seed: config.seed,
        config_hash: config.hash(),
        corpus_sha256: sha256_file(&config.corpus)?,
        split: BTreeMap::from([
            ("train".to_string(), train.len()),
            ("dev".to_string(), dev.len()),
            ("test".to_string(), config.test_count),
        ]),
        models,
        epochs: BTreeMap::from([
            ("tagger".to_string(), bundle.tagger.epoch_count()),
            ("emotion".to_string(), bundle.emotion_model.epoch_count()),
            (
                "appraisal".to_string(),
                bundle.appraisal_model.epoch_count(),
            ),
        ]),
        dev_metrics,
    };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(CliError::data)?;
    json.push('\n');
    write_atomic(&dir.join(MANIFEST_FILE), json.as_bytes())?;
    println!(
        "trained on {} documents (dev {}); models in {}",
        train.len(),
        dev.len(),
        dir.display()
    );
    Ok(())
}

/// Reads one model file; errors name the path.
fn read_model<T, E: std::fmt::Display>(
    path: &Path,
    read: impl FnOnce(BufReader<File>) -> Result<T, E>,
) -> Result<T, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open model file {}: {e}", path.display())))?;
    read(BufReader::new(file)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_bundle(dir: &Path, config: &RunConfig) -> Result<PipelineBundle, CliError> {
    Ok(PipelineBundle {
        tagger: read_model(&dir.join(TAGGER_FILE), TaggerModel::read_from)?,
        emotion_model: read_model(&dir.join(EMOTION_FILE), MultiLabelModel::read_from)?,
        appraisal_model: read_model(&dir.join(APPRAISAL_FILE), MultiLabelModel::read_from)?,
        config: config.pipeline_config(),
    })
}

fn evaluate_bundle(
    bundle: &PipelineBundle,
    corpus: &Corpus,
    mode: EvalMode,
    config: &RunConfig,
) -> Result<EvaluationReport, CliError> {
    let (gold, pipeline) = predictions(bundle, corpus, mode)?;
    evaluate_records(
        corpus,
        gold.as_deref(),
        pipeline.as_deref(),
        bundle.emotion_model.labels(),
        bundle.appraisal_model.labels(),
        config.appraisal_threshold,
    )
    .map_err(CliError::data)
}

type Predictions = (Option<Vec<PredictionRecord>>, Option<Vec<PredictionRecord>>);

fn predictions(
    bundle: &PipelineBundle,
    corpus: &Corpus,
    mode: EvalMode,
) -> Result<Predictions, CliError> {
    let gold = match mode {
        EvalMode::Gold | EvalMode::Both => {
            Some(run_gold_mode(bundle, corpus).map_err(CliError::data)?)
        }
        EvalMode::Pipeline => None,
    };
    let pipeline = match mode {
        EvalMode::Pipeline | EvalMode::Both => {
            Some(run_pipeline_mode(bundle, corpus).map_err(CliError::data)?)
        }
        EvalMode::Gold => None,
    };
    Ok((gold, pipeline))
}

fn dump(records: &[PredictionRecord]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_predictions(&mut buf, records).map_err(CliError::data)?;
    Ok(buf)
}

/// Writes the rendered report files into `dir` and prints the headline span
/// score selected by the match and writer settings.
fn emit_report(
    report: &EvaluationReport,
    corpus: &Corpus,
    pipeline: Option<&[PredictionRecord]>,
    dir: &Path,
    config: &RunConfig,
) -> Result<(), CliError> {
    for (name, content) in report.render(config.format) {
        write_atomic(&dir.join(name), content.as_bytes())?;
    }
    if let Some(records) = pipeline {
        let predicted: Vec<Vec<Span>> = corpus
            .documents
            .iter()
            .map(|d| {
                records
                    .iter()
                    .filter(|r| r.doc_id == d.id)
                    .map(|r| r.span())
                    .collect()
            })
            .collect();
        let prf = span_prf(
            &corpus.documents,
            &predicted,
            config.match_mode,
            config.include_writer,
        )
        .map_err(CliError::data)?;
        println!(
            "span F1 ({}, {} writer): {}",
            config.match_mode,
            if config.include_writer {
                "incl."
            } else {
                "excl."
            },
            percent(prf.f1)
        );
    }
    for (name, table) in [
        ("emotion", &report.emotions),
        ("appraisal", &report.appraisals),
    ] {
        for (setting, result) in [("gold spans", &table.gold), ("pipeline", &table.pipeline)] {
            if let Some(r) = result {
                println!(
                    "{name} micro F1 ({setting}): {}",
                    percent(r.aggregate.micro_avg.f1)
                );
            }
        }
    }
    println!("report written to {}", dir.display());
    Ok(())
}

fn provenance(
    config: &RunConfig,
    model_dir: Option<&Path>,
    extra: &[(&str, String)],
) -> Result<Vec<(String, String)>, CliError> {
    let mut p = vec![("config_sha256".to_string(), config.hash())];
    if config.corpus.exists() {
        p.push(("corpus_sha256".to_string(), sha256_file(&config.corpus)?));
    }
    if let Some(dir) = model_dir {
        let manifest = dir.join(MANIFEST_FILE);
        if manifest.exists() {
            p.push(("model_manifest_sha256".to_string(), sha256_file(&manifest)?));
        }
    }
    p.push(("seed".to_string(), config.seed.to_string()));
    p.push((
        "appraisal_threshold".to_string(),
        config.appraisal_threshold.to_string(),
    ));
    for (k, v) in extra {
        p.push((k.to_string(), v.clone()));
    }
    Ok(p)
}

fn evaluate(mode: EvalMode, models: Option<PathBuf>, common: &CommonArgs) -> Result<(), CliError> {
    let config = common.resolve()?;
    let model_dir = models.unwrap_or_else(|| config.model_dir.clone());
    let bundle = load_bundle(&model_dir, &config)?;
    let corpus = load(&config, &config.corpus)?;
    let (_, _, test) = split_parts(&config, &corpus)?;
    let dir = common.out.clone().unwrap_or_else(|| config.out_dir.clone());

    let (gold, pipeline) = predictions(&bundle, &test, mode)?;
    if let Some(records) = &gold {
        write_atomic(&dir.join("gold_predictions.jsonl"), &dump(records)?)?;
    }
    if let Some(records) = &pipeline {
        write_atomic(&dir.join("pipeline_predictions.jsonl"), &dump(records)?)?;
    }
    let mut report = evaluate_records(
        &test,
        gold.as_deref(),
        pipeline.as_deref(),
        bundle.emotion_model.labels(),
        bundle.appraisal_model.labels(),
        config.appraisal_threshold,
    )
    .map_err(CliError::data)?;
    let mode_name = match mode {
        EvalMode::Gold => "gold",
        EvalMode::Pipeline => "pipeline",
        EvalMode::Both => "both",
    };
    report.provenance = provenance(
        &config,
        Some(&model_dir),
        &[("mode", mode_name.to_string())],
    )?;
    emit_report(&report, &test, pipeline.as_deref(), &dir, &config)
}

fn predict(input: &Path, models: Option<PathBuf>, common: &CommonArgs) -> Result<(), CliError> {
    let config = common.resolve()?;
    let model_dir = models.unwrap_or_else(|| config.model_dir.clone());
    let bundle = load_bundle(&model_dir, &config)?;
    let docs = load_unlabeled(input, SCHEMA_VERSION).map_err(CliError::data)?;
    let records = run_pipeline_mode_on(&bundle, &docs, &bundle.tagger).map_err(CliError::data)?;
    let bytes = dump(&records)?;
    match &common.out {
        Some(path) => write_atomic(path, &bytes),
        None => io::stdout().write_all(&bytes).map_err(CliError::data),
    }
}

fn read_dump(path: &Path) -> Result<Vec<PredictionRecord>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    read_predictions(BufReader::new(file))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn report(
    gold: Option<PathBuf>,
    pipeline: Option<PathBuf>,
    corpus: Option<PathBuf>,
    common: &CommonArgs,
) -> Result<(), CliError> {
    if gold.is_none() && pipeline.is_none() {
        return Err(CliError::Usage(
            "report needs --gold and/or --pipeline predictions".into(),
        ));
    }
    let config = common.resolve()?;
    let test = match &corpus {
        Some(path) => load(&config, path)?,
        None => split_parts(&config, &load(&config, &config.corpus)?)?.2,
    };
    let gold = gold.as_deref().map(read_dump).transpose()?;
    let pipeline = pipeline.as_deref().map(read_dump).transpose()?;
    let mut report = evaluate_records(
        &test,
        gold.as_deref(),
        pipeline.as_deref(),
        &config.emotion_label_set(),
        &config.appraisal_label_set(),
        config.appraisal_threshold,
    )
    .map_err(CliError::data)?;
    let mut extra = Vec::new();
    if let Some(path) = &corpus {
        extra.push(("scored_corpus_sha256", sha256_file(path)?));
    }
    report.provenance = provenance(&config, None, &extra)?;
    let dir = common.out.clone().unwrap_or_else(|| config.out_dir.clone());
    emit_report(&report, &test, pipeline.as_deref(), &dir, &config)
}
