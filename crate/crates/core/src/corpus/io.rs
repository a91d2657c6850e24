//! Line-delimited JSON corpus files.
//!
//! One document per line:
//!
//! ```text
//! {"schema_version":"1","id":"d1","text":"I saw Anna cry .","spans":[
//!   {"start_token":0,"end_token":1,"is_writer":true,"emotions":["sadness"],"appraisals":{"suddenness":4}},
//!   {"start_token":3,"end_token":4,"is_writer":false,"emotions":["sadness"],"appraisals":{}}]}
//! ```
//!
//! `schema_version` is required on the first record and optional afterwards.
//! Token indices count the writer token, which sits at index 0.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    find_overlap, inject_writer_token, Corpus, CorpusError, Document, ExperiencerAnnotation,
    LabelSet, Span, UnlabeledDocument, MAX_APPRAISAL_SCORE,
};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<String>,
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub spans: Vec<SpanRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanRecord {
    pub start_token: usize,
    pub end_token: usize,
    pub is_writer: bool,
    #[serde(default)]
    pub emotions: Vec<String>,
    #[serde(default)]
    pub appraisals: BTreeMap<String, i64>,
}

pub fn load_corpus(path: impl AsRef<Path>, schema_version: &str) -> Result<Corpus, CorpusError> {
    load_corpus_with(
        path,
        schema_version,
        &LabelSet::emotions(),
        &LabelSet::appraisals(),
    )
}

pub fn load_corpus_with(
    path: impl AsRef<Path>,
    schema_version: &str,
    emotions: &LabelSet,
    appraisals: &LabelSet,
) -> Result<Corpus, CorpusError> {
    let reader = open(path.as_ref())?;
    read_corpus(reader, schema_version, emotions, appraisals)
}

/// Loads documents for prediction. Any annotations in the file are ignored.
pub fn load_unlabeled(
    path: impl AsRef<Path>,
    schema_version: &str,
) -> Result<Vec<UnlabeledDocument>, CorpusError> {
    read_unlabeled(open(path.as_ref())?, schema_version)
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
}

pub fn read_corpus<R: BufRead>(
    reader: R,
    schema_version: &str,
    emotions: &LabelSet,
    appraisals: &LabelSet,
) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    for (_, record) in records(reader, schema_version)? {
        let doc = build_document(record, emotions, appraisals)?;
        if find_overlap(&doc.spans()).is_some() {
            corpus.quarantine.push(doc);
        } else {
            corpus.documents.push(doc);
        }
    }
    Ok(corpus)
}

pub fn read_unlabeled<R: BufRead>(
    reader: R,
    schema_version: &str,
) -> Result<Vec<UnlabeledDocument>, CorpusError> {
    records(reader, schema_version)?
        .into_iter()
        .map(|(_, record)| {
            let doc = Document::from_text(record.id, record.text);
            Ok(inject_writer_token(doc, None)?.strip())
        })
        .collect()
}

/// Parses every non-blank line, checking the schema version and id uniqueness.
fn records<R: BufRead>(
    reader: R,
    schema_version: &str,
) -> Result<Vec<(usize, DocumentRecord)>, CorpusError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        let version_ok = match &record.schema_version {
            Some(v) => v == schema_version,
            None => !out.is_empty(),
        };
        if !version_ok {
            return Err(CorpusError::SchemaVersion {
                line: line_no,
                expected: schema_version.to_string(),
                found: record.schema_version,
            });
        }
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                id: record.id,
                line: line_no,
            });
        }
        out.push((line_no, record));
    }
    Ok(out)
}

fn build_document(
    record: DocumentRecord,
    emotions: &LabelSet,
    appraisals: &LabelSet,
) -> Result<Document, CorpusError> {
    let id = record.id;
    let mut doc = inject_writer_token(Document::from_text(id.clone(), record.text), None)?;
    let token_count = doc.tokens.len();
    let mut writer_seen = false;

    for span in record.spans {
        let (start, end) = (span.start_token, span.end_token);
        if start >= end || end > token_count {
            return Err(CorpusError::SpanOutOfRange {
                id,
                start,
                end,
                token_count,
            });
        }
        let span_range = Span::new(start, end);
        if span.is_writer != (span_range == Span::writer()) {
            return Err(CorpusError::InvalidWriterSpan { id });
        }
        if span.is_writer {
            if writer_seen {
                return Err(CorpusError::MultipleWriterAnnotations { id });
            }
            writer_seen = true;
        }
        if let Some(label) = emotions.first_unknown(&span.emotions) {
            return Err(CorpusError::UnknownLabel {
                id,
                kind: "emotion",
                label: label.to_string(),
            });
        }
        if let Some(label) = appraisals.first_unknown(span.appraisals.keys()) {
            return Err(CorpusError::UnknownLabel {
                id,
                kind: "appraisal",
                label: label.to_string(),
            });
        }
        let mut scores = BTreeMap::new();
        for (label, score) in span.appraisals {
            if !(0..=MAX_APPRAISAL_SCORE as i64).contains(&score) {
                return Err(CorpusError::AppraisalScoreOutOfRange { id, label, score });
            }
            scores.insert(label, score as u8);
        }
        doc.annotations.push(ExperiencerAnnotation {
            span: span_range,
            is_writer: span.is_writer,
            emotions: span.emotions.into_iter().collect::<BTreeSet<_>>(),
            appraisal_scores: scores,
        });
    }
    doc.annotations.sort_by_key(|a| a.span);
    Ok(doc)
}

impl DocumentRecord {
    pub fn from_document(doc: &Document) -> Self {
        DocumentRecord {
            schema_version: None,
            id: doc.id.clone(),
            text: doc.text.clone(),
            spans: doc
                .annotations
                .iter()
                .map(|a| SpanRecord {
                    start_token: a.span.start,
                    end_token: a.span.end,
                    is_writer: a.is_writer,
                    emotions: a.emotions.iter().cloned().collect(),
                    appraisals: a
                        .appraisal_scores
                        .iter()
                        .map(|(k, &v)| (k.clone(), v as i64))
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Writes documents in the corpus file format; the first record carries the
/// schema version.
pub fn write_corpus<'a, W, I>(mut writer: W, documents: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Document>,
{
    for (i, doc) in documents.into_iter().enumerate() {
        let mut record = DocumentRecord::from_document(doc);
        if i == 0 {
            record.schema_version = Some(SCHEMA_VERSION.to_string());
        }
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
