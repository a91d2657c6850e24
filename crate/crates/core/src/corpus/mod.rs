//! Documents, experiencer annotations, corpus loading and splitting.
//!
//! Token indices in annotations always refer to the tokenization *after* the
//! synthetic writer token has been prepended at index 0.

mod io;
mod labels;
mod tokenize;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use self::io::{
    load_corpus, load_corpus_with, load_unlabeled, read_corpus, read_unlabeled, write_corpus,
    DocumentRecord, SpanRecord, SCHEMA_VERSION,
};
pub use self::labels::{display_name, LabelSet, LabelSetError, APPRAISAL_LABELS, EMOTION_LABELS};
pub use self::tokenize::tokenize;

/// Surface form of the synthetic writer token.
pub const WRITER_SURFACE: &str = "writer";

/// Highest appraisal score in the annotation scale.
pub const MAX_APPRAISAL_SCORE: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub char_start: usize,
    pub char_end: usize,
    pub is_writer_token: bool,
}

impl Token {
    pub fn new(surface: impl Into<String>, char_start: usize, char_end: usize) -> Self {
        Token {
            surface: surface.into(),
            char_start,
            char_end,
            is_writer_token: false,
        }
    }

    pub fn writer() -> Self {
        Token {
            surface: WRITER_SURFACE.to_string(),
            char_start: 0,
            char_end: 0,
            is_writer_token: true,
        }
    }
}

/// Half-open token interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// # Panics
    ///
    /// If `start >= end`.
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start < end, "empty or inverted span [{start}, {end})");
        Span { start, end }
    }

    pub fn try_new(start: usize, end: usize) -> Option<Self> {
        (start < end).then_some(Span { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// Number of shared tokens.
    pub fn overlap(&self, other: &Span) -> usize {
        self.end
            .min(other.end)
            .saturating_sub(self.start.max(other.start))
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.overlap(other) > 0
    }

    pub fn shifted(&self, by: usize) -> Span {
        Span {
            start: self.start + by,
            end: self.end + by,
        }
    }

    pub fn writer() -> Span {
        Span { start: 0, end: 1 }
    }
}

/// Returns the first pair of overlapping spans, if any.
pub fn find_overlap(spans: &[Span]) -> Option<(Span, Span)> {
    let mut sorted = spans.to_vec();
    sorted.sort();
    sorted
        .windows(2)
        .find(|w| w[0].overlaps(&w[1]))
        .map(|w| (w[0], w[1]))
}

/// Emotion and appraisal annotations of one experiencer, without position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExperiencerLabels {
    pub emotions: BTreeSet<String>,
    pub appraisal_scores: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperiencerAnnotation {
    pub span: Span,
    pub is_writer: bool,
    pub emotions: BTreeSet<String>,
    pub appraisal_scores: BTreeMap<String, u8>,
}

impl ExperiencerAnnotation {
    pub fn new(span: Span, is_writer: bool, labels: ExperiencerLabels) -> Self {
        ExperiencerAnnotation {
            span,
            is_writer,
            emotions: labels.emotions,
            appraisal_scores: labels.appraisal_scores,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub annotations: Vec<ExperiencerAnnotation>,
}

impl Document {
    /// Tokenizes `text` without a writer token and without annotations.
    pub fn from_text(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        Document {
            id: id.into(),
            tokens: tokenize(&text),
            text,
            annotations: Vec::new(),
        }
    }

    pub fn has_writer_token(&self) -> bool {
        self.tokens.first().is_some_and(|t| t.is_writer_token)
    }

    pub fn writer_annotation(&self) -> Option<&ExperiencerAnnotation> {
        self.annotations.iter().find(|a| a.is_writer)
    }

    pub fn spans(&self) -> Vec<Span> {
        self.annotations.iter().map(|a| a.span).collect()
    }

    /// True if `span` is exactly the writer token of this document.
    pub fn is_writer_span(&self, span: &Span) -> bool {
        *span == Span::writer() && self.has_writer_token()
    }

    /// Drops the annotations. Everything downstream of the span detector in
    /// pipeline mode only ever sees this view.
    pub fn strip(&self) -> UnlabeledDocument {
        UnlabeledDocument {
            id: self.id.clone(),
            text: self.text.clone(),
            tokens: self.tokens.clone(),
        }
    }
}

/// A document with its annotations removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnlabeledDocument {
    pub id: String,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl UnlabeledDocument {
    pub fn is_writer_span(&self, span: &Span) -> bool {
        *span == Span::writer() && self.tokens.first().is_some_and(|t| t.is_writer_token)
    }
}

/// Prepends the writer token, shifting every existing span by one.
///
/// `writer` carries the labels of the writer experiencer when the source
/// marks the writer as experiencing an emotion; it is attached with span
/// `[0, 1)`. Fails if the document already starts with a writer token.
pub fn inject_writer_token(
    mut doc: Document,
    writer: Option<ExperiencerLabels>,
) -> Result<Document, CorpusError> {
    if doc.tokens.iter().any(|t| t.is_writer_token) {
        return Err(CorpusError::WriterTokenPresent { id: doc.id });
    }
    if doc.annotations.iter().any(|a| a.is_writer) {
        return Err(CorpusError::InvalidWriterSpan { id: doc.id });
    }
    doc.tokens.insert(0, Token::writer());
    for ann in &mut doc.annotations {
        ann.span = ann.span.shifted(1);
    }
    if let Some(labels) = writer {
        doc.annotations
            .insert(0, ExperiencerAnnotation::new(Span::writer(), true, labels));
    }
    Ok(doc)
}

/// Appraisal labels whose score is at least `threshold`.
pub fn discretize_appraisals(ann: &ExperiencerAnnotation, threshold: u8) -> BTreeSet<String> {
    ann.appraisal_scores
        .iter()
        .filter(|&(_, &score)| score >= threshold)
        .map(|(label, _)| label.clone())
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    /// Documents excluded at load because their gold spans overlap.
    pub quarantine: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Self {
        Corpus {
            documents,
            quarantine: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn excluded_count(&self) -> usize {
        self.quarantine.len()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.documents.iter().map(|d| d.id.as_str()).collect()
    }

    pub fn annotation_count(&self) -> usize {
        self.documents.iter().map(|d| d.annotations.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_count: usize,
    pub dev_count: usize,
    pub test_count: usize,
    pub seed: u64,
}

impl SplitSpec {
    /// 538 train, 61 dev, 107 test.
    pub fn standard(seed: u64) -> Self {
        SplitSpec {
            train_count: 538,
            dev_count: 61,
            test_count: 107,
            seed,
        }
    }

    pub fn total(&self) -> usize {
        self.train_count + self.dev_count + self.test_count
    }
}

/// Shuffles documents with a seeded ChaCha8 generator and cuts the result
/// into disjoint train, dev and test parts of the requested sizes.
pub fn split_corpus(
    corpus: &Corpus,
    spec: &SplitSpec,
) -> Result<(Corpus, Corpus, Corpus), CorpusError> {
    if spec.total() > corpus.len() {
        return Err(CorpusError::SplitTooLarge {
            requested: spec.total(),
            available: corpus.len(),
        });
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let take = |range: std::ops::Range<usize>| {
        Corpus::new(
            order[range]
                .iter()
                .map(|&i| corpus.documents[i].clone())
                .collect(),
        )
    };
    let train_end = spec.train_count;
    let dev_end = train_end + spec.dev_count;
    Ok((
        take(0..train_end),
        take(train_end..dev_end),
        take(dev_end..dev_end + spec.test_count),
    ))
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: expected schema_version {expected:?}, found {found:?}")]
    SchemaVersion {
        line: usize,
        expected: String,
        found: Option<String>,
    },
    #[error("document {id}: unknown {kind} label `{label}`")]
    UnknownLabel {
        id: String,
        kind: &'static str,
        label: String,
    },
    #[error("document {id}: span [{start}, {end}) out of range for {token_count} tokens")]
    SpanOutOfRange {
        id: String,
        start: usize,
        end: usize,
        token_count: usize,
    },
    #[error("document {id}: writer flag does not match a span over exactly the writer token")]
    InvalidWriterSpan { id: String },
    #[error("document {id}: more than one writer annotation")]
    MultipleWriterAnnotations { id: String },
    #[error("document {id}: appraisal `{label}` has score {score}, expected 0..=5")]
    AppraisalScoreOutOfRange {
        id: String,
        label: String,
        score: i64,
    },
    #[error("line {line}: duplicate document id {id}")]
    DuplicateId { id: String, line: usize },
    #[error("document {id} already contains a writer token")]
    WriterTokenPresent { id: String },
    #[error("split requests {requested} documents but the corpus has {available}")]
    SplitTooLarge { requested: usize, available: usize },
}
