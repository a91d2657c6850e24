//! Span matching, span- and label-level metrics, error attribution and
//! report tables.

mod labels;
mod matching;
mod metrics;
mod report;

pub use self::labels::{
    aggregate, fn_attribution, fn_attribution_table, gold_labeled_spans, gold_span_label_eval,
    pipeline_label_eval, span_label_frequency, Aggregate, FnAttribution, LabelConfusion,
    LabelCounts, LabelFrequency, LabelKind, LabeledSpan,
};
pub use self::matching::{greedy_relaxed, match_spans, MatchMode, SpanMatching, SpanPair};
pub use self::metrics::{f1_score, span_counts, span_prf, Prf, SpanCounts, WriterFilter};
pub use self::report::{
    percent, round_half_up, EvaluationReport, LabelResult, LabelTable, ModePair, ReportFormat,
    SpanMetrics, Table,
};

use crate::corpus::Span;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("{side} spans {a:?} and {b:?} overlap")]
    OverlappingSpans {
        side: &'static str,
        a: Span,
        b: Span,
    },
    #[error("{gold} gold documents but {predicted} prediction lists")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("label `{0}` is not in the evaluated label set")]
    UnknownLabel(String),
    #[error("prediction on {0:?}, which is not a gold span")]
    NotAGoldSpan(Span),
    #[error("more than one prediction for span {0:?}")]
    DuplicatePrediction(Span),
}
