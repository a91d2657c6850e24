use serde::{Deserialize, Serialize};

use super::{match_spans, EvalError, MatchMode};
use crate::corpus::{Document, Span};

/// Precision, recall and F1 as fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean; 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Prf {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        Prf {
            precision,
            recall,
            f1: f1_score(precision, recall),
        }
    }

    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        Prf::from_pr(ratio(tp, tp + fp), ratio(tp, tp + fn_))
    }
}

/// Which spans take part in span-level scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WriterFilter {
    Include,
    Exclude,
    /// Only the writer span.
    Only,
}

impl WriterFilter {
    fn keeps(self, is_writer: bool) -> bool {
        match self {
            WriterFilter::Include => true,
            WriterFilter::Exclude => !is_writer,
            WriterFilter::Only => is_writer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SpanCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl SpanCounts {
    pub fn prf(&self) -> Prf {
        Prf::from_counts(self.tp, self.fp, self.fn_)
    }
}

impl std::ops::AddAssign for SpanCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

/// Matched pairs are true positives, unmatched predictions false positives,
/// unmatched gold spans false negatives. `predicted[i]` belongs to
/// `gold_docs[i]`.
pub fn span_counts(
    gold_docs: &[Document],
    predicted: &[Vec<Span>],
    mode: MatchMode,
    filter: WriterFilter,
) -> Result<SpanCounts, EvalError> {
    if gold_docs.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold_docs.len(),
            predicted: predicted.len(),
        });
    }
    let mut counts = SpanCounts::default();
    for (doc, pred) in gold_docs.iter().zip(predicted) {
        let gold: Vec<Span> = doc
            .annotations
            .iter()
            .filter(|a| filter.keeps(a.is_writer))
            .map(|a| a.span)
            .collect();
        let pred: Vec<Span> = pred
            .iter()
            .filter(|s| filter.keeps(doc.is_writer_span(s)))
            .copied()
            .collect();
        let m = match_spans(&gold, &pred, mode)?;
        counts += SpanCounts {
            tp: m.true_positives(),
            fp: m.unmatched_pred.len(),
            fn_: m.unmatched_gold.len(),
        };
    }
    Ok(counts)
}

/// Span-level P/R/F1, optionally ignoring writer spans on both sides.
pub fn span_prf(
    gold_docs: &[Document],
    predicted: &[Vec<Span>],
    mode: MatchMode,
    include_writer: bool,
) -> Result<Prf, EvalError> {
    let filter = if include_writer {
        WriterFilter::Include
    } else {
        WriterFilter::Exclude
    };
    Ok(span_counts(gold_docs, predicted, mode, filter)?.prf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{inject_writer_token, ExperiencerAnnotation, ExperiencerLabels};

    fn doc(spans: &[(usize, usize)]) -> Document {
        let mut d = inject_writer_token(
            Document::from_text("d", "a b c d e f g h"),
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
    fn harmonic_mean_of_reported_values() {
        assert!((f1_score(0.74, 0.50) - 0.596_774).abs() < 1e-6);
        assert_eq!(f1_score(0.0, 0.0), 0.0);
    }

    #[test]
    fn identity_gives_perfect_scores() {
        let docs = vec![doc(&[(2, 4), (5, 6)])];
        let pred = vec![docs[0].spans()];
        for mode in [MatchMode::Strict, MatchMode::Relaxed] {
            for include in [true, false] {
                let prf = span_prf(&docs, &pred, mode, include).unwrap();
                assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
            }
        }
    }

    #[test]
    fn no_predictions_scores_zero() {
        let docs = vec![doc(&[(2, 4)])];
        let prf = span_prf(&docs, &[vec![]], MatchMode::Relaxed, true).unwrap();
        assert_eq!(prf, Prf::default());
    }

    #[test]
    fn writer_filters() {
        let docs = vec![doc(&[(2, 4)])];
        let pred = vec![vec![Span::writer(), Span::new(3, 5)]];
        let incl = span_counts(&docs, &pred, MatchMode::Strict, WriterFilter::Include).unwrap();
        assert_eq!(
            incl,
            SpanCounts {
                tp: 1,
                fp: 1,
                fn_: 1
            }
        );
        let excl = span_counts(&docs, &pred, MatchMode::Strict, WriterFilter::Exclude).unwrap();
        assert_eq!(
            excl,
            SpanCounts {
                tp: 0,
                fp: 1,
                fn_: 1
            }
        );
        let only = span_counts(&docs, &pred, MatchMode::Strict, WriterFilter::Only).unwrap();
        assert_eq!(
            only,
            SpanCounts {
                tp: 1,
                fp: 0,
                fn_: 0
            }
        );
        let relaxed = span_counts(&docs, &pred, MatchMode::Relaxed, WriterFilter::Exclude).unwrap();
        assert_eq!(
            relaxed,
            SpanCounts {
                tp: 1,
                fp: 0,
                fn_: 0
            }
        );
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            span_prf(&[doc(&[])], &[], MatchMode::Strict, true),
            Err(EvalError::LengthMismatch { .. })
        ));
    }
}
