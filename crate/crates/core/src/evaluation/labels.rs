use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{match_spans, EvalError, MatchMode, Prf};
use crate::corpus::{discretize_appraisals, Document, LabelSet, Span};

/// A span with the label set attached to it for one label family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSpan {
    pub span: Span,
    pub is_writer: bool,
    pub labels: BTreeSet<String>,
}

/// Which label family of an annotation to look at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Emotion,
    /// Appraisals discretized at `threshold` (score >= threshold).
    Appraisal {
        threshold: u8,
    },
}

/// Gold spans of `doc` with their emotion or discretized appraisal labels.
pub fn gold_labeled_spans(doc: &Document, kind: LabelKind) -> Vec<LabeledSpan> {
    doc.annotations
        .iter()
        .map(|a| LabeledSpan {
            span: a.span,
            is_writer: a.is_writer,
            labels: match kind {
                LabelKind::Emotion => a.emotions.clone(),
                LabelKind::Appraisal { threshold } => discretize_appraisals(a, threshold),
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// False negatives caused by a gold span that no prediction matched.
    pub fn_due_to_missing_span: usize,
}

impl LabelCounts {
    pub fn prf(&self) -> Prf {
        Prf::from_counts(self.tp, self.fp, self.fn_)
    }
}

/// Per-label confusion counts, in label-set order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelConfusion {
    labels: LabelSet,
    counts: Vec<LabelCounts>,
}

impl LabelConfusion {
    pub fn new(labels: LabelSet) -> Self {
        let counts = vec![LabelCounts::default(); labels.len()];
        LabelConfusion { labels, counts }
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn get(&self, label: &str) -> Option<&LabelCounts> {
        self.labels.index_of(label).map(|i| &self.counts[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &LabelCounts)> {
        self.labels.iter().zip(&self.counts)
    }

    fn counts_mut(&mut self, label: &str) -> Result<&mut LabelCounts, EvalError> {
        match self.labels.index_of(label) {
            Some(i) => Ok(&mut self.counts[i]),
            None => Err(EvalError::UnknownLabel(label.to_string())),
        }
    }

    /// Adds counts for one gold/predicted label-set pair on aligned spans.
    fn compare(
        &mut self,
        gold: &BTreeSet<String>,
        pred: &BTreeSet<String>,
    ) -> Result<(), EvalError> {
        for label in gold.union(pred) {
            let c = self.counts_mut(label)?;
            match (gold.contains(label), pred.contains(label)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => unreachable!(),
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &LabelConfusion) {
        assert_eq!(
            self.labels, other.labels,
            "merging confusions over different label sets"
        );
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.tp += b.tp;
            a.fp += b.fp;
            a.fn_ += b.fn_;
            a.fn_due_to_missing_span += b.fn_due_to_missing_span;
        }
    }
}

fn check_lengths<T, U>(gold: &[T], pred: &[U]) -> Result<(), EvalError> {
    if gold.len() == pred.len() {
        Ok(())
    } else {
        Err(EvalError::LengthMismatch {
            gold: gold.len(),
            predicted: pred.len(),
        })
    }
}

fn spans_of(items: &[LabeledSpan]) -> Vec<Span> {
    items.iter().map(|s| s.span).collect()
}

/// Label evaluation on predicted spans.
///
/// Spans are aligned in relaxed mode. Aligned pairs are compared label by
/// label; every label of an unaligned prediction is a false positive; every
/// label of an unaligned gold span is a false negative attributed to the
/// missing span. `gold[i]` and `pred[i]` describe the same document.
pub fn pipeline_label_eval(
    gold: &[Vec<LabeledSpan>],
    pred: &[Vec<LabeledSpan>],
    labels: &LabelSet,
) -> Result<LabelConfusion, EvalError> {
    check_lengths(gold, pred)?;
    let mut confusion = LabelConfusion::new(labels.clone());
    for (gold_doc, pred_doc) in gold.iter().zip(pred) {
        let m = match_spans(&spans_of(gold_doc), &spans_of(pred_doc), MatchMode::Relaxed)?;
        for pair in &m.pairs {
            confusion.compare(
                &gold_doc[pair.gold_index].labels,
                &pred_doc[pair.pred_index].labels,
            )?;
        }
        for &p in &m.unmatched_pred {
            for label in &pred_doc[p].labels {
                confusion.counts_mut(label)?.fp += 1;
            }
        }
        for &g in &m.unmatched_gold {
            for label in &gold_doc[g].labels {
                let c = confusion.counts_mut(label)?;
                c.fn_ += 1;
                c.fn_due_to_missing_span += 1;
            }
        }
    }
    Ok(confusion)
}

/// Label evaluation when predictions were made on the gold spans themselves.
/// A gold span without a prediction counts as an empty predicted set.
pub fn gold_span_label_eval(
    gold: &[Vec<LabeledSpan>],
    pred: &[Vec<LabeledSpan>],
    labels: &LabelSet,
) -> Result<LabelConfusion, EvalError> {
    check_lengths(gold, pred)?;
    let mut confusion = LabelConfusion::new(labels.clone());
    let empty = BTreeSet::new();
    for (gold_doc, pred_doc) in gold.iter().zip(pred) {
        let mut by_span: BTreeMap<Span, &BTreeSet<String>> = BTreeMap::new();
        for p in pred_doc {
            if !gold_doc.iter().any(|g| g.span == p.span) {
                return Err(EvalError::NotAGoldSpan(p.span));
            }
            if by_span.insert(p.span, &p.labels).is_some() {
                return Err(EvalError::DuplicatePrediction(p.span));
            }
        }
        for g in gold_doc {
            let predicted = by_span.get(&g.span).copied().unwrap_or(&empty);
            confusion.compare(&g.labels, predicted)?;
        }
    }
    Ok(confusion)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub per_label: Vec<(String, Prf)>,
    /// Means of per-label P and R over the full label set; F1 is their
    /// harmonic mean.
    pub macro_avg: Prf,
    /// From summed counts.
    pub micro_avg: Prf,
}

impl Aggregate {
    pub fn label(&self, label: &str) -> Option<&Prf> {
        self.per_label
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| p)
    }
}

pub fn aggregate(confusion: &LabelConfusion) -> Aggregate {
    let per_label: Vec<(String, Prf)> = confusion
        .iter()
        .map(|(label, c)| (label.to_string(), c.prf()))
        .collect();
    let n = per_label.len().max(1) as f64;
    let macro_p = per_label.iter().map(|(_, p)| p.precision).sum::<f64>() / n;
    let macro_r = per_label.iter().map(|(_, p)| p.recall).sum::<f64>() / n;

    let (tp, fp, fn_) = confusion.iter().fold((0, 0, 0), |(tp, fp, fn_), (_, c)| {
        (tp + c.tp, fp + c.fp, fn_ + c.fn_)
    });
    Aggregate {
        per_label,
        macro_avg: Prf::from_pr(macro_p, macro_r),
        micro_avg: Prf::from_counts(tp, fp, fn_),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnAttribution {
    pub label: String,
    pub fn_total: usize,
    pub fn_missing: usize,
    /// `fn_missing / fn_total`, 0 when there are no false negatives.
    pub ratio: f64,
}

pub fn fn_attribution_table(confusion: &LabelConfusion) -> Vec<FnAttribution> {
    confusion
        .iter()
        .map(|(label, c)| fn_attribution(label, c.fn_, c.fn_due_to_missing_span))
        .collect()
}

pub fn fn_attribution(label: &str, fn_total: usize, fn_missing: usize) -> FnAttribution {
    FnAttribution {
        label: label.to_string(),
        fn_total,
        fn_missing,
        ratio: if fn_total == 0 {
            0.0
        } else {
            fn_missing as f64 / fn_total as f64
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelFrequency {
    pub label: String,
    pub writer: usize,
    pub non_writer: usize,
    pub writer_ratio: f64,
    pub non_writer_ratio: f64,
}

/// Counts spans carrying each label, split by writer and non-writer.
pub fn span_label_frequency<'a, I>(spans: I, labels: &LabelSet) -> Vec<LabelFrequency>
where
    I: IntoIterator<Item = &'a LabeledSpan>,
{
    let mut counts = vec![(0usize, 0usize); labels.len()];
    for span in spans {
        for label in &span.labels {
            if let Some(i) = labels.index_of(label) {
                if span.is_writer {
                    counts[i].0 += 1;
                } else {
                    counts[i].1 += 1;
                }
            }
        }
    }
    labels
        .iter()
        .zip(counts)
        .map(|(label, (writer, non_writer))| {
            let total = writer + non_writer;
            let share = |n: usize| {
                if total == 0 {
                    0.0
                } else {
                    n as f64 / total as f64
                }
            };
            LabelFrequency {
                label: label.to_string(),
                writer,
                non_writer,
                writer_ratio: share(writer),
                non_writer_ratio: share(non_writer),
            }
        })
        .collect()
}
