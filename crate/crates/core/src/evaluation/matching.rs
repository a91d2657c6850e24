use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{find_overlap, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Identical token boundaries.
    Strict,
    /// At least one shared token, paired one-to-one.
    Relaxed,
}

impl MatchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::Strict => "strict",
            MatchMode::Relaxed => "relaxed",
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(MatchMode::Strict),
            "relaxed" => Ok(MatchMode::Relaxed),
            other => Err(format!(
                "unknown match mode `{other}` (expected strict or relaxed)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpanPair {
    pub gold_index: usize,
    pub pred_index: usize,
    pub gold: Span,
    pub pred: Span,
}

/// One-to-one alignment between gold and predicted spans. Unmatched entries
/// are indices into the respective input slices, in ascending order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpanMatching {
    pub pairs: Vec<SpanPair>,
    pub unmatched_gold: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

impl SpanMatching {
    pub fn true_positives(&self) -> usize {
        self.pairs.len()
    }
}

/// Aligns gold and predicted spans.
///
/// Strict mode pairs identical spans. Relaxed mode first takes candidate
/// pairs greedily by descending token overlap (ties: earlier gold start, then
/// earlier predicted start), then extends the result along augmenting paths
/// so that the number of pairs is always the maximum possible. Pairs chosen
/// by the greedy pass are only displaced when that yields an extra pair.
pub fn match_spans(
    gold: &[Span],
    pred: &[Span],
    mode: MatchMode,
) -> Result<SpanMatching, EvalError> {
    if let Some((a, b)) = find_overlap(gold) {
        return Err(EvalError::OverlappingSpans { side: "gold", a, b });
    }
    if let Some((a, b)) = find_overlap(pred) {
        return Err(EvalError::OverlappingSpans {
            side: "predicted",
            a,
            b,
        });
    }
    let pred_of_gold = match mode {
        MatchMode::Strict => gold
            .iter()
            .map(|g| pred.iter().position(|p| p == g))
            .collect(),
        MatchMode::Relaxed => {
            let mut assignment = greedy_relaxed(gold, pred);
            augment(gold, pred, &mut assignment);
            assignment
        }
    };
    Ok(build(gold, pred, &pred_of_gold))
}

/// Greedy pass only: `result[g]` is the predicted index paired with gold `g`.
pub fn greedy_relaxed(gold: &[Span], pred: &[Span]) -> Vec<Option<usize>> {
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for (gi, g) in gold.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            let overlap = g.overlap(p);
            if overlap > 0 {
                candidates.push((gi, pi, overlap));
            }
        }
    }
    candidates.sort_by_key(|&(gi, pi, overlap)| (Reverse(overlap), gold[gi].start, pred[pi].start));

    let mut pred_of_gold = vec![None; gold.len()];
    let mut pred_used = vec![false; pred.len()];
    for (gi, pi, _) in candidates {
        if pred_of_gold[gi].is_none() && !pred_used[pi] {
            pred_of_gold[gi] = Some(pi);
            pred_used[pi] = true;
        }
    }
    pred_of_gold
}

/// Kuhn-style augmentation, visiting gold spans and their neighbours in
/// start order.
fn augment(gold: &[Span], pred: &[Span], pred_of_gold: &mut [Option<usize>]) {
    let neighbours: Vec<Vec<usize>> = gold
        .iter()
        .map(|g| {
            let mut ns: Vec<usize> = (0..pred.len()).filter(|&p| g.overlaps(&pred[p])).collect();
            ns.sort_by_key(|&p| pred[p].start);
            ns
        })
        .collect();
    let mut gold_order: Vec<usize> = (0..gold.len()).collect();
    gold_order.sort_by_key(|&g| gold[g].start);

    let mut gold_of_pred = vec![None; pred.len()];
    for (g, p) in pred_of_gold.iter().enumerate() {
        if let Some(p) = p {
            gold_of_pred[*p] = Some(g);
        }
    }

    loop {
        let mut improved = false;
        for &g in &gold_order {
            if pred_of_gold[g].is_some() {
                continue;
            }
            let mut visited = vec![false; pred.len()];
            if try_augment(
                g,
                &neighbours,
                &mut visited,
                pred_of_gold,
                &mut gold_of_pred,
            ) {
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
}

fn try_augment(
    g: usize,
    neighbours: &[Vec<usize>],
    visited: &mut [bool],
    pred_of_gold: &mut [Option<usize>],
    gold_of_pred: &mut [Option<usize>],
) -> bool {
    for &p in &neighbours[g] {
        if visited[p] {
            continue;
        }
        visited[p] = true;
        let free = match gold_of_pred[p] {
            None => true,
            Some(other) => try_augment(other, neighbours, visited, pred_of_gold, gold_of_pred),
        };
        if free {
            pred_of_gold[g] = Some(p);
            gold_of_pred[p] = Some(g);
            return true;
        }
    }
    false
}

fn build(gold: &[Span], pred: &[Span], pred_of_gold: &[Option<usize>]) -> SpanMatching {
    let mut matching = SpanMatching::default();
    let mut pred_used = vec![false; pred.len()];
    for (gi, p) in pred_of_gold.iter().enumerate() {
        match p {
            Some(pi) => {
                pred_used[*pi] = true;
                matching.pairs.push(SpanPair {
                    gold_index: gi,
                    pred_index: *pi,
                    gold: gold[gi],
                    pred: pred[*pi],
                });
            }
            None => matching.unmatched_gold.push(gi),
        }
    }
    matching.unmatched_pred = (0..pred.len()).filter(|&p| !pred_used[p]).collect();
    matching
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(pairs: &[(usize, usize)]) -> Vec<Span> {
        pairs.iter().map(|&(s, e)| Span::new(s, e)).collect()
    }

    #[test]
    fn one_token_overlap() {
        let gold = spans(&[(2, 5)]);
        let pred = spans(&[(4, 7)]);
        assert_eq!(
            match_spans(&gold, &pred, MatchMode::Relaxed)
                .unwrap()
                .true_positives(),
            1
        );
        let strict = match_spans(&gold, &pred, MatchMode::Strict).unwrap();
        assert_eq!(strict.true_positives(), 0);
        assert_eq!(strict.unmatched_gold, [0]);
        assert_eq!(strict.unmatched_pred, [0]);
    }

    #[test]
    fn touching_spans_do_not_match() {
        let m = match_spans(&spans(&[(2, 5)]), &spans(&[(5, 8)]), MatchMode::Relaxed).unwrap();
        assert_eq!(m.true_positives(), 0);
    }

    #[test]
    fn tie_goes_to_earlier_gold() {
        let gold = spans(&[(0, 4), (6, 8)]);
        let pred = spans(&[(3, 7)]);
        let m = match_spans(&gold, &pred, MatchMode::Relaxed).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].gold, Span::new(0, 4));
        assert_eq!(m.unmatched_gold, [1]);
    }

    #[test]
    fn greedy_alone_is_not_maximal() {
        // The (0,4)-(2,5) pair has the largest overlap, but taking it strands
        // both (0,1) and (4,5). Augmentation recovers two pairs.
        let gold = spans(&[(0, 4), (4, 5)]);
        let pred = spans(&[(0, 1), (2, 5)]);
        let greedy = greedy_relaxed(&gold, &pred);
        assert_eq!(greedy.iter().flatten().count(), 1);
        let m = match_spans(&gold, &pred, MatchMode::Relaxed).unwrap();
        assert_eq!(m.true_positives(), 2);
        let pairs: Vec<(Span, Span)> = m.pairs.iter().map(|p| (p.gold, p.pred)).collect();
        assert_eq!(
            pairs,
            [
                (Span::new(0, 4), Span::new(0, 1)),
                (Span::new(4, 5), Span::new(2, 5))
            ]
        );
    }

    #[test]
    fn strict_pairs_identical_spans() {
        let gold = spans(&[(0, 1), (3, 5)]);
        let pred = spans(&[(3, 5), (0, 2)]);
        let m = match_spans(&gold, &pred, MatchMode::Strict).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!((m.pairs[0].gold_index, m.pairs[0].pred_index), (1, 0));
    }

    #[test]
    fn overlapping_input_rejected() {
        let bad = spans(&[(0, 3), (2, 4)]);
        assert!(matches!(
            match_spans(&bad, &[], MatchMode::Relaxed),
            Err(EvalError::OverlappingSpans { side: "gold", .. })
        ));
        assert!(matches!(
            match_spans(&[], &bad, MatchMode::Strict),
            Err(EvalError::OverlappingSpans {
                side: "predicted",
                ..
            })
        ));
    }
}
