use std::fmt;
use std::str::FromStr;

use super::TaggerError;
use crate::corpus::{find_overlap, Span};

/// BILOU tag over the single "experiencer" class.
///
/// The discriminants double as weight-vector indices; `O` comes first so that
/// ties in scoring resolve to "outside".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BilouTag {
    O = 0,
    B = 1,
    I = 2,
    L = 3,
    U = 4,
}

impl BilouTag {
    pub const ALL: [BilouTag; 5] = [
        BilouTag::O,
        BilouTag::B,
        BilouTag::I,
        BilouTag::L,
        BilouTag::U,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BilouTag::B => "B",
            BilouTag::I => "I",
            BilouTag::L => "L",
            BilouTag::O => "O",
            BilouTag::U => "U",
        }
    }
}

impl fmt::Display for BilouTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BilouTag {
    type Err = TaggerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "B" => Ok(BilouTag::B),
            "I" => Ok(BilouTag::I),
            "L" => Ok(BilouTag::L),
            "O" => Ok(BilouTag::O),
            "U" => Ok(BilouTag::U),
            other => Err(TaggerError::Format(format!("unknown tag `{other}`"))),
        }
    }
}

/// Encodes non-overlapping spans as a tag sequence of `length` tags.
pub fn spans_to_tags(spans: &[Span], length: usize) -> Result<Vec<BilouTag>, TaggerError> {
    if let Some(span) = spans.iter().find(|s| s.is_empty() || s.end > length) {
        return Err(TaggerError::SpanOutOfRange {
            start: span.start,
            end: span.end,
            length,
        });
    }
    if let Some((a, b)) = find_overlap(spans) {
        return Err(TaggerError::OverlappingSpans(a, b));
    }
    let mut tags = vec![BilouTag::O; length];
    for span in spans {
        if span.len() == 1 {
            tags[span.start] = BilouTag::U;
        } else {
            tags[span.start] = BilouTag::B;
            for tag in &mut tags[span.start + 1..span.end - 1] {
                *tag = BilouTag::I;
            }
            tags[span.end - 1] = BilouTag::L;
        }
    }
    Ok(tags)
}

/// Decodes a tag sequence into sorted, non-overlapping spans.
///
/// Never fails. Ill-formed input is repaired: an `I` with no open span opens
/// one (as if it were `B`); an `L` with no open span is a unit span; an open
/// span that is interrupted by `O`, `U`, `B` or the end of input is closed
/// after its last token, so a lone `B` becomes a unit span.
pub fn tags_to_spans(tags: &[BilouTag]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;

    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            BilouTag::O => {
                if let Some(start) = open.take() {
                    spans.push(Span::new(start, i));
                }
            }
            BilouTag::U => {
                if let Some(start) = open.take() {
                    spans.push(Span::new(start, i));
                }
                spans.push(Span::new(i, i + 1));
            }
            BilouTag::B => {
                if let Some(start) = open.replace(i) {
                    spans.push(Span::new(start, i));
                }
            }
            BilouTag::I => {
                open.get_or_insert(i);
            }
            BilouTag::L => {
                let start = open.take().unwrap_or(i);
                spans.push(Span::new(start, i + 1));
            }
        }
    }
    if let Some(start) = open {
        spans.push(Span::new(start, tags.len()));
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use BilouTag::*;

    fn spans(pairs: &[(usize, usize)]) -> Vec<Span> {
        pairs.iter().map(|&(s, e)| Span::new(s, e)).collect()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(spans_to_tags(&spans(&[(1, 2)]), 3).unwrap(), [O, U, O]);
        assert_eq!(
            spans_to_tags(&spans(&[(1, 4)]), 5).unwrap(),
            [O, B, I, L, O]
        );
        assert_eq!(spans_to_tags(&[], 2).unwrap(), [O, O]);
    }

    #[test]
    fn encode_errors() {
        assert!(matches!(
            spans_to_tags(&spans(&[(1, 3), (2, 4)]), 5),
            Err(TaggerError::OverlappingSpans(..))
        ));
        assert!(matches!(
            spans_to_tags(&spans(&[(2, 6)]), 5),
            Err(TaggerError::SpanOutOfRange { .. })
        ));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(tags_to_spans(&[O, B, I, L, O]), spans(&[(1, 4)]));
        assert_eq!(tags_to_spans(&[I, L, O]), spans(&[(0, 2)]));
        assert_eq!(tags_to_spans(&[B, O]), spans(&[(0, 1)]));
        assert_eq!(tags_to_spans(&[]), vec![]);
    }

    #[test]
    fn decode_repairs() {
        // I after O opens a span.
        assert_eq!(tags_to_spans(&[O, I, I, L]), spans(&[(1, 4)]));
        // B interrupted by B.
        assert_eq!(tags_to_spans(&[B, B, L]), spans(&[(0, 1), (1, 3)]));
        // Lone L.
        assert_eq!(tags_to_spans(&[O, L, U]), spans(&[(1, 2), (2, 3)]));
        // Open span at the end of input.
        assert_eq!(tags_to_spans(&[U, B, I]), spans(&[(0, 1), (1, 3)]));
    }

    fn layout() -> impl Strategy<Value = (Vec<Span>, usize)> {
        // Alternate gaps and span lengths to build arbitrary valid layouts.
        proptest::collection::vec((0usize..3, 1usize..4), 0..6).prop_flat_map(|parts| {
            let mut pos = 0;
            let mut out = Vec::new();
            for (gap, len) in parts {
                pos += gap;
                out.push(Span::new(pos, pos + len));
                pos += len;
            }
            (Just(out), pos..pos + 3)
        })
    }

    proptest! {
        #[test]
        fn round_trip((spans, n) in layout()) {
            let tags = spans_to_tags(&spans, n).unwrap();
            prop_assert_eq!(tags_to_spans(&tags), spans);
        }

        #[test]
        fn decoding_is_total(tags in proptest::collection::vec(0usize..5, 0..12)) {
            let tags: Vec<BilouTag> = tags.into_iter().map(|i| BilouTag::from_index(i).unwrap()).collect();
            let spans = tags_to_spans(&tags);
            prop_assert!(find_overlap(&spans).is_none());
            prop_assert!(spans.iter().all(|s| s.end <= tags.len()));
        }
    }
}
