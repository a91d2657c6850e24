use super::ClassifierError;
use crate::corpus::{Document, Span, Token};
use crate::hashing::FeatureHasher;

/// Marker inserted before the target span.
pub const OPEN_MARKER: &str = "⟨e⟩";
/// Marker inserted after the target span.
pub const CLOSE_MARKER: &str = "⟨/e⟩";

/// Token sequence with the target span enclosed in indicator markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedInstance {
    pub tokens: Vec<String>,
    pub target_is_writer: bool,
}

impl EncodedInstance {
    /// Positions of the opening and closing markers.
    pub fn marker_positions(&self) -> (usize, usize) {
        let open = self.tokens.iter().position(|t| t == OPEN_MARKER);
        let close = self.tokens.iter().position(|t| t == CLOSE_MARKER);
        match (open, close) {
            (Some(o), Some(c)) => (o, c),
            _ => panic!("encoded instance without indicator markers"),
        }
    }

    /// The tokens with both markers removed.
    pub fn without_markers(&self) -> Vec<String> {
        self.tokens
            .iter()
            .filter(|t| *t != OPEN_MARKER && *t != CLOSE_MARKER)
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    /// Keep the writer token in the text when the target is another
    /// experiencer.
    pub include_writer_prefix: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            include_writer_prefix: true,
        }
    }
}

pub fn encode_with_indicators(
    doc: &Document,
    span: Span,
) -> Result<EncodedInstance, ClassifierError> {
    encode_tokens(&doc.tokens, span, EncodeOptions::default())
}

/// Inserts the markers around `span`. The writer token is written with its
/// surface form "writer".
pub fn encode_tokens(
    tokens: &[Token],
    span: Span,
    options: EncodeOptions,
) -> Result<EncodedInstance, ClassifierError> {
    if span.is_empty() || span.end > tokens.len() {
        return Err(ClassifierError::InvalidSpan {
            start: span.start,
            end: span.end,
            length: tokens.len(),
        });
    }
    let target_is_writer = span == Span::writer() && tokens[0].is_writer_token;
    let mut out = Vec::with_capacity(tokens.len() + 2);
    for (i, token) in tokens.iter().enumerate() {
        if i == span.start {
            out.push(OPEN_MARKER.to_string());
        }
        let drop_writer =
            token.is_writer_token && !target_is_writer && !options.include_writer_prefix;
        if !drop_writer {
            out.push(token.surface.clone());
        }
        if i + 1 == span.end {
            out.push(CLOSE_MARKER.to_string());
        }
    }
    Ok(EncodedInstance {
        tokens: out,
        target_is_writer,
    })
}

fn distance_bucket(d: usize) -> &'static str {
    match d {
        1 => "1",
        2 => "2",
        _ => "3-5",
    }
}

/// Sorted, de-duplicated hashed features of an encoded instance: unigrams,
/// bigrams (markers included), tokens inside the markers, tokens within five
/// positions outside a marker with side and distance bucket, and a flag for
/// writer targets.
pub fn instance_features(instance: &EncodedInstance, hasher: &FeatureHasher) -> Vec<u32> {
    let (open, close) = instance.marker_positions();
    let lower: Vec<String> = instance.tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut ids = Vec::with_capacity(lower.len() * 4);

    for (i, tok) in lower.iter().enumerate() {
        let is_marker = i == open || i == close;
        if !is_marker {
            ids.push(hasher.hash("u", tok));
        }
        if i + 1 < lower.len() {
            ids.push(hasher.hash("b", &format!("{tok}|{}", lower[i + 1])));
        }
        if i > open && i < close {
            ids.push(hasher.hash("in", tok));
        } else if i < open && open - i <= 5 {
            ids.push(hasher.hash(&format!("L{}", distance_bucket(open - i)), tok));
            ids.push(hasher.hash("L", tok));
        } else if i > close && i - close <= 5 {
            ids.push(hasher.hash(&format!("R{}", distance_bucket(i - close)), tok));
            ids.push(hasher.hash("R", tok));
        }
    }
    if instance.target_is_writer {
        ids.push(hasher.hash("writer_target", ""));
    }
    ids.sort_unstable();
    ids.dedup();
    ids
}
