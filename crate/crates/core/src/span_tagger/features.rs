use super::BilouTag;
use crate::corpus::Token;
use crate::hashing::FeatureHasher;

/// Sorted, de-duplicated hashed feature ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVector(pub Vec<u32>);

impl FeatureVector {
    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn contains(&self, id: u32) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    fn from_unsorted(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        FeatureVector(ids)
    }
}

/// Tags predicted for the two preceding positions, nearest first.
pub type History = [Option<BilouTag>; 2];

const WRITER_FORM: &str = "<writer>";

fn form(token: &Token) -> String {
    if token.is_writer_token {
        WRITER_FORM.to_string()
    } else {
        token.surface.to_lowercase()
    }
}

/// Collapsed character shape: "Anna" -> "Xx", "e-mail2" -> "x-xd".
pub fn word_shape(surface: &str) -> String {
    let mut shape = String::new();
    let mut last = None;
    for ch in surface.chars() {
        let class = if ch.is_uppercase() {
            'X'
        } else if ch.is_lowercase() {
            'x'
        } else if ch.is_numeric() {
            'd'
        } else {
            ch
        };
        if last != Some(class) {
            shape.push(class);
            last = Some(class);
        }
    }
    shape
}

fn window_form(tokens: &[Token], position: usize, offset: isize) -> String {
    let idx = position as isize + offset;
    if idx < 0 {
        format!("<s{offset}>")
    } else if idx as usize >= tokens.len() {
        format!("</s+{offset}>")
    } else {
        form(&tokens[idx as usize])
    }
}

/// History-independent features, unsorted.
pub(crate) fn static_features(
    tokens: &[Token],
    position: usize,
    hasher: &FeatureHasher,
) -> Vec<u32> {
    let token = &tokens[position];
    let lower = form(token);
    let mut ids = Vec::with_capacity(24);
    ids.push(hasher.hash("bias", ""));
    for offset in [-2isize, -1, 0, 1, 2] {
        let template = match offset {
            -2 => "w-2",
            -1 => "w-1",
            0 => "w0",
            1 => "w+1",
            _ => "w+2",
        };
        ids.push(hasher.hash(template, &window_form(tokens, position, offset)));
    }
    if !token.is_writer_token {
        ids.push(hasher.hash("shape", &word_shape(&token.surface)));
        let chars: Vec<char> = lower.chars().collect();
        for n in 1..=3.min(chars.len()) {
            let prefix: String = chars[..n].iter().collect();
            let suffix: String = chars[chars.len() - n..].iter().collect();
            ids.push(hasher.hash(&format!("pre{n}"), &prefix));
            ids.push(hasher.hash(&format!("suf{n}"), &suffix));
        }
        if token.surface.chars().next().is_some_and(char::is_uppercase) {
            ids.push(hasher.hash("cap", ""));
        }
    } else {
        ids.push(hasher.hash("is_writer", ""));
    }
    if position == 0 {
        ids.push(hasher.hash("first", ""));
    }
    ids
}

fn tag_name(tag: Option<BilouTag>) -> &'static str {
    tag.map_or("<start>", BilouTag::as_str)
}

pub(crate) fn history_features(history: History, hasher: &FeatureHasher) -> [u32; 2] {
    let prev = tag_name(history[0]);
    let prev2 = tag_name(history[1]);
    [
        hasher.hash("t-1", prev),
        hasher.hash("t-2,t-1", &format!("{prev2}|{prev}")),
    ]
}

pub(crate) fn combine(static_ids: &[u32], history: [u32; 2]) -> FeatureVector {
    let mut ids = Vec::with_capacity(static_ids.len() + 2);
    ids.extend_from_slice(static_ids);
    ids.extend_from_slice(&history);
    FeatureVector::from_unsorted(ids)
}

/// Hashed features for the token at `position` given the two previously
/// predicted tags.
///
/// # Panics
///
/// If `position` is out of bounds.
pub fn extract_features(
    tokens: &[Token],
    position: usize,
    history: History,
    hasher: &FeatureHasher,
) -> FeatureVector {
    combine(
        &static_features(tokens, position, hasher),
        history_features(history, hasher),
    )
}
