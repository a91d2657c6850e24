use std::collections::BTreeSet;
use std::fmt;

/// Emotion labels in evaluation order.
pub const EMOTION_LABELS: [&str; 8] = [
    "anger",
    "disgust",
    "fear",
    "joy",
    "no-emotion",
    "other",
    "sadness",
    "shame",
];

/// The 22 appraisal dimensions in reporting order.
pub const APPRAISAL_LABELS: [&str; 22] = [
    "suddenness",
    "familiarity",
    "pleasantness",
    "understand",
    "goal_relevance",
    "self_responsibility",
    "other_responsibility",
    "situational_responsibility",
    "effort",
    "exert",
    "attend",
    "consider",
    "outcome_probability",
    "expectation_discrepancy",
    "goal_conduciveness",
    "urgency",
    "self_control",
    "other_control",
    "situational_control",
    "adjustment_check",
    "internal_check",
    "external_check",
];

/// Short names used as row labels in emitted tables.
pub fn display_name(label: &str) -> &str {
    match label {
        "no-emotion" => "no emotion",
        "goal_relevance" => "goal relev.",
        "self_responsibility" => "self resp.",
        "other_responsibility" => "other resp.",
        "situational_responsibility" => "sit. resp.",
        "outcome_probability" => "outcome prob.",
        "expectation_discrepancy" => "expect. discrep.",
        "goal_conduciveness" => "goal conduc.",
        "self_control" => "self control",
        "other_control" => "other control",
        "situational_control" => "sit. control",
        "adjustment_check" => "adj. check",
        "internal_check" => "int. check",
        "external_check" => "ext. check",
        other => other,
    }
}

/// A closed, ordered set of label names.
///
/// Labels are plain strings so that the emotion inventory can be changed from
/// configuration; membership is checked wherever labels enter the system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelSet {
    labels: Vec<String>,
}

impl LabelSet {
    /// Builds a label set, rejecting empty names and duplicates.
    pub fn new<I, S>(labels: I) -> Result<Self, LabelSetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(LabelSetError::Empty);
        }
        let mut seen = BTreeSet::new();
        for label in &labels {
            if label.trim().is_empty() {
                return Err(LabelSetError::BlankLabel);
            }
            if !seen.insert(label.as_str()) {
                return Err(LabelSetError::Duplicate(label.clone()));
            }
        }
        Ok(LabelSet { labels })
    }

    pub fn emotions() -> Self {
        LabelSet {
            labels: EMOTION_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn appraisals() -> Self {
        LabelSet {
            labels: APPRAISAL_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index_of(label).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.labels
    }

    /// Returns the first label of `labels` that is not a member, if any.
    pub fn first_unknown<'a, I>(&self, labels: I) -> Option<&'a str>
    where
        I: IntoIterator<Item = &'a String>,
    {
        labels
            .into_iter()
            .map(String::as_str)
            .find(|l| !self.contains(l))
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.labels.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelSetError {
    #[error("label set is empty")]
    Empty,
    #[error("label set contains a blank label")]
    BlankLabel,
    #[error("label set contains `{0}` twice")]
    Duplicate(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sets_have_expected_sizes() {
        assert_eq!(LabelSet::emotions().len(), 8);
        assert_eq!(LabelSet::appraisals().len(), 22);
        assert!(!LabelSet::emotions().contains("surprise"));
    }

    #[test]
    fn duplicates_rejected() {
        assert_eq!(
            LabelSet::new(["joy", "joy"]),
            Err(LabelSetError::Duplicate("joy".into()))
        );
        assert_eq!(
            LabelSet::new(Vec::<String>::new()),
            Err(LabelSetError::Empty)
        );
    }

    #[test]
    fn extended_emotion_set() {
        let set = LabelSet::new(EMOTION_LABELS.iter().copied().chain(["surprise"])).unwrap();
        assert_eq!(set.index_of("surprise"), Some(8));
    }
}
