use super::Token;

/// Whitespace tokenizer that splits leading and trailing punctuation into
/// single-character tokens. Offsets are counted in chars, end-exclusive.
///
/// Word-internal punctuation ("don't", "e-mail") stays attached. The output
/// never contains the writer token or the classifier's indicator markers,
/// since any non-alphanumeric char at a word edge becomes its own token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word: Vec<(usize, char)> = Vec::new();

    for (offset, ch) in text.chars().enumerate() {
        if ch.is_whitespace() {
            flush_word(&mut word, &mut tokens);
        } else {
            word.push((offset, ch));
        }
    }
    flush_word(&mut word, &mut tokens);
    tokens
}

fn flush_word(word: &mut Vec<(usize, char)>, tokens: &mut Vec<Token>) {
    if word.is_empty() {
        return;
    }
    let is_punct = |c: char| !c.is_alphanumeric();

    let lead = word.iter().take_while(|(_, c)| is_punct(*c)).count();
    if lead == word.len() {
        for &(offset, ch) in word.iter() {
            tokens.push(Token::new(ch.to_string(), offset, offset + 1));
        }
        word.clear();
        return;
    }
    let trail = word.iter().rev().take_while(|(_, c)| is_punct(*c)).count();

    for &(offset, ch) in &word[..lead] {
        tokens.push(Token::new(ch.to_string(), offset, offset + 1));
    }
    let core = &word[lead..word.len() - trail];
    let surface: String = core.iter().map(|(_, c)| c).collect();
    let start = core[0].0;
    let end = core[core.len() - 1].0 + 1;
    tokens.push(Token::new(surface, start, end));
    for &(offset, ch) in &word[word.len() - trail..] {
        tokens.push(Token::new(ch.to_string(), offset, offset + 1));
    }
    word.clear();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn splits_edge_punctuation() {
        assert_eq!(
            surfaces("Hello, world! (really)"),
            ["Hello", ",", "world", "!", "(", "really", ")"]
        );
        assert_eq!(
            surfaces("don't e-mail..."),
            ["don't", "e-mail", ".", ".", "."]
        );
        assert_eq!(surfaces("  "), Vec::<String>::new());
        assert_eq!(surfaces("--"), ["-", "-"]);
    }

    #[test]
    fn offsets_are_char_based() {
        let tokens = tokenize("Zoë sah Ärger.");
        let spans: Vec<(usize, usize)> =
            tokens.iter().map(|t| (t.char_start, t.char_end)).collect();
        assert_eq!(spans, [(0, 3), (4, 7), (8, 13), (13, 14)]);
        assert!(tokens.iter().all(|t| !t.is_writer_token));
    }

    #[test]
    fn markers_never_produced() {
        let out = surfaces("⟨e⟩ Anna ⟨/e⟩");
        assert!(!out.iter().any(|s| s == "⟨e⟩" || s == "⟨/e⟩"));
    }
}
