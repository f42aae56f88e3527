//! Tokenization and the fixed stopword list shared by the annotator,
//! the embeddings and the interpreter.

/// Articles, prepositions, conjunctions, auxiliaries and wh-words.
pub const STOPWORDS: [&str; 40] = [
    "a", "an", "the", "of", "in", "on", "at", "to", "for", "from", "by", "with", "and", "or", "as", "into", "was", "were", "is", "are",
    "be", "been", "did", "does", "do", "has", "had", "have", "what", "which", "who", "whom", "whose", "when", "where", "why", "how",
    "many", "much", "it",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token)
}

pub fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2013}' | '\u{2014}' | '\u{2026}')
}

/// Lowercases, splits on whitespace, strips leading and trailing
/// punctuation from each token and drops empty tokens. Interior
/// punctuation (`42-yard`) is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(|raw| raw.trim_matches(is_punct).to_lowercase()).filter(|t| !t.is_empty()).collect()
}

/// Distinct non-stopword tokens, in first-occurrence order.
pub fn content_tokens(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in tokenize(text) {
        if !is_stopword(&t) && !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

/// A whitespace token with its character offsets after punctuation
/// stripping. `trailing_punct` records whether punctuation was removed
/// from its end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpannedToken {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub trailing_punct: bool,
}

pub fn spanned_tokens(text: &str) -> Vec<SpannedToken> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let raw_start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let (mut s, mut e) = (raw_start, i);
        while s < e && is_punct(chars[s]) {
            s += 1;
        }
        while e > s && is_punct(chars[e - 1]) {
            e -= 1;
        }
        if s < e {
            out.push(SpannedToken { text: chars[s..e].iter().collect(), start: s, end: e, trailing_punct: e < i });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_rules() {
        assert_eq!(tokenize("What happened first, the crisis?"), ["what", "happened", "first", "the", "crisis"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("42-yard"), ["42-yard"]);
        assert_eq!(tokenize("  ... ( ) "), Vec::<String>::new());
    }

    #[test]
    fn stopword_list_is_forty_distinct_lowercase_words() {
        let set: std::collections::BTreeSet<_> = STOPWORDS.iter().collect();
        assert_eq!(set.len(), 40);
        assert!(STOPWORDS.iter().all(|w| w.chars().all(|c| c.is_ascii_lowercase())));
    }

    #[test]
    fn spanned_tokens_track_offsets() {
        let toks = spanned_tokens("Rackers kicked (a) 42-yard goal.");
        let texts: Vec<_> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["Rackers", "kicked", "a", "42-yard", "goal"]);
        assert_eq!((toks[2].start, toks[2].end), (16, 17));
        assert!(toks[2].trailing_punct);
        assert!(toks[4].trailing_punct);
        assert!(!toks[3].trailing_punct);
    }

    #[test]
    fn content_tokens_are_distinct() {
        assert_eq!(content_tokens("in the fourth quarter of the fourth game"), ["fourth", "quarter", "game"]);
    }
}
