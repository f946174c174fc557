//! Task text normalisation ahead of embedding.
//!
//! Lowercase, drop apostrophes, turn every other non-letter into a space,
//! remove stopwords, then reduce each token with a small suffix-rule
//! lemmatiser. Stopwords are filtered on both sides of lemmatisation so the
//! whole transform is idempotent.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

const STOPWORDS_DATA: &str = include_str!("../../data/stopwords_en.txt");

/// Stems that take a trailing `e` back after `-ing` / `-ed` is removed.
const E_RESTORING: &[&str] = &[
    "at", "iz", "is", "ys", "bl", "ag", "ur", "uc", "ud", "rv", "ov", "iv", "uir", "rg", "vid", "cid", "uid", "rit",
    "mak", "tak", "ang", "enc", "anc", "mpl", "tl",
];

fn stopword_set() -> BTreeSet<&'static str> {
    STOPWORDS_DATA
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextNormalizer {
    stopwords: BTreeSet<&'static str>,
}

impl Default for TextNormalizer {
    fn default() -> Self {
        TextNormalizer {
            stopwords: stopword_set(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedText {
    pub text: String,
    /// Nothing survived normalisation.
    pub empty: bool,
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn has_vowel(s: &str) -> bool {
    s.bytes().any(is_vowel)
}

fn restore_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !is_vowel(b[n - 1]) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        return String::from(&stem[..n - 1]);
    }
    let mut out = String::from(stem);
    if E_RESTORING.iter().any(|s| stem.ends_with(s)) {
        out.push('e');
    }
    out
}

/// One rule application; `None` when no rule fires.
fn lemma_step(word: &str) -> Option<String> {
    if !word.is_ascii() || word.len() <= 3 {
        return None;
    }
    let n = word.len();
    if word.ends_with("sses") {
        return Some(String::from(&word[..n - 2]));
    }
    if n > 4 && (word.ends_with("ies") || word.ends_with("ied")) {
        let mut s = String::from(&word[..n - 3]);
        s.push('y');
        return Some(s);
    }
    if let Some(stem) = word.strip_suffix("ing") {
        if stem.len() >= 3 && has_vowel(stem) {
            return Some(restore_stem(stem));
        }
        return None;
    }
    if let Some(stem) = word.strip_suffix("ed") {
        if !word.ends_with("eed") && stem.len() >= 3 && has_vowel(stem) {
            return Some(restore_stem(stem));
        }
        return None;
    }
    if word.ends_with('s') && !word.ends_with("ss") && !word.ends_with("us") && !word.ends_with("is") {
        return Some(String::from(&word[..n - 1]));
    }
    None
}

/// Apply suffix rules until none fires.
pub fn lemmatize(word: &str) -> String {
    let mut current = String::from(word);
    while let Some(next) = lemma_step(&current) {
        if next == current {
            break;
        }
        current = next;
    }
    current
}

impl TextNormalizer {
    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        let mut cleaned = String::with_capacity(text.len());
        for c in text.chars() {
            if c == '\'' || c == '\u{2019}' || c == '`' {
                continue;
            }
            if c.is_alphabetic() {
                cleaned.extend(c.to_lowercase());
            } else {
                cleaned.push(' ');
            }
        }
        cleaned
            .split_whitespace()
            .filter(|t| !self.is_stopword(t))
            .map(lemmatize)
            .filter(|t| !t.is_empty() && !self.is_stopword(t))
            .collect()
    }

    pub fn normalize(&self, text: &str) -> NormalizedText {
        let text = self.tokens(text).join(" ");
        NormalizedText {
            empty: text.is_empty(),
            text,
        }
    }
}

pub fn normalize_text(text: &str) -> NormalizedText {
    TextNormalizer::default().normalize(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn documented_example() {
        let n = normalize_text("Managing 3 visa applications!");
        assert_eq!(n.text, "manage visa application");
        assert!(!n.empty);
    }

    #[test]
    fn empty_is_flagged() {
        assert!(normalize_text("").empty);
        assert!(normalize_text("the 42 and of!!").empty);
    }

    #[test]
    fn lemma_rules() {
        for (w, l) in [
            ("processes", "process"),
            ("processing", "process"),
            ("policies", "policy"),
            ("applied", "apply"),
            ("planning", "plan"),
            ("coordinating", "coordinate"),
            ("ensuring", "ensure"),
            ("managed", "manage"),
            ("reviewing", "review"),
            ("status", "status"),
            ("analysis", "analysis"),
            ("needed", "need"),
            ("calling", "call"),
            ("sing", "sing"),
        ] {
            assert_eq!(lemmatize(w), l, "{w}");
        }
    }

    #[test]
    fn apostrophes_join_and_punctuation_splits() {
        assert_eq!(normalize_text("Team's work-flow").text, "team work flow");
        assert_eq!(normalize_text("don't"), normalize_text(""));
    }

    proptest! {
        #[test]
        fn idempotent(s in "[A-Za-z0-9 ,.!'-]{0,80}") {
            let once = normalize_text(&s);
            let twice = normalize_text(&once.text);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn lemma_is_fixpoint(w in "[a-z]{1,14}") {
            let l = lemmatize(&w);
            prop_assert_eq!(lemmatize(&l), l);
        }
    }
}
