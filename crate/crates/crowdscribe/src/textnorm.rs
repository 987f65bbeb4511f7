//! Text normalization, tokenization, and corpus filtering.
//!
//! Every piece of text entering the metrics, aggregation, or agreement
//! layers goes through [`normalize`] first so that case, punctuation, and
//! whitespace variance never show up as transcription disagreement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which script counts as "letters" during normalization and filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alphabet {
    Latin,
    Cyrillic,
}

impl Alphabet {
    /// True if `c` is a letter of this script.
    pub fn contains(self, c: char) -> bool {
        match self {
            Alphabet::Latin => match c {
                'a'..='z' | 'A'..='Z' => true,
                // Latin-1 supplement letters, minus the multiplication and
                // division signs that sit inside the letter range.
                '\u{00C0}'..='\u{00FF}' => c != '\u{00D7}' && c != '\u{00F7}',
                // Latin Extended-A/B and Extended Additional.
                '\u{0100}'..='\u{024F}' | '\u{1E00}'..='\u{1EFF}' => true,
                _ => false,
            },
            Alphabet::Cyrillic => matches!(c, '\u{0400}'..='\u{04FF}' | '\u{0500}'..='\u{052F}'),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "latin" => Ok(Alphabet::Latin),
            "cyrillic" => Ok(Alphabet::Cyrillic),
            other => Err(Error::contract(format!("unknown alphabet `{other}`"))),
        }
    }
}

/// A transcription in canonical form: lowercase word tokens containing only
/// letters of one alphabet plus apostrophes, with the raw input retained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedText {
    tokens: Vec<String>,
    original: String,
}

impl NormalizedText {
    /// Wrap an already-tokenized sequence. Tokens must not contain whitespace.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        debug_assert!(tokens
            .iter()
            .all(|t| !t.is_empty() && !t.contains(char::is_whitespace)));
        let original = tokens.join(" ");
        NormalizedText { tokens, original }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// The raw string this text was normalized from.
    pub fn original(&self) -> &str {
        &self.original
    }

    /// Canonical single-space-joined form.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn word_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// True if both sides normalize to the same token sequence.
    pub fn same_tokens(&self, other: &NormalizedText) -> bool {
        self.tokens == other.tokens
    }
}

/// Lowercase, strip everything outside the alphabet and apostrophes, and
/// collapse whitespace. Stripped characters act as token separators, so
/// hyphenated forms split into separate tokens. The Unicode right single
/// quotation mark is unified with the ASCII apostrophe.
pub fn normalize(text: &str, alphabet: Alphabet) -> NormalizedText {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for raw in text.chars() {
        for c in raw.to_lowercase() {
            let c = if c == '\u{2019}' { '\'' } else { c };
            if c == '\'' || alphabet.contains(c) {
                current.push(c);
            } else if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    NormalizedText {
        tokens,
        original: text.to_string(),
    }
}

/// Split an already-normalized string on whitespace.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Why a sentence was rejected from a task corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Digits,
    Abbreviation,
    ForeignAlphabet,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RejectReason::Digits => "digits",
            RejectReason::Abbreviation => "abbreviation",
            RejectReason::ForeignAlphabet => "foreign_alphabet",
        };
        f.write_str(s)
    }
}

/// Rules for screening raw sentences before they become annotation tasks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterRuleSet {
    pub reject_digits: bool,
    /// Literal substrings matched case-insensitively against the raw text.
    pub abbreviation_patterns: Vec<String>,
    pub allowed_alphabets: Vec<Alphabet>,
}

impl FilterRuleSet {
    pub fn new(
        reject_digits: bool,
        abbreviation_patterns: Vec<String>,
        allowed_alphabets: Vec<Alphabet>,
    ) -> Result<Self> {
        if allowed_alphabets.is_empty() {
            return Err(Error::contract(
                "filter rule set needs at least one allowed alphabet",
            ));
        }
        if abbreviation_patterns.iter().any(|p| p.is_empty()) {
            return Err(Error::contract("abbreviation patterns must be non-empty"));
        }
        Ok(FilterRuleSet {
            reject_digits,
            abbreviation_patterns,
            allowed_alphabets,
        })
    }

    /// Digit-rejecting rule set with no abbreviation patterns.
    pub fn for_alphabet(alphabet: Alphabet) -> Self {
        FilterRuleSet {
            reject_digits: true,
            abbreviation_patterns: Vec::new(),
            allowed_alphabets: vec![alphabet],
        }
    }

    fn classify(&self, sentence: &str) -> Option<RejectReason> {
        if self.reject_digits && sentence.chars().any(char::is_numeric) {
            return Some(RejectReason::Digits);
        }
        if !self.abbreviation_patterns.is_empty() {
            let lower = sentence.to_lowercase();
            if self
                .abbreviation_patterns
                .iter()
                .any(|p| lower.contains(&p.to_lowercase()))
            {
                return Some(RejectReason::Abbreviation);
            }
        }
        let foreign = sentence
            .chars()
            .any(|c| c.is_alphabetic() && !self.allowed_alphabets.iter().any(|a| a.contains(c)));
        if foreign {
            return Some(RejectReason::ForeignAlphabet);
        }
        None
    }
}

/// Partition sentences into kept and rejected, preserving input order.
/// Rules fire in a fixed order: digits, then abbreviations, then foreign
/// letters, so each sentence gets exactly one reason.
pub fn filter_corpus(
    sentences: &[String],
    rules: &FilterRuleSet,
) -> (Vec<String>, Vec<(String, RejectReason)>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for sentence in sentences {
        match rules.classify(sentence) {
            None => kept.push(sentence.clone()),
            Some(reason) => rejected.push((sentence.clone(), reason)),
        }
    }
    (kept, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn punctuation_stripped_and_lowercased() {
        let t = normalize("The cat, sat.", Alphabet::Latin);
        assert_eq!(t.tokens(), ["the", "cat", "sat"]);
        assert_eq!(t.original(), "The cat, sat.");
    }

    #[test]
    fn apostrophe_preserved() {
        let t = normalize("Don't stop!", Alphabet::Latin);
        assert_eq!(t.tokens(), ["don't", "stop"]);
    }

    #[test]
    fn unicode_apostrophe_unified() {
        let t = normalize("don\u{2019}t", Alphabet::Latin);
        assert_eq!(t.tokens(), ["don't"]);
    }

    #[test]
    fn whitespace_collapsed() {
        let t = normalize("  A  B ", Alphabet::Latin);
        assert_eq!(t.tokens(), ["a", "b"]);
    }

    #[test]
    fn hyphen_splits_tokens() {
        let t = normalize("d-r", Alphabet::Cyrillic);
        // Latin letters are outside the Cyrillic alphabet entirely.
        assert!(t.is_empty());
        let t = normalize("d-r", Alphabet::Latin);
        assert_eq!(t.tokens(), ["d", "r"]);
    }

    #[test]
    fn all_punctuation_yields_empty() {
        let t = normalize("?! .,;", Alphabet::Latin);
        assert!(t.is_empty());
        assert_eq!(t.joined(), "");
    }

    #[test]
    fn normalize_is_idempotent() {
        for raw in ["The cat, sat.", "Don't STOP", "  a  b ", "d-r 19", "ĆwiĘk"] {
            let once = normalize(raw, Alphabet::Latin);
            let twice = normalize(&once.joined(), Alphabet::Latin);
            assert_eq!(once.tokens(), twice.tokens());
        }
    }

    #[test]
    fn tokenize_basics() {
        assert_eq!(tokenize("the cat sat"), ["the", "cat", "sat"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a'b"), ["a'b"]);
    }

    #[test]
    fn filter_digits() {
        let rules = FilterRuleSet::for_alphabet(Alphabet::Cyrillic);
        let input = vec!["купил 19 яблок".to_string()];
        let (kept, rejected) = filter_corpus(&input, &rules);
        assert!(kept.is_empty());
        assert_eq!(rejected[0].1, RejectReason::Digits);
    }

    #[test]
    fn filter_abbreviation_on_raw_text() {
        let rules =
            FilterRuleSet::new(true, vec!["д-р".to_string()], vec![Alphabet::Cyrillic]).unwrap();
        let input = vec!["пришёл д-р Иванов".to_string()];
        let (_, rejected) = filter_corpus(&input, &rules);
        assert_eq!(rejected[0].1, RejectReason::Abbreviation);
    }

    #[test]
    fn filter_foreign_alphabet() {
        let rules = FilterRuleSet::for_alphabet(Alphabet::Cyrillic);
        let input = vec![
            "компания Google выросла".to_string(),
            "чистое предложение".to_string(),
        ];
        let (kept, rejected) = filter_corpus(&input, &rules);
        assert_eq!(rejected.len(), 1);
        assert_eq!(rejected[0].1, RejectReason::ForeignAlphabet);
        assert_eq!(kept, vec!["чистое предложение".to_string()]);
    }

    #[test]
    fn filter_partitions_and_preserves_order() {
        let rules = FilterRuleSet::for_alphabet(Alphabet::Latin);
        let input: Vec<String> = ["one", "two 2", "three", "четыре"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (kept, rejected) = filter_corpus(&input, &rules);
        assert_eq!(kept.len() + rejected.len(), input.len());
        assert_eq!(kept, vec!["one".to_string(), "three".to_string()]);
    }

    #[test]
    fn rule_set_validation() {
        assert!(FilterRuleSet::new(true, vec![], vec![]).is_err());
        assert!(FilterRuleSet::new(true, vec!["".into()], vec![Alphabet::Latin]).is_err());
    }
}
