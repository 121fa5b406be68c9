use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::Result;

const DEFAULT_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// Preprocessing applied identically to queries and documents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenConfig {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
    pub min_token_length: usize,
}

impl Default for TokenConfig {
    fn default() -> Self {
        TokenConfig {
            lowercase: true,
            stopwords: default_stopwords(),
            min_token_length: 1,
        }
    }
}

impl TokenConfig {
    /// Lowercasing, no stopwords, no length filter.
    pub fn without_stopwords() -> Self {
        TokenConfig {
            stopwords: BTreeSet::new(),
            ..Default::default()
        }
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords = words
            .into_iter()
            .map(|w| self.normalize_stopword(w.as_ref()))
            .filter(|w| !w.is_empty())
            .collect();
        self
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    fn normalize_stopword(&self, word: &str) -> String {
        let word = word.trim();
        if self.lowercase {
            word.to_lowercase()
        } else {
            word.to_string()
        }
    }
}

pub fn default_stopwords() -> BTreeSet<String> {
    DEFAULT_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Reads a stopword file: one term per line, blank lines and `#` comments ignored.
pub fn read_stopwords<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut words = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        words.push(line.to_string());
    }
    Ok(words)
}

/// Splits `text` on non-alphanumeric boundaries after optional lowercasing,
/// then drops stopwords and tokens shorter than `min_token_length` characters.
pub fn tokenize(text: &str, cfg: &TokenConfig) -> Vec<String> {
    let lowered;
    let text = if cfg.lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| t.chars().count() >= cfg.min_token_length)
        .filter(|t| !cfg.is_stopword(t))
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splits_and_lowercases() {
        let cfg = TokenConfig::without_stopwords();
        assert_eq!(
            tokenize("Negative pressure wound therapy", &cfg),
            vec!["negative", "pressure", "wound", "therapy"]
        );
    }

    #[test]
    fn removes_stopwords_and_punctuation() {
        let cfg = TokenConfig::without_stopwords().with_stopwords(["the", "of", "in"]);
        assert_eq!(
            tokenize("the role of MMS2 in cancer?", &cfg),
            vec!["role", "mms2", "cancer"]
        );
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("", &TokenConfig::default()).is_empty());
        assert!(tokenize(" ,;- ", &TokenConfig::default()).is_empty());
    }

    #[test]
    fn min_length_and_case_preserving() {
        let cfg = TokenConfig {
            lowercase: false,
            stopwords: BTreeSet::new(),
            min_token_length: 3,
        };
        assert_eq!(tokenize("an NPWT of p53-ko", &cfg), vec!["NPWT", "p53"]);
    }

    #[test]
    fn default_list_covers_question_words() {
        let cfg = TokenConfig::default();
        assert_eq!(
            tokenize("what is the role of MMS2 in cancer?", &cfg),
            vec!["role", "mms2", "cancer"]
        );
    }

    #[test]
    fn stopword_file_parsing() {
        let words = read_stopwords("the\n\n# comment\n Of \n".as_bytes()).unwrap();
        let cfg = TokenConfig::without_stopwords().with_stopwords(words);
        assert!(cfg.is_stopword("the"));
        assert!(cfg.is_stopword("of"));
        assert_eq!(cfg.stopwords.len(), 2);
    }

    proptest! {
        #[test]
        fn idempotent_on_own_output(text in "\\PC{0,80}") {
            let cfg = TokenConfig::default();
            let once = tokenize(&text, &cfg);
            let twice = tokenize(&once.join(" "), &cfg);
            prop_assert_eq!(once, twice);
        }
    }
}
