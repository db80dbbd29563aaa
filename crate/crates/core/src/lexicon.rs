//! Lexicon and conversion-table file formats.
//!
//! Lexicons: UTF-8, one entry per line, `#` starts a comment line.
//! Traditional-to-simplified table: UTF-8 TSV, `traditional<TAB>simplified`,
//! one single-scalar pair per line.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use aho_corasick::AhoCorasick;

use crate::error::Error;

/// Parse a lexicon from its textual form. Blank lines and `#` comments
/// are skipped; entries are trimmed.
pub fn parse_lexicon(content: &str) -> Vec<String> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn load_lexicon(path: &Path) -> Result<Vec<String>, Error> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_lexicon(&content))
}

/// A keyword lexicon compiled into a single-pass matcher. Matching is
/// substring with overlaps, so "优惠" still counts inside "优惠券".
#[derive(Debug, Clone)]
pub struct KeywordMatcher {
    words: Vec<String>,
    automaton: AhoCorasick,
}

impl KeywordMatcher {
    /// Compile non-empty entries; order is preserved for reporting.
    pub fn new(entries: &[String]) -> Self {
        let words: Vec<String> =
            entries.iter().filter(|w| !w.is_empty()).cloned().collect();
        let automaton = AhoCorasick::new(&words).expect("keyword lexicon compiles");
        KeywordMatcher { words, automaton }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Distinct entries occurring in the text, in lexicon order.
    pub fn distinct_matches<'a>(&'a self, text: &str) -> Vec<&'a str> {
        let mut hit = vec![false; self.words.len()];
        for m in self.automaton.find_overlapping_iter(text) {
            hit[m.pattern().as_usize()] = true;
        }
        self.words
            .iter()
            .zip(&hit)
            .filter(|(_, &h)| h)
            .map(|(w, _)| w.as_str())
            .collect()
    }

    /// Early-exit check: does the text contain at least `threshold`
    /// distinct entries?
    pub fn distinct_count_reaches(&self, text: &str, threshold: usize) -> bool {
        if threshold == 0 {
            return true;
        }
        let mut hit = vec![false; self.words.len()];
        let mut distinct = 0usize;
        for m in self.automaton.find_overlapping_iter(text) {
            let idx = m.pattern().as_usize();
            if !hit[idx] {
                hit[idx] = true;
                distinct += 1;
                if distinct >= threshold {
                    return true;
                }
            }
        }
        false
    }
}

/// Single-scalar traditional → simplified Chinese mapping.
#[derive(Debug, Clone, Default)]
pub struct T2sTable {
    map: HashMap<char, char>,
}

impl T2sTable {
    pub fn parse(content: &str) -> Result<Self, Error> {
        let mut map = HashMap::new();
        for (idx, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (trad, simp) = match (fields.next(), fields.next()) {
                (Some(t), Some(s)) => (t.trim(), s.trim()),
                _ => {
                    return Err(Error::Config(format!(
                        "t2s table line {}: expected 'traditional<TAB>simplified'",
                        idx + 1
                    )))
                }
            };
            let (t, s) = match (single_scalar(trad), single_scalar(simp)) {
                (Some(t), Some(s)) => (t, s),
                _ => {
                    return Err(Error::Config(format!(
                        "t2s table line {}: entries must be single scalars",
                        idx + 1
                    )))
                }
            };
            map.insert(t, s);
        }
        Ok(T2sTable { map })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content)
    }

    pub fn get(&self, c: char) -> Option<char> {
        self.map.get(&c).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Map every scalar through the table; scalars without an entry pass
    /// through unchanged. Output scalar count equals input scalar count.
    pub fn convert(&self, text: &str) -> String {
        text.chars().map(|c| self.get(c).unwrap_or(c)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, char)> + '_ {
        self.map.iter().map(|(&t, &s)| (t, s))
    }
}

fn single_scalar(s: &str) -> Option<char> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

/// Bundled traditional → simplified table (common modern characters).
pub fn bundled_t2s() -> &'static T2sTable {
    static TABLE: OnceLock<T2sTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        T2sTable::parse(include_str!("../assets/t2s.tsv")).expect("bundled t2s table is valid")
    })
}

/// Bundled default advertisement keyword lexicon.
pub fn bundled_ad_keywords() -> &'static [String] {
    static LEX: OnceLock<Vec<String>> = OnceLock::new();
    LEX.get_or_init(|| parse_lexicon(include_str!("../assets/ad_keywords.txt")))
}

/// Bundled placeholder sensitive-word lexicon (replace in production).
pub fn bundled_sensitive_words() -> &'static [String] {
    static LEX: OnceLock<Vec<String>> = OnceLock::new();
    LEX.get_or_init(|| parse_lexicon(include_str!("../assets/sensitive_words.txt")))
}
