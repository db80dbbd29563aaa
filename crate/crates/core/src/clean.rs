//! Rule-based text cleaning: five individually testable rules composed
//! into one pass over a document.
//!
//! Order is fixed: normalize first (t2s, special symbols, navigation,
//! duplicated paragraphs), judge last (ad detection, minimum-content
//! rule). Judgments must see the text that would actually survive.

use crate::corpus::{Action, Document, RuleVerdict, Stage};
use crate::error::Error;
use crate::lexicon::{bundled_ad_keywords, bundled_t2s, KeywordMatcher, T2sTable};

/// How paragraphs are delimited for duplicate-paragraph removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParagraphSplit {
    /// One paragraph per line (typical for extracted Chinese web text).
    #[default]
    SingleNewline,
    /// Paragraphs separated by blank lines.
    BlankLine,
}

/// Tunables for the cleaning pass.
#[derive(Debug, Clone)]
pub struct CleanConfig {
    /// Drop when the CJK fraction of non-whitespace scalars is below this.
    pub min_chinese_ratio: f64,
    /// Drop when fewer non-whitespace scalars than this survive cleaning.
    pub min_chars: usize,
    pub ad_keywords: KeywordMatcher,
    /// Distinct ad keywords required to call a document an advertisement.
    pub ad_threshold: usize,
    pub t2s: T2sTable,
    /// A line longer than this (in scalars) is never navigation.
    pub nav_max_line_chars: usize,
    /// Minimum delimiter density for a line to count as navigation.
    pub nav_min_delim_density: f64,
    pub paragraph_split: ParagraphSplit,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            min_chinese_ratio: 0.60,
            min_chars: 150,
            ad_keywords: KeywordMatcher::new(bundled_ad_keywords()),
            ad_threshold: 3,
            t2s: bundled_t2s().clone(),
            nav_max_line_chars: 40,
            nav_min_delim_density: 0.15,
            paragraph_split: ParagraphSplit::SingleNewline,
        }
    }
}

impl CleanConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(0.0..=1.0).contains(&self.min_chinese_ratio) {
            return Err(Error::Config("min_chinese_ratio must be in [0,1]".into()));
        }
        if self.ad_threshold < 1 {
            return Err(Error::Config("ad_threshold must be >= 1".into()));
        }
        if self.ad_keywords.is_empty() {
            return Err(Error::Config("ad keyword lexicon is empty".into()));
        }
        Ok(())
    }
}

/// True for scalars in the CJK ideograph blocks used by modern Chinese
/// text: U+4E00-9FFF, U+3400-4DBF, U+F900-FAFF.
pub fn is_cjk(c: char) -> bool {
    matches!(u32::from(c),
        0x4E00..=0x9FFF | 0x3400..=0x4DBF | 0xF900..=0xFAFF)
}

/// Fraction of non-whitespace scalars that are CJK ideographs.
/// Empty or whitespace-only text yields 0.
pub fn chinese_char_ratio(text: &str) -> f64 {
    let mut total = 0usize;
    let mut cjk = 0usize;
    for c in text.chars() {
        if c.is_whitespace() {
            continue;
        }
        total += 1;
        if is_cjk(c) {
            cjk += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        cjk as f64 / total as f64
    }
}

fn non_whitespace_count(text: &str) -> usize {
    text.chars().filter(|c| !c.is_whitespace()).count()
}

const SENTENCE_FINAL: &[char] = &['。', '．', '.', '!', '！', '?', '？', '…', '；', ';'];

/// Minimum-content rule: Chinese ratio, length, and title-only check,
/// in that order; the verdict names the first failing condition.
/// Both numeric rules are strict ("less than"), so exact boundary
/// values keep.
pub fn rule_min_content(doc: &Document, cfg: &CleanConfig) -> RuleVerdict {
    let ratio = chinese_char_ratio(&doc.text);
    if ratio < cfg.min_chinese_ratio {
        return RuleVerdict::new(
            "min_content",
            Action::Drop,
            format!("chinese_ratio={ratio:.4}<{:.2}", cfg.min_chinese_ratio),
            Stage::Clean,
        );
    }
    let chars = non_whitespace_count(&doc.text);
    if chars < cfg.min_chars {
        return RuleVerdict::new(
            "min_content",
            Action::Drop,
            format!("chars={chars}<{}", cfg.min_chars),
            Stage::Clean,
        );
    }
    let trimmed = doc.text.trim();
    let title_only = match &doc.title {
        Some(title) if trimmed == title.trim() => true,
        _ => {
            !trimmed.contains('\n')
                && non_whitespace_count(trimmed) < cfg.min_chars
                && !trimmed.ends_with(SENTENCE_FINAL)
        }
    };
    if title_only {
        return RuleVerdict::new("min_content", Action::Drop, "title_only", Stage::Clean);
    }
    RuleVerdict::new("min_content", Action::Keep, "", Stage::Clean)
}

fn is_private_use(c: char) -> bool {
    matches!(u32::from(c),
        0xE000..=0xF8FF | 0xF0000..=0xFFFFD | 0x10_0000..=0x10_FFFD)
}

/// Punctuation eligible for run collapsing. Fullwidth forms are folded
/// onto their ASCII counterparts before classification so that ！ and !
/// behave alike; CJK symbols and general punctuation are included,
/// letters and digits are not.
fn is_collapsible_punct(c: char) -> bool {
    let u = u32::from(c);
    if (0xFF01..=0xFF5E).contains(&u) {
        let folded = char::from_u32(u - 0xFEE0).unwrap_or('a');
        return folded.is_ascii_punctuation();
    }
    c.is_ascii_punctuation()
        || matches!(u, 0x2000..=0x206F | 0x2E00..=0x2E7F | 0x3000..=0x303F | 0xFE30..=0xFE4F)
}

/// Remove control characters (except newline and tab), private-use and
/// replacement scalars, and collapse runs of four or more identical
/// punctuation scalars to a single one.
pub fn remove_special_symbols(text: &str) -> String {
    let filtered: Vec<char> = text
        .chars()
        .filter(|&c| {
            if c == '\n' || c == '\t' {
                return true;
            }
            !(c.is_control() || is_private_use(c) || c == '\u{FFFD}')
        })
        .collect();

    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < filtered.len() {
        let c = filtered[i];
        let mut run = 1;
        while i + run < filtered.len() && filtered[i + run] == c {
            run += 1;
        }
        if run >= 4 && is_collapsible_punct(c) {
            out.push(c);
        } else {
            for _ in 0..run {
                out.push(c);
            }
        }
        i += run;
    }
    out
}

fn normalize_paragraph(p: &str) -> String {
    p.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Drop repeated paragraphs, keeping the first occurrence of each
/// whitespace-normalized paragraph. Paragraphs that normalize to the
/// empty string are separators and always pass through.
pub fn dedup_paragraphs(text: &str, split: ParagraphSplit) -> String {
    let paragraphs: Vec<&str> = match split {
        ParagraphSplit::SingleNewline => text.split('\n').collect(),
        ParagraphSplit::BlankLine => text
            .split("\n\n")
            .collect(),
    };
    let mut seen = std::collections::HashSet::new();
    let mut kept: Vec<&str> = Vec::with_capacity(paragraphs.len());
    for p in paragraphs {
        let key = normalize_paragraph(p);
        if key.is_empty() || seen.insert(key) {
            kept.push(p);
        }
    }
    let sep = match split {
        ParagraphSplit::SingleNewline => "\n",
        ParagraphSplit::BlankLine => "\n\n",
    };
    kept.join(sep)
}

/// True when at least `threshold` DISTINCT keywords occur in the text.
/// Occurrence counts do not matter; one keyword repeated a hundred
/// times is a single match.
pub fn detect_ads(text: &str, keywords: &KeywordMatcher, threshold: usize) -> bool {
    keywords.distinct_count_reaches(text, threshold)
}

/// Convert traditional scalars to simplified via the table; scalar count
/// is preserved.
pub fn t2s_convert(text: &str, table: &T2sTable) -> String {
    table.convert(text)
}

const NAV_DELIMS: &[char] = &['|', '｜', '>', '»', '/', '·'];

/// Navigation heuristic: a line is navigation when it is short and
/// delimiter-dense. Whitespace counts toward density only when every
/// whitespace-separated token on the line is at most four scalars —
/// the "首页 | 新闻 | 体育" shape.
fn is_nav_line(line: &str, cfg: &CleanConfig) -> bool {
    let total = line.chars().count();
    if total == 0 || total >= cfg.nav_max_line_chars {
        return false;
    }
    let short_tokens = line.split_whitespace().all(|t| t.chars().count() <= 4);
    let delims = line
        .chars()
        .filter(|&c| NAV_DELIMS.contains(&c) || (short_tokens && c.is_whitespace()))
        .count();
    delims as f64 / total as f64 >= cfg.nav_min_delim_density
}

/// Remove leading and trailing blocks of navigation-classified lines.
/// Lines inside the body are never removed.
pub fn strip_nav(text: &str, cfg: &CleanConfig) -> String {
    let lines: Vec<&str> = text.split('\n').collect();
    let mut start = 0;
    while start < lines.len() && is_nav_line(lines[start], cfg) {
        start += 1;
    }
    let mut end = lines.len();
    while end > start && is_nav_line(lines[end - 1], cfg) {
        end -= 1;
    }
    lines[start..end].join("\n")
}

/// Result of one full cleaning pass.
#[derive(Debug, Clone)]
pub struct CleanOutcome {
    /// Transformed document with audit entries appended.
    pub doc: Document,
    pub kept: bool,
}

/// Apply the full rule set in fixed order: t2s, special symbols,
/// navigation, duplicated paragraphs, then ad detection and the
/// minimum-content rule on the transformed text.
pub fn clean_document(doc: &Document, cfg: &CleanConfig) -> CleanOutcome {
    let mut doc = doc.clone();

    let converted = t2s_convert(&doc.text, &cfg.t2s);
    if converted != doc.text {
        let changed = converted
            .chars()
            .zip(doc.text.chars())
            .filter(|(a, b)| a != b)
            .count();
        doc.apply_transform("t2s", Stage::Clean, converted, format!("converted={changed}"));
    }

    let stripped = remove_special_symbols(&doc.text);
    if stripped != doc.text {
        let removed = doc.text.chars().count() - stripped.chars().count();
        doc.apply_transform("special_symbols", Stage::Clean, stripped, format!("removed={removed}"));
    }

    let body = strip_nav(&doc.text, cfg);
    if body != doc.text {
        let removed = doc.text.lines().count() - body.lines().count();
        doc.apply_transform("strip_nav", Stage::Clean, body, format!("nav_lines={removed}"));
    }

    let deduped = dedup_paragraphs(&doc.text, cfg.paragraph_split);
    if deduped != doc.text {
        doc.apply_transform("dedup_paragraphs", Stage::Clean, deduped, "");
    }

    if detect_ads(&doc.text, &cfg.ad_keywords, cfg.ad_threshold) {
        let matched = cfg.ad_keywords.distinct_matches(&doc.text).join(",");
        doc.push_verdict(RuleVerdict::new("ads", Action::Drop, matched, Stage::Clean));
        return CleanOutcome { doc, kept: false };
    }

    let verdict = rule_min_content(&doc, cfg);
    if verdict.is_drop() {
        doc.push_verdict(verdict);
        return CleanOutcome { doc, kept: false };
    }

    CleanOutcome { doc, kept: true }
}
