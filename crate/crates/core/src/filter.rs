//! Document filters: sensitive-word elimination and the two model-based
//! filters (spam classification, quality scoring with threshold
//! elimination).
//!
//! Semantics are boundary-exact:
//! - sensitive: drop when MORE THAN `max_distinct` distinct words match
//!   (3 matches keep, 4 drop);
//! - spam: drop at or above the threshold;
//! - quality: drop strictly below the threshold.

use std::path::Path;

use rand::Rng;

use crate::classifier::LinearTextClassifier;
use crate::corpus::{Action, Document, RuleVerdict, Stage};
use crate::error::Error;
use crate::lexicon::{bundled_sensitive_words, load_lexicon, KeywordMatcher, T2sTable};

/// Sensitive-word lexicon; entries are t2s-normalized and non-empty.
#[derive(Debug, Clone)]
pub struct SensitiveLexicon {
    matcher: KeywordMatcher,
    pub version: String,
}

impl SensitiveLexicon {
    pub fn new(entries: impl IntoIterator<Item = String>, t2s: &T2sTable, version: &str) -> Result<Self, Error> {
        let mut words: Vec<String> = entries
            .into_iter()
            .map(|w| t2s.convert(w.trim()))
            .filter(|w| !w.is_empty())
            .collect();
        words.sort();
        words.dedup();
        if words.is_empty() {
            return Err(Error::Config("sensitive lexicon is empty".into()));
        }
        Ok(SensitiveLexicon { matcher: KeywordMatcher::new(&words), version: version.to_string() })
    }

    pub fn load(path: &Path, t2s: &T2sTable) -> Result<Self, Error> {
        let entries = load_lexicon(path)?;
        Self::new(entries, t2s, &path.display().to_string())
    }

    pub fn bundled(t2s: &T2sTable) -> Self {
        Self::new(bundled_sensitive_words().to_vec(), t2s, "bundled-placeholder")
            .expect("bundled lexicon is non-empty")
    }

    pub fn words(&self) -> &[String] {
        self.matcher.words()
    }

    pub fn len(&self) -> usize {
        self.matcher.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matcher.is_empty()
    }
}

/// Drop when more than `max_distinct` DISTINCT lexicon words occur in
/// the (already t2s-normalized) text. The verdict lists the matches.
pub fn sensitive_filter(doc: &Document, lex: &SensitiveLexicon, max_distinct: usize) -> RuleVerdict {
    let matched = lex.matcher.distinct_matches(&doc.text);
    if matched.len() > max_distinct {
        RuleVerdict::new(
            "sensitive_words",
            Action::Drop,
            format!("distinct={} [{}]", matched.len(), matched.join(",")),
            Stage::Filter,
        )
    } else {
        RuleVerdict::new("sensitive_words", Action::Keep, "", Stage::Filter)
    }
}

/// Spam model: positive class is spam, so drop at or above threshold.
pub fn spam_filter(doc: &Document, clf: &LinearTextClassifier, threshold: f64) -> RuleVerdict {
    let score = clf.score(&doc.text);
    if score >= threshold {
        RuleVerdict::new(
            "spam",
            Action::Drop,
            format!("score={score:.6}>={threshold}"),
            Stage::Filter,
        )
    } else {
        RuleVerdict::new("spam", Action::Keep, format!("score={score:.6}"), Stage::Filter)
    }
}

/// Quality-elimination mode. The default is a hard threshold ("scores
/// below a threshold" is strict); the Pareto mode keeps a document iff
/// `pareto_sample(alpha) > 1 - score`, for parity with stochastic
/// quality resampling schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QualityMode {
    Threshold,
    Pareto { alpha: f64 },
}

/// Quality model: positive class is high quality, so drop strictly
/// below threshold. The score is carried in the verdict detail for
/// downstream evaluation loops.
pub fn quality_filter(doc: &Document, clf: &LinearTextClassifier, threshold: f64) -> RuleVerdict {
    let score = clf.score(&doc.text);
    if score < threshold {
        RuleVerdict::new(
            "quality",
            Action::Drop,
            format!("score={score:.6}<{threshold}"),
            Stage::Filter,
        )
    } else {
        RuleVerdict::new("quality", Action::Keep, format!("score={score:.6}"), Stage::Filter)
    }
}

/// Lomax-style Pareto draw: `(1-u)^(-1/alpha) - 1` for uniform `u`.
pub fn pareto_sample(alpha: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random::<f64>();
    (1.0 - u).powf(-1.0 / alpha) - 1.0
}

/// Stochastic quality filter in Pareto mode; deterministic under a
/// seeded RNG owned by the caller.
pub fn quality_filter_pareto(
    doc: &Document,
    clf: &LinearTextClassifier,
    alpha: f64,
    rng: &mut impl Rng,
) -> RuleVerdict {
    let score = clf.score(&doc.text);
    let draw = pareto_sample(alpha, rng);
    if draw > 1.0 - score {
        RuleVerdict::new("quality", Action::Keep, format!("score={score:.6}"), Stage::Filter)
    } else {
        RuleVerdict::new(
            "quality",
            Action::Drop,
            format!("score={score:.6} pareto_draw={draw:.6}"),
            Stage::Filter,
        )
    }
}
