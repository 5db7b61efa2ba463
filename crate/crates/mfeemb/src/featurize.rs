//! Turning dialogues into the three parallel channel sequences: word tokens,
//! dialogue-act tags, and quantized sentiment tokens.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::ops::Range;
use std::path::Path;

use crate::corpus::{Dialogue, Utterance};
use crate::{Error, Result};

pub const BUNDLED_TAGSET: &str = include_str!("../data/swda_tags.txt");
pub const BUNDLED_RULES: &str = include_str!("../data/da_rules.tsv");
pub const BUNDLED_LEXICON: &str = include_str!("../data/default_lexicon.tsv");

/// Fallback tag for utterances no rule matches: plain statement.
pub const DEFAULT_TAG: &str = "sd";

// ---------------------------------------------------------------------------
// Tokenizer

/// Lowercased word tokens with their byte spans in the original text.
///
/// A token is a maximal run of alphanumeric characters, allowing internal
/// apostrophes (`don't`, `it’s`) but not leading or trailing ones. Everything
/// else is a separator and is dropped. Spans index the *original* string so
/// callers can splice replacements back in without disturbing punctuation.
pub fn token_spans(text: &str) -> Vec<(String, Range<usize>)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut token = String::new();
        while i < chars.len() {
            let (_, c) = chars[i];
            if c.is_alphanumeric() {
                token.extend(c.to_lowercase());
                i += 1;
            } else if (c == '\'' || c == '\u{2019}')
                && i + 1 < chars.len()
                && chars[i + 1].1.is_alphanumeric()
            {
                token.push('\'');
                i += 1;
            } else {
                break;
            }
        }
        let end = if i < chars.len() { chars[i].0 } else { text.len() };
        out.push((token, start..end));
    }
    out
}

/// Lowercased word tokens of `text`; see [`token_spans`].
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text).into_iter().map(|(t, _)| t).collect()
}

// ---------------------------------------------------------------------------
// Dialogue-act tagset and taggers

/// The closed dialogue-act tagset (42 SWBD-DAMSL cluster tags).
#[derive(Debug, Clone)]
pub struct TagSet {
    tags: BTreeSet<String>,
}

impl TagSet {
    pub fn bundled() -> Self {
        let ts = Self::parse(BUNDLED_TAGSET).expect("bundled tagset is valid");
        assert_eq!(ts.len(), 42, "bundled tagset must have exactly 42 tags");
        ts
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut tags = BTreeSet::new();
        for line in text.lines() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if !tags.insert(t.to_string()) {
                return Err(Error::Data(format!("duplicate tag {t:?} in tagset")));
            }
        }
        if tags.is_empty() {
            return Err(Error::Data("empty tagset".into()));
        }
        Ok(TagSet { tags })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(String::as_str)
    }
}

/// A dialogue-act tag known to belong to a tagset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DaTag(String);

impl DaTag {
    pub fn new(tag: &str, tagset: &TagSet) -> Result<Self> {
        if tagset.contains(tag) {
            Ok(DaTag(tag.to_string()))
        } else {
            Err(Error::Data(format!("unknown dialogue-act tag {tag:?}")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RuleKind {
    Exact,
    Only,
    StartsQ,
    EndsQ,
    Contains,
    Phrase,
}

#[derive(Debug, Clone)]
struct Rule {
    kind: RuleKind,
    /// Pattern as written in the table (used for exact/starts-q/contains).
    pattern: String,
    /// Pre-split comma set (only) or token sequence (phrase).
    pattern_items: Vec<String>,
    tag: String,
}

/// Ordered first-match-wins rule table for the baseline tagger.
#[derive(Debug, Clone)]
pub struct RuleTable {
    rules: Vec<Rule>,
}

impl RuleTable {
    pub fn bundled(tagset: &TagSet) -> Self {
        Self::parse(BUNDLED_RULES, tagset).expect("bundled rule table is valid")
    }

    pub fn parse(text: &str, tagset: &TagSet) -> Result<Self> {
        let mut rules = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (kind, pattern, tag) = match (cols.next(), cols.next(), cols.next()) {
                (Some(k), Some(p), Some(t)) => (k.trim(), p.trim(), t.trim()),
                _ => {
                    return Err(Error::Data(format!(
                        "rule line {}: expected kind<TAB>pattern<TAB>tag",
                        lineno + 1
                    )))
                }
            };
            let kind = match kind {
                "exact" => RuleKind::Exact,
                "only" => RuleKind::Only,
                "starts-q" => RuleKind::StartsQ,
                "ends-q" => RuleKind::EndsQ,
                "contains" => RuleKind::Contains,
                "phrase" => RuleKind::Phrase,
                other => {
                    return Err(Error::Data(format!(
                        "rule line {}: unknown kind {other:?}",
                        lineno + 1
                    )))
                }
            };
            if !tagset.contains(tag) {
                return Err(Error::Data(format!(
                    "rule line {}: tag {tag:?} not in tagset",
                    lineno + 1
                )));
            }
            let pattern_items = match kind {
                RuleKind::Only => pattern.split(',').map(|s| s.trim().to_string()).collect(),
                RuleKind::Phrase => tokenize(pattern),
                _ => Vec::new(),
            };
            rules.push(Rule {
                kind,
                pattern: pattern.to_lowercase(),
                pattern_items,
                tag: tag.to_string(),
            });
        }
        if rules.is_empty() {
            return Err(Error::Data("empty rule table".into()));
        }
        Ok(RuleTable { rules })
    }

    pub fn load(path: impl AsRef<Path>, tagset: &TagSet) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, tagset).map_err(|e| Error::format(path, e.to_string()))
    }

    /// Tags a single utterance text. Falls back to [`DEFAULT_TAG`].
    pub fn tag_text(&self, text: &str) -> &str {
        let raw = text.trim().to_lowercase();
        let tokens = tokenize(text);
        let is_question = raw.ends_with('?');
        for rule in &self.rules {
            let hit = match rule.kind {
                RuleKind::Exact => raw == rule.pattern,
                RuleKind::Only => {
                    !tokens.is_empty()
                        && tokens.iter().all(|t| rule.pattern_items.iter().any(|p| p == t))
                }
                RuleKind::StartsQ => {
                    is_question && tokens.first().map(String::as_str) == Some(&rule.pattern)
                }
                RuleKind::EndsQ => is_question,
                RuleKind::Contains => tokens.iter().any(|t| t == &rule.pattern),
                RuleKind::Phrase => {
                    let p = &rule.pattern_items;
                    !p.is_empty()
                        && tokens.len() >= p.len()
                        && tokens.windows(p.len()).any(|w| w == p.as_slice())
                }
            };
            if hit {
                return &rule.tag;
            }
        }
        DEFAULT_TAG
    }
}

/// Source of dialogue-act tags for a corpus.
#[derive(Debug, Clone)]
pub enum DaTagger {
    /// Use the gold tags stored on each dialogue; error when absent.
    Pretagged,
    /// Tag each utterance with an ordered rule table.
    RuleBaseline(RuleTable),
}

impl DaTagger {
    /// One tag per utterance, validated against `tagset`.
    pub fn tag_dialogue(&self, d: &Dialogue, tagset: &TagSet) -> Result<Vec<DaTag>> {
        match self {
            DaTagger::Pretagged => {
                let das = d.pretagged_das.as_ref().ok_or_else(|| {
                    Error::Data(format!(
                        "dialogue {:?} has no pretagged dialogue acts",
                        d.id
                    ))
                })?;
                if das.len() != d.utterances.len() {
                    return Err(Error::Data(format!(
                        "dialogue {:?}: {} tags for {} utterances",
                        d.id,
                        das.len(),
                        d.utterances.len()
                    )));
                }
                das.iter().map(|t| DaTag::new(t, tagset)).collect()
            }
            DaTagger::RuleBaseline(table) => d
                .utterances
                .iter()
                .map(|u| DaTag::new(table.tag_text(&u.text), tagset))
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Sentiment

/// Word-polarity lexicon with negation and intensifier sections.
#[derive(Debug, Clone, Default)]
pub struct PolarityLexicon {
    polarity: BTreeMap<String, f64>,
    negations: BTreeSet<String>,
    intensifiers: BTreeMap<String, f64>,
}

impl PolarityLexicon {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is valid")
    }

    /// Parses the three-section TSV: `word<TAB>polarity` lines, then an
    /// optional `#NEGATION` section of bare words, then an optional
    /// `#INTENSIFIER` section of `word<TAB>multiplier` lines.
    pub fn parse(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            Polarity,
            Negation,
            Intensifier,
        }
        let mut lex = PolarityLexicon::default();
        let mut section = Section::Polarity;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "#NEGATION" {
                section = Section::Negation;
                continue;
            }
            if line == "#INTENSIFIER" {
                section = Section::Intensifier;
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Data(format!("lexicon line {}: {msg}", lineno + 1));
            match section {
                Section::Polarity => {
                    let (word, val) = line
                        .split_once('\t')
                        .ok_or_else(|| err("expected word<TAB>polarity".into()))?;
                    let p: f64 = val
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("bad polarity {val:?}")))?;
                    if !(-1.0..=1.0).contains(&p) {
                        return Err(err(format!("polarity {p} outside [-1, 1]")));
                    }
                    lex.polarity.insert(word.trim().to_lowercase(), p);
                }
                Section::Negation => {
                    lex.negations.insert(line.to_lowercase());
                }
                Section::Intensifier => {
                    let (word, val) = line
                        .split_once('\t')
                        .ok_or_else(|| err("expected word<TAB>multiplier".into()))?;
                    let m: f64 = val
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("bad multiplier {val:?}")))?;
                    if !(m.is_finite() && m > 0.0) {
                        return Err(err(format!("multiplier {m} must be positive")));
                    }
                    lex.intensifiers.insert(word.trim().to_lowercase(), m);
                }
            }
        }
        if lex.polarity.is_empty() {
            return Err(Error::Data("lexicon has no polarity entries".into()));
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn polarity(&self, token: &str) -> Option<f64> {
        self.polarity.get(token).copied()
    }

    pub fn is_negation(&self, token: &str) -> bool {
        self.negations.contains(token)
    }

    pub fn intensifier(&self, token: &str) -> Option<f64> {
        self.intensifiers.get(token).copied()
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, f64)> {
        self.polarity.iter().map(|(w, &p)| (w.as_str(), p))
    }

    pub fn len(&self) -> usize {
        self.polarity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarity.is_empty()
    }
}

/// Mean polarity of the lexicon words in the utterance, in [-1, 1].
///
/// A matched word's polarity is flipped when the immediately preceding token
/// is a negation, or scaled when it is an intensifier. Utterances with no
/// matches score 0. The mean is clamped to [-1, 1] since intensifiers can
/// push individual contributions outside the interval.
pub fn score_sentiment(u: &Utterance, lexicon: &PolarityLexicon) -> f64 {
    let tokens = tokenize(&u.text);
    let mut sum = 0.0;
    let mut matched = 0usize;
    for (i, tok) in tokens.iter().enumerate() {
        let Some(p) = lexicon.polarity(tok) else { continue };
        let mut contribution = p;
        if i > 0 {
            let prev = &tokens[i - 1];
            if lexicon.is_negation(prev) {
                contribution = -contribution;
            } else if let Some(m) = lexicon.intensifier(prev) {
                contribution *= m;
            }
        }
        sum += contribution;
        matched += 1;
    }
    if matched == 0 {
        0.0
    } else {
        (sum / matched as f64).clamp(-1.0, 1.0)
    }
}

/// Maps a polarity in [-1, 1] onto one of `bins` uniform-width buckets and
/// renders it as a sentiment token `S0..S{bins-1}`. The final bin is closed
/// on the right so +1 lands in it.
pub fn quantize_polarity(p: f64, bins: usize) -> Result<String> {
    if bins < 2 {
        return Err(Error::Usage(format!("sentiment bins must be >= 2, got {bins}")));
    }
    if !(-1.0..=1.0).contains(&p) {
        return Err(Error::Numeric(format!("polarity {p} outside [-1, 1]")));
    }
    let idx = (((p + 1.0) / 2.0) * bins as f64).floor() as usize;
    Ok(format!("S{}", idx.min(bins - 1)))
}

// ---------------------------------------------------------------------------
// Channel extraction

/// The three parallel views of one dialogue.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSequences {
    /// All word tokens of the dialogue, in utterance order.
    pub tokens: Vec<String>,
    /// One dialogue-act tag per utterance.
    pub das: Vec<DaTag>,
    /// One raw sentiment score per utterance, in [-1, 1].
    pub sentiments_raw: Vec<f64>,
    /// One quantized sentiment token per utterance.
    pub sentiments_quantized: Vec<String>,
}

/// Computes all three channel sequences for one dialogue.
pub fn extract_channels(
    d: &Dialogue,
    tagger: &DaTagger,
    lexicon: &PolarityLexicon,
    bins: usize,
    tagset: &TagSet,
) -> Result<ChannelSequences> {
    let das = tagger.tag_dialogue(d, tagset)?;
    let mut tokens = Vec::new();
    let mut sentiments_raw = Vec::with_capacity(d.utterances.len());
    let mut sentiments_quantized = Vec::with_capacity(d.utterances.len());
    for u in &d.utterances {
        tokens.extend(tokenize(&u.text));
        let p = score_sentiment(u, lexicon);
        sentiments_quantized.push(quantize_polarity(p, bins)?);
        sentiments_raw.push(p);
    }
    debug_assert_eq!(das.len(), d.utterances.len());
    Ok(ChannelSequences { tokens, das, sentiments_raw, sentiments_quantized })
}
