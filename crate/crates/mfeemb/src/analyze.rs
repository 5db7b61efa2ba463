//! Descriptive statistics over labeled corpora: dialogue-act frequencies,
//! sentiment histograms, n-gram rankings, and profanity usage — each split by
//! conflict class, plus a minimal SVG bar-chart renderer for the reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ConflictLabel, Corpus};
use crate::featurize::{score_sentiment, tokenize, DaTagger, PolarityLexicon, TagSet};
use crate::{Error, Result};

pub const BUNDLED_TAG_GROUPS: &str = include_str!("../data/tag_groups.tsv");
pub const BUNDLED_PROFANITY: &str = include_str!("../data/profanity_small.txt");

/// Relative frequency of each dialogue-act tag within each conflict class.
/// Frequencies within a class sum to 1.
pub fn da_frequency_by_class(
    corpus: &Corpus,
    tagger: &DaTagger,
    tagset: &TagSet,
) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let mut counts: BTreeMap<ConflictLabel, BTreeMap<String, u64>> = BTreeMap::new();
    let mut totals: BTreeMap<ConflictLabel, u64> = BTreeMap::new();
    for d in &corpus.dialogues {
        let label = d.label.ok_or_else(|| {
            Error::Data(format!("dialogue {:?} is unlabeled; label the corpus first", d.id))
        })?;
        for tag in tagger.tag_dialogue(d, tagset)? {
            *counts.entry(label).or_default().entry(tag.as_str().to_string()).or_insert(0) += 1;
            *totals.entry(label).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::Data("empty corpus".into()));
    }
    let mut out = BTreeMap::new();
    for (label, tag_counts) in counts {
        let total = totals[&label] as f64;
        out.insert(
            label.to_string(),
            tag_counts.into_iter().map(|(t, c)| (t, c as f64 / total)).collect(),
        );
    }
    Ok(out)
}

/// Histogram over fixed bin edges. `counts[i]` covers `[edges[i], edges[i+1])`
/// with the final bin closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(edges: Vec<f64>) -> Self {
        let n = edges.len() - 1;
        Histogram { edges, counts: vec![0; n] }
    }

    fn add(&mut self, v: f64) {
        let last = self.edges.len() - 2;
        let idx = match self.edges[1..].iter().position(|&e| v < e) {
            Some(i) => i,
            None => last, // v >= final edge: clamp into the last bin
        };
        self.counts[idx] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Default sentiment histogram edges: [-1, 1] in steps of 0.1.
pub fn default_bin_edges() -> Vec<f64> {
    (-10..=10).map(|i| i as f64 / 10.0).collect()
}

/// Histogram of per-utterance raw sentiment scores for each conflict class.
pub fn sentiment_distribution_by_class(
    corpus: &Corpus,
    lexicon: &PolarityLexicon,
    edges: &[f64],
) -> Result<BTreeMap<String, Histogram>> {
    if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage("histogram edges must be strictly increasing".into()));
    }
    let mut out: BTreeMap<String, Histogram> = BTreeMap::new();
    for d in &corpus.dialogues {
        let label = d.label.ok_or_else(|| {
            Error::Data(format!("dialogue {:?} is unlabeled; label the corpus first", d.id))
        })?;
        let hist = out
            .entry(label.to_string())
            .or_insert_with(|| Histogram::new(edges.to_vec()));
        for u in &d.utterances {
            hist.add(score_sentiment(u, lexicon));
        }
    }
    if out.is_empty() {
        return Err(Error::Data("empty corpus".into()));
    }
    Ok(out)
}

/// The `k` most frequent n-grams over the token sequences, ranked by count
/// descending with lexicographic order breaking ties.
pub fn top_ngrams(seqs: &[Vec<String>], n: usize, k: usize) -> Result<Vec<(Vec<String>, u64)>> {
    if n == 0 {
        return Err(Error::Usage("n-gram order must be >= 1".into()));
    }
    let mut counts: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for seq in seqs {
        if seq.len() < n {
            continue;
        }
        for w in seq.windows(n) {
            *counts.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(Vec<String>, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfanityReport {
    /// Class -> (word, count) for every profane word observed, sorted by
    /// count descending then alphabetically.
    pub per_class: BTreeMap<String, Vec<(String, u64)>>,
    /// Profane words that occur in both classes.
    pub shared: Vec<String>,
    /// Per-1000-token rate per class.
    pub rate_per_1000: BTreeMap<String, f64>,
}

/// Loads a profanity word list: one lowercase word per line, `#` comments.
pub fn parse_profanity(text: &str) -> Result<BTreeSet<String>> {
    let words: BTreeSet<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect();
    if words.is_empty() {
        return Err(Error::Data("empty profanity list".into()));
    }
    Ok(words)
}

pub fn load_profanity(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_profanity(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Counts profane-word usage per conflict class.
pub fn profanity_report(
    corpus: &Corpus,
    profanity: &BTreeSet<String>,
) -> Result<ProfanityReport> {
    let mut counts: BTreeMap<ConflictLabel, BTreeMap<String, u64>> = BTreeMap::new();
    let mut token_totals: BTreeMap<ConflictLabel, u64> = BTreeMap::new();
    for d in &corpus.dialogues {
        let label = d.label.ok_or_else(|| {
            Error::Data(format!("dialogue {:?} is unlabeled; label the corpus first", d.id))
        })?;
        for u in &d.utterances {
            for tok in tokenize(&u.text) {
                *token_totals.entry(label).or_insert(0) += 1;
                if profanity.contains(&tok) {
                    *counts.entry(label).or_default().entry(tok).or_insert(0) += 1;
                }
            }
        }
    }
    if token_totals.is_empty() {
        return Err(Error::Data("empty corpus".into()));
    }
    let mut per_class = BTreeMap::new();
    let mut rate = BTreeMap::new();
    let mut sets: Vec<BTreeSet<String>> = Vec::new();
    for label in ConflictLabel::ALL {
        let class_counts = counts.get(&label).cloned().unwrap_or_default();
        sets.push(class_counts.keys().cloned().collect());
        let profane_total: u64 = class_counts.values().sum();
        let tokens = token_totals.get(&label).copied().unwrap_or(0);
        rate.insert(
            label.to_string(),
            if tokens == 0 { 0.0 } else { profane_total as f64 * 1000.0 / tokens as f64 },
        );
        let mut ranked: Vec<(String, u64)> = class_counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        per_class.insert(label.to_string(), ranked);
    }
    let shared: Vec<String> = sets[0].intersection(&sets[1]).cloned().collect();
    Ok(ProfanityReport { per_class, shared, rate_per_1000: rate })
}

/// Coarse tag -> group mapping (good / bad / question / other).
#[derive(Debug, Clone)]
pub struct TagGroups {
    map: BTreeMap<String, String>,
}

impl TagGroups {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TAG_GROUPS).expect("bundled tag groups are valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (tag, group) = line.split_once('\t').ok_or_else(|| {
                Error::Data(format!("tag groups line {}: expected tag<TAB>group", lineno + 1))
            })?;
            map.insert(tag.trim().to_string(), group.trim().to_string());
        }
        if map.is_empty() {
            return Err(Error::Data("empty tag group table".into()));
        }
        Ok(TagGroups { map })
    }

    pub fn group(&self, tag: &str) -> &str {
        self.map.get(tag).map_or("other", String::as_str)
    }

    /// Collapses per-tag frequencies into per-group frequencies.
    pub fn collapse(&self, freqs: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for (tag, f) in freqs {
            *out.entry(self.group(tag).to_string()).or_insert(0.0) += f;
        }
        out
    }
}

/// Everything the `analyze` report carries for one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub da_frequencies: BTreeMap<String, BTreeMap<String, f64>>,
    pub da_group_frequencies: BTreeMap<String, BTreeMap<String, f64>>,
    pub sentiment_histograms: BTreeMap<String, Histogram>,
    /// Per class, per n in 1..=5: top dialogue-act n-grams with counts. Each
    /// dialogue contributes one act sequence.
    pub top_da_ngrams: BTreeMap<String, BTreeMap<String, Vec<(Vec<String>, u64)>>>,
    pub profanity: ProfanityReport,
}

/// Runs every analysis over a labeled corpus.
pub fn analyze_corpus(
    corpus: &Corpus,
    tagger: &DaTagger,
    lexicon: &PolarityLexicon,
    tagset: &TagSet,
    profanity: &BTreeSet<String>,
    top_k: usize,
) -> Result<FrequencyReport> {
    let da_frequencies = da_frequency_by_class(corpus, tagger, tagset)?;
    let groups = TagGroups::bundled();
    let da_group_frequencies = da_frequencies
        .iter()
        .map(|(class, freqs)| (class.clone(), groups.collapse(freqs)))
        .collect();
    let sentiment_histograms =
        sentiment_distribution_by_class(corpus, lexicon, &default_bin_edges())?;

    let mut per_class_seqs: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    for d in &corpus.dialogues {
        let label = d.label.expect("checked by da_frequency_by_class");
        let seq: Vec<String> = tagger
            .tag_dialogue(d, tagset)?
            .into_iter()
            .map(|t| t.as_str().to_string())
            .collect();
        per_class_seqs.entry(label.to_string()).or_default().push(seq);
    }
    let mut ngram_map = BTreeMap::new();
    for (class, seqs) in &per_class_seqs {
        let mut per_n = BTreeMap::new();
        for n in 1..=5usize {
            per_n.insert(n.to_string(), top_ngrams(seqs, n, top_k)?);
        }
        ngram_map.insert(class.clone(), per_n);
    }

    Ok(FrequencyReport {
        da_frequencies,
        da_group_frequencies,
        sentiment_histograms,
        top_da_ngrams: ngram_map,
        profanity: profanity_report(corpus, profanity)?,
    })
}

/// Renders grouped vertical bars as a self-contained SVG document. `series`
/// pairs a legend name with one value per label.
pub fn svg_bar_chart(title: &str, labels: &[String], series: &[(String, Vec<f64>)]) -> Result<String> {
    if labels.is_empty() || series.is_empty() {
        return Err(Error::Usage("chart needs at least one label and one series".into()));
    }
    for (name, vals) in series {
        if vals.len() != labels.len() {
            return Err(Error::Usage(format!(
                "series {name:?} has {} values for {} labels",
                vals.len(),
                labels.len()
            )));
        }
    }
    let width = 900.0;
    let height = 360.0;
    let margin = 50.0;
    let plot_w = width - 2.0 * margin;
    let plot_h = height - 2.0 * margin;
    let max = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let palette = ["#4878a8", "#e49444", "#6a9f58", "#d1605e", "#85628c"];
    let group_w = plot_w / labels.len() as f64;
    let bar_w = (group_w * 0.8) / series.len() as f64;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" \
         font-family=\"sans-serif\">{}</text>\n",
        width / 2.0,
        xml_escape(title)
    ));
    // Axes.
    svg.push_str(&format!(
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"#333\"/>\n  \
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"#333\"/>\n",
        m = margin,
        b = height - margin,
        r = width - margin,
        t = margin
    ));
    for (li, label) in labels.iter().enumerate() {
        let gx = margin + li as f64 * group_w + group_w * 0.1;
        for (si, (_, vals)) in series.iter().enumerate() {
            let h = (vals[li] / max) * plot_h;
            let x = gx + si as f64 * bar_w;
            let y = height - margin - h;
            svg.push_str(&format!(
                "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" \
                 fill=\"{fill}\"><title>{t}: {v}</title></rect>\n",
                w = bar_w.max(1.0),
                fill = palette[si % palette.len()],
                t = xml_escape(label),
                v = vals[li]
            ));
        }
        svg.push_str(&format!(
            "  <text x=\"{x:.2}\" y=\"{y}\" text-anchor=\"middle\" font-size=\"11\" \
             font-family=\"sans-serif\">{l}</text>\n",
            x = margin + li as f64 * group_w + group_w / 2.0,
            y = height - margin + 16.0,
            l = xml_escape(label)
        ));
    }
    for (si, (name, _)) in series.iter().enumerate() {
        let x = margin + si as f64 * 150.0;
        svg.push_str(&format!(
            "  <rect x=\"{x}\" y=\"{y}\" width=\"12\" height=\"12\" fill=\"{fill}\"/>\n  \
             <text x=\"{tx}\" y=\"{ty}\" font-size=\"12\" font-family=\"sans-serif\">{n}</text>\n",
            y = height - 18.0,
            fill = palette[si % palette.len()],
            tx = x + 16.0,
            ty = height - 8.0,
            n = xml_escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
