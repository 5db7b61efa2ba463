//! Corpus augmentation by vocabulary-constrained synonym replacement, plus
//! the channel-stability audit that checks augmentation left the structural
//! channels alone.
//!
//! Each synthetic dialogue replaces a budgeted number of word occurrences
//! with synonyms drawn from a thesaurus, optionally restricted to a target
//! vocabulary so the synthetic text drifts *toward* a transfer domain.
//! Replacements are spliced into the raw utterance text by byte span, so
//! punctuation, casing of the surrounding text, and utterance structure all
//! survive.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{vocabulary, Corpus, Dialogue};
use crate::featurize::{
    extract_channels, token_spans, tokenize, DaTagger, PolarityLexicon, TagSet,
};
use crate::util::{derive_seed, fnv1a64, permutation_stable_mean};
use crate::{Error, Result};

pub const BUNDLED_THESAURUS: &str = include_str!("../data/default_thesaurus.tsv");

/// Symmetric synonym table over single-word lowercase entries.
#[derive(Debug, Clone, Default)]
pub struct Thesaurus {
    map: BTreeMap<String, Vec<String>>,
}

impl Thesaurus {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_THESAURUS).expect("bundled thesaurus is valid")
    }

    /// Parses `word<TAB>syn1,syn2,...` lines. Entries are lowercased, closed
    /// symmetrically (if `a` lists `b`, `b` gains `a`), deduplicated and kept
    /// sorted. Multi-token or empty synonyms are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Data(format!("thesaurus line {}: {msg}", lineno + 1));
            let (word, rest) = line
                .split_once('\t')
                .ok_or_else(|| err("expected word<TAB>synonyms".into()))?;
            let word = word.trim().to_lowercase();
            if tokenize(&word).len() != 1 {
                return Err(err(format!("headword {word:?} is not a single token")));
            }
            for syn in rest.split(',') {
                let syn = syn.trim().to_lowercase();
                if syn.is_empty() {
                    continue;
                }
                if tokenize(&syn).len() != 1 {
                    return Err(err(format!("synonym {syn:?} is not a single token")));
                }
                if syn == word {
                    continue;
                }
                map.entry(word.clone()).or_default().insert(syn.clone());
                map.entry(syn).or_default().insert(word.clone());
            }
        }
        Ok(Thesaurus {
            map: map
                .into_iter()
                .map(|(k, v)| (k, v.into_iter().collect()))
                .collect(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    /// Synonyms of `word` (sorted), empty if unknown.
    pub fn synonyms(&self, word: &str) -> &[String] {
        self.map.get(word).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Fraction of replaceable positions to replace per synthetic copy.
    pub rate: f64,
    /// Synthetic copies generated per source dialogue.
    pub copies: usize,
    /// When set, only synonyms inside this vocabulary are admissible.
    pub target_vocab: Option<BTreeSet<String>>,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig { rate: 0.1, copies: 4, target_vocab: None, seed: 0 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && (0.0..=1.0).contains(&self.rate)) {
            return Err(Error::Usage(format!("rate must be in [0, 1], got {}", self.rate)));
        }
        Ok(())
    }
}

/// One recorded replacement inside a synthetic dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    /// Utterance index within the dialogue.
    pub utterance: usize,
    /// Token position within that utterance.
    pub position: usize,
    pub original: String,
    pub replacement: String,
}

pub type ReplacementLog = Vec<Replacement>;

/// Builds one synthetic copy of `d` by replacing `max(1, round(rate * |R|))`
/// of the `R` replaceable token positions (those with at least one admissible
/// synonym) with a uniformly drawn admissible synonym. Dialogues with no
/// replaceable positions are copied verbatim with an empty log.
pub fn synonym_replace(
    d: &Dialogue,
    thesaurus: &Thesaurus,
    cfg: &AugmentConfig,
    new_id: String,
    rng: &mut ChaCha8Rng,
) -> (Dialogue, ReplacementLog) {
    // All replaceable positions with their admissible synonym lists.
    struct Site {
        utterance: usize,
        position: usize,
        span: std::ops::Range<usize>,
        original: String,
    }
    let mut sites: Vec<Site> = Vec::new();
    let mut admissible: Vec<Vec<&String>> = Vec::new();
    for (ui, u) in d.utterances.iter().enumerate() {
        for (pos, (token, span)) in token_spans(&u.text).into_iter().enumerate() {
            let syns: Vec<&String> = thesaurus
                .synonyms(&token)
                .iter()
                .filter(|s| {
                    cfg.target_vocab.as_ref().map_or(true, |tv| tv.contains(s.as_str()))
                })
                .collect();
            if !syns.is_empty() {
                sites.push(Site { utterance: ui, position: pos, span, original: token });
                admissible.push(syns);
            }
        }
    }

    let mut copy = d.clone();
    copy.id = new_id;
    let mut log = ReplacementLog::new();
    if sites.is_empty() {
        return (copy, log);
    }
    let budget = ((cfg.rate * sites.len() as f64).round() as usize)
        .max(1)
        .min(sites.len());

    // Choose distinct sites, then draw synonyms in site order so the RNG
    // consumption is a deterministic function of the dialogue alone.
    let mut chosen: Vec<usize> = rand::seq::index::sample(rng, sites.len(), budget).into_vec();
    chosen.sort_unstable();
    for &si in &chosen {
        let site = &sites[si];
        let syn = admissible[si].choose(rng).expect("non-empty admissible list");
        log.push(Replacement {
            utterance: site.utterance,
            position: site.position,
            original: site.original.clone(),
            replacement: (*syn).clone(),
        });
    }
    // Splice right-to-left so earlier byte spans stay valid.
    for (entry, &si) in log.iter().zip(&chosen).rev() {
        let site = &sites[si];
        let text = &mut copy.utterances[site.utterance].text;
        text.replace_range(site.span.clone(), &entry.replacement);
    }
    (copy, log)
}

/// Whole-corpus augmentation: `cfg.copies` synthetic dialogues per source
/// dialogue, each with its own RNG stream derived from the config seed, the
/// dialogue id, and the copy number. Synthetic dialogues inherit score,
/// label, domain, and any pretagged acts; ids gain a `_syn{k}` suffix.
/// Requires a labeled corpus. Returns the new corpus (originals first when
/// `include_originals`) and the per-synthetic-dialogue replacement logs.
pub fn augment_corpus(
    corpus: &Corpus,
    thesaurus: &Thesaurus,
    cfg: &AugmentConfig,
    include_originals: bool,
) -> Result<(Corpus, BTreeMap<String, ReplacementLog>)> {
    cfg.validate()?;
    if !corpus.is_labeled() {
        return Err(Error::Data(
            "augmentation requires a labeled corpus; assign labels first".into(),
        ));
    }
    let mut dialogues = Vec::new();
    if include_originals {
        dialogues.extend(corpus.dialogues.iter().cloned());
    }
    let mut logs = BTreeMap::new();
    for d in &corpus.dialogues {
        for k in 1..=cfg.copies {
            let seed = derive_seed(cfg.seed, &[fnv1a64(d.id.as_bytes()), k as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let new_id = format!("{}_syn{k}", d.id);
            let (copy, log) = synonym_replace(d, thesaurus, cfg, new_id.clone(), &mut rng);
            logs.insert(new_id, log);
            dialogues.push(copy);
        }
    }
    let name = format!("{}_aug", corpus.name);
    Ok((Corpus::new(name, dialogues)?, logs))
}

/// Length-normalized Hamming distance. Sequences are compared position by
/// position; length overhang counts as mismatch and the total is divided by
/// the longer length. Two empty sequences are identical (0).
pub fn hamming<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let max = a.len().max(b.len());
    if max == 0 {
        return 0.0;
    }
    let min = a.len().min(b.len());
    let mismatches = a.iter().zip(b).filter(|(x, y)| x != y).count() + (max - min);
    mismatches as f64 / max as f64
}

/// Stability audit of an augmented corpus against its source: how much the
/// dialogue-act and quantized-sentiment channels moved, and how the
/// vocabularies relate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Synthetic dialogues audited (paired with their originals).
    pub pairs: usize,
    pub mean_da_hamming: f64,
    pub mean_senti_hamming: f64,
    pub original_vocab: usize,
    pub synthetic_vocab: usize,
    pub vocab_intersection: usize,
    pub vocab_jaccard: f64,
}

/// Strips a `_syn{k}` suffix; `None` if the id has none.
fn base_id(id: &str) -> Option<&str> {
    let at = id.rfind("_syn")?;
    let digits = &id[at + 4..];
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        Some(&id[..at])
    } else {
        None
    }
}

/// Pairs every synthetic dialogue with its source dialogue and measures the
/// per-channel normalized Hamming distance between their derived sequences.
pub fn audit_robustness(
    original: &Corpus,
    synthetic: &Corpus,
    tagger: &DaTagger,
    lexicon: &PolarityLexicon,
    bins: usize,
    tagset: &TagSet,
) -> Result<AuditReport> {
    let by_id = crate::corpus::index_by_id(original);
    let mut da_dists = Vec::new();
    let mut senti_dists = Vec::new();
    for s in &synthetic.dialogues {
        if by_id.contains_key(s.id.as_str()) {
            // An original carried through the augmented corpus; skip.
            continue;
        }
        let base = base_id(&s.id)
            .and_then(|b| by_id.get(b))
            .ok_or_else(|| {
                Error::Data(format!(
                    "synthetic dialogue {:?} has no matching original",
                    s.id
                ))
            })?;
        let co = extract_channels(base, tagger, lexicon, bins, tagset)?;
        let cs = extract_channels(s, tagger, lexicon, bins, tagset)?;
        da_dists.push(hamming(&co.das, &cs.das));
        senti_dists.push(hamming(&co.sentiments_quantized, &cs.sentiments_quantized));
    }
    if da_dists.is_empty() {
        return Err(Error::Data("no synthetic dialogues to audit".into()));
    }
    let vo = vocabulary(original);
    let vs = vocabulary(synthetic);
    let inter = vo.intersection(&vs).count();
    let union = vo.union(&vs).count();
    Ok(AuditReport {
        pairs: da_dists.len(),
        mean_da_hamming: permutation_stable_mean(&da_dists),
        mean_senti_hamming: permutation_stable_mean(&senti_dists),
        original_vocab: vo.len(),
        synthetic_vocab: vs.len(),
        vocab_intersection: inter,
        vocab_jaccard: if union == 0 { 0.0 } else { inter as f64 / union as f64 },
    })
}
