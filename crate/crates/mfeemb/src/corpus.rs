//! Dialogue corpus model and JSONL I/O.
//!
//! A corpus is a flat list of multiparty dialogues. Dialogues optionally carry
//! a numeric conflict score (e.g. an annotated intensity rating); binary
//! labels are derived from those scores by z-scoring within the corpus rather
//! than stored in the interchange format.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::featurize::tokenize;
use crate::{Error, Result};

/// Binary conflict label. `LowConflict` sorts and iterates first everywhere;
/// ties in downstream classifiers resolve toward it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConflictLabel {
    #[serde(rename = "low")]
    LowConflict,
    #[serde(rename = "high")]
    HighConflict,
}

impl ConflictLabel {
    pub const ALL: [ConflictLabel; 2] = [ConflictLabel::LowConflict, ConflictLabel::HighConflict];

    pub fn as_str(self) -> &'static str {
        match self {
            ConflictLabel::LowConflict => "low",
            ConflictLabel::HighConflict => "high",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(ConflictLabel::LowConflict),
            "high" => Ok(ConflictLabel::HighConflict),
            other => Err(Error::Data(format!("unknown label {other:?} (expected low|high)"))),
        }
    }
}

impl fmt::Display for ConflictLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub speaker: String,
    pub text: String,
    /// Position within the dialogue, `0..n`.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dialogue {
    pub id: String,
    pub domain_tag: String,
    pub utterances: Vec<Utterance>,
    pub conflict_score: Option<f64>,
    pub label: Option<ConflictLabel>,
    /// Gold dialogue-act tags (one per utterance) when the source corpus
    /// provides them; consumed by the pretagged tagger.
    pub pretagged_das: Option<Vec<String>>,
}

impl Dialogue {
    /// Structural checks every dialogue must satisfy regardless of origin.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Data("dialogue with empty id".into()));
        }
        if self.utterances.is_empty() {
            return Err(Error::Data(format!("dialogue {:?} has no utterances", self.id)));
        }
        for (i, u) in self.utterances.iter().enumerate() {
            if u.index != i {
                return Err(Error::Data(format!(
                    "dialogue {:?}: utterance index {} at position {}",
                    self.id, u.index, i
                )));
            }
        }
        if let Some(das) = &self.pretagged_das {
            if das.len() != self.utterances.len() {
                return Err(Error::Data(format!(
                    "dialogue {:?}: {} pretagged acts for {} utterances",
                    self.id,
                    das.len(),
                    self.utterances.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    /// Short name used in reports; file stem by default.
    pub name: String,
    pub dialogues: Vec<Dialogue>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, dialogues: Vec<Dialogue>) -> Result<Self> {
        let c = Corpus { name: name.into(), dialogues };
        c.validate()?;
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.dialogues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for d in &self.dialogues {
            d.validate()?;
            if !seen.insert(d.id.as_str()) {
                return Err(Error::Data(format!("duplicate dialogue id {:?}", d.id)));
            }
        }
        Ok(())
    }

    /// True when every dialogue carries a label.
    pub fn is_labeled(&self) -> bool {
        self.dialogues.iter().all(|d| d.label.is_some())
    }
}

/// On-disk JSONL record shape: one dialogue per line.
#[derive(Serialize, Deserialize)]
struct DialogueRecord {
    id: String,
    domain: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    utterances: Vec<UtteranceRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    das: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct UtteranceRecord {
    speaker: String,
    text: String,
}

fn record_to_dialogue(rec: DialogueRecord) -> Dialogue {
    Dialogue {
        id: rec.id,
        domain_tag: rec.domain,
        utterances: rec
            .utterances
            .into_iter()
            .enumerate()
            .map(|(index, u)| Utterance { speaker: u.speaker, text: u.text, index })
            .collect(),
        conflict_score: rec.score,
        label: None,
        pretagged_das: rec.das,
    }
}

fn dialogue_to_record(d: &Dialogue) -> DialogueRecord {
    DialogueRecord {
        id: d.id.clone(),
        domain: d.domain_tag.clone(),
        score: d.conflict_score,
        utterances: d
            .utterances
            .iter()
            .map(|u| UtteranceRecord { speaker: u.speaker.clone(), text: u.text.clone() })
            .collect(),
        das: d.pretagged_das.clone(),
    }
}

/// Parses a corpus from JSONL text. `name` is attached as the corpus name and
/// `origin` only decorates error messages.
pub fn parse_corpus(text: &str, name: &str, origin: &Path) -> Result<Corpus> {
    let mut dialogues = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: DialogueRecord = serde_json::from_str(line).map_err(|e| {
            Error::format(origin, format!("line {}: {}", lineno + 1, e))
        })?;
        dialogues.push(record_to_dialogue(rec));
    }
    if dialogues.is_empty() {
        return Err(Error::format(origin, "no dialogues"));
    }
    let corpus = Corpus { name: name.to_string(), dialogues };
    corpus.validate().map_err(|e| Error::format(origin, e.to_string()))?;
    Ok(corpus)
}

/// Loads a JSONL corpus file. The corpus name is the file stem.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus");
    parse_corpus(&text, name, path)
}

/// Serializes a corpus to JSONL (one dialogue per line, trailing newline).
/// Labels are not written; they are derived data.
pub fn corpus_to_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for d in &corpus.dialogues {
        out.push_str(&serde_json::to_string(&dialogue_to_record(d)).expect("serializable record"));
        out.push('\n');
    }
    out
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, corpus_to_jsonl(corpus)).map_err(|e| Error::io(path, e))
}

/// Labels every dialogue by z-scoring conflict scores within the corpus:
/// `HighConflict` iff `(score - mean) / std > threshold`. The std is the
/// population standard deviation. A zero std (all scores equal) is an error,
/// as is any missing score.
pub fn assign_labels_zscore(corpus: &mut Corpus, threshold: f64) -> Result<()> {
    let mut scores = Vec::with_capacity(corpus.len());
    for d in &corpus.dialogues {
        match d.conflict_score {
            Some(s) if s.is_finite() => scores.push(s),
            Some(_) => {
                return Err(Error::Data(format!("dialogue {:?}: non-finite score", d.id)))
            }
            None => {
                return Err(Error::Data(format!(
                    "dialogue {:?} has no conflict score; cannot z-score",
                    d.id
                )))
            }
        }
    }
    if scores.is_empty() {
        return Err(Error::Data("empty corpus".into()));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return Err(Error::Numeric(
            "all conflict scores identical; z-score labels undefined".into(),
        ));
    }
    for (d, s) in corpus.dialogues.iter_mut().zip(&scores) {
        let z = (s - mean) / std;
        d.label = Some(if z > threshold {
            ConflictLabel::HighConflict
        } else {
            ConflictLabel::LowConflict
        });
    }
    Ok(())
}

/// Concatenates utterance texts in order, space-separated.
pub fn flatten_dialogue(d: &Dialogue) -> String {
    let texts: Vec<&str> = d.utterances.iter().map(|u| u.text.as_str()).collect();
    texts.join(" ")
}

/// The set of distinct word tokens appearing anywhere in the corpus.
pub fn vocabulary(corpus: &Corpus) -> BTreeSet<String> {
    let mut vocab = BTreeSet::new();
    for d in &corpus.dialogues {
        for u in &d.utterances {
            vocab.extend(tokenize(&u.text));
        }
    }
    vocab
}

/// Jaccard overlap of the two corpora's vocabularies. Both empty yields 0.
pub fn vocab_overlap(a: &Corpus, b: &Corpus) -> f64 {
    let va = vocabulary(a);
    let vb = vocabulary(b);
    let inter = va.intersection(&vb).count();
    let union = va.union(&vb).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Per-id lookup helper used by evaluation code.
pub fn index_by_id(corpus: &Corpus) -> HashMap<&str, &Dialogue> {
    corpus.dialogues.iter().map(|d| (d.id.as_str(), d)).collect()
}
