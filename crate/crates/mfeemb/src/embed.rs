//! Composing per-channel paragraph vectors into one dialogue embedding.
//!
//! Each dialogue owns three document vectors — words, dialogue acts, and
//! quantized sentiment — trained by [`crate::pvec`]. The full embedding is
//! their concatenation in that fixed order; masking a channel simply drops
//! its block, leaving the surviving blocks bit-identical to the unmasked
//! case.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ConflictLabel, Corpus};
use crate::featurize::{extract_channels, DaTagger, PolarityLexicon, TagSet};
use crate::pvec::{infer, InferParams, PvecModel};
use crate::util::{derive_seed, fnv1a64, Mat};
use crate::{Error, Result};

/// The three feature channels, in composition order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "word")]
    Word,
    #[serde(rename = "da")]
    Da,
    #[serde(rename = "senti")]
    Senti,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Word, Channel::Da, Channel::Senti];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Word => "word",
            Channel::Da => "da",
            Channel::Senti => "senti",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(Channel::Word),
            "da" => Ok(Channel::Da),
            "senti" => Ok(Channel::Senti),
            other => Err(Error::Usage(format!(
                "unknown channel {other:?} (expected word|da|senti)"
            ))),
        }
    }
}

/// Non-empty subset of channels to include in the composed embedding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ChannelSet(BTreeSet<Channel>);

impl ChannelSet {
    pub fn all() -> Self {
        ChannelSet(Channel::ALL.into_iter().collect())
    }

    pub fn of(channels: &[Channel]) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Usage("channel set must not be empty".into()));
        }
        Ok(ChannelSet(channels.iter().copied().collect()))
    }

    /// Parses a comma-separated list such as `"word,da,senti"`.
    pub fn parse(s: &str) -> Result<Self> {
        let channels: Vec<Channel> = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(Channel::parse)
            .collect::<Result<_>>()?;
        Self::of(&channels)
    }

    pub fn contains(&self, c: Channel) -> bool {
        self.0.contains(&c)
    }

    /// Active channels in composition order.
    pub fn iter(&self) -> impl Iterator<Item = Channel> + '_ {
        Channel::ALL.into_iter().filter(|c| self.0.contains(c))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<String>> for ChannelSet {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        let channels: Vec<Channel> =
            v.iter().map(|s| Channel::parse(s)).collect::<Result<_>>()?;
        Self::of(&channels)
    }
}

impl From<ChannelSet> for Vec<String> {
    fn from(s: ChannelSet) -> Vec<String> {
        s.iter().map(|c| c.as_str().to_string()).collect()
    }
}

impl std::fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = self.iter().map(Channel::as_str).collect();
        f.write_str(&names.join(","))
    }
}

/// The three trained channel models. Dialogue-act and sentiment channels are
/// always distributed-memory; only the word channel may be DBOW.
#[derive(Debug, Clone)]
pub struct ChannelModels {
    pub word: PvecModel,
    pub da: PvecModel,
    pub senti: PvecModel,
}

impl ChannelModels {
    pub fn validate(&self) -> Result<()> {
        use crate::pvec::PvMode;
        if self.da.mode() != PvMode::Dm {
            return Err(Error::Data("dialogue-act channel model must be dm".into()));
        }
        if self.senti.mode() != PvMode::Dm {
            return Err(Error::Data("sentiment channel model must be dm".into()));
        }
        Ok(())
    }

    pub fn get(&self, c: Channel) -> &PvecModel {
        match c {
            Channel::Word => &self.word,
            Channel::Da => &self.da,
            Channel::Senti => &self.senti,
        }
    }

    /// Combined width of the composed embedding over `channels`.
    pub fn composed_dim(&self, channels: &ChannelSet) -> usize {
        channels.iter().map(|c| self.get(c).dim()).sum()
    }
}

/// Concatenates the word, dialogue-act, and sentiment vectors, in that order.
/// All three must be present and of the stated dimensions.
pub fn compose(
    word: &[f64],
    da: &[f64],
    senti: &[f64],
    models: &ChannelModels,
) -> Result<Vec<f64>> {
    for (name, got, want) in [
        ("word", word.len(), models.word.dim()),
        ("da", da.len(), models.da.dim()),
        ("senti", senti.len(), models.senti.dim()),
    ] {
        if got != want {
            return Err(Error::Usage(format!(
                "{name} vector has dim {got}, model expects {want}"
            )));
        }
    }
    let mut out = Vec::with_capacity(word.len() + da.len() + senti.len());
    out.extend_from_slice(word);
    out.extend_from_slice(da);
    out.extend_from_slice(senti);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedOptions {
    pub channels: ChannelSet,
    /// `false`: look each dialogue up among the model's training documents
    /// (error when absent). `true`: run frozen-weights inference, which works
    /// for held-out dialogues.
    pub use_infer: bool,
    pub infer_steps: usize,
    pub seed: u64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions { channels: ChannelSet::all(), use_infer: false, infer_steps: 50, seed: 0 }
    }
}

/// A labeled embedding matrix, one row per dialogue.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDataset {
    pub ids: Vec<String>,
    pub labels: Vec<ConflictLabel>,
    pub matrix: Mat,
    pub channels: ChannelSet,
}

/// Seed for one (dialogue, channel) inference stream. Mixing the dialogue id
/// and channel index keeps a dialogue's vector independent of which other
/// dialogues are being embedded and of which channels are enabled.
fn infer_seed(base: u64, dialogue_id: &str, channel: Channel) -> u64 {
    derive_seed(base, &[fnv1a64(dialogue_id.as_bytes()), channel as u64])
}

/// Embeds every dialogue of a labeled corpus. Channel masking removes blocks
/// from the concatenation without touching the remaining ones.
pub fn embed_corpus(
    corpus: &Corpus,
    models: &ChannelModels,
    tagger: &DaTagger,
    lexicon: &PolarityLexicon,
    bins: usize,
    tagset: &TagSet,
    opts: &EmbedOptions,
) -> Result<EmbeddedDataset> {
    models.validate()?;
    if opts.channels.is_empty() {
        return Err(Error::Usage("channel set must not be empty".into()));
    }
    if corpus.is_empty() {
        return Err(Error::Data("empty corpus".into()));
    }
    let mut ids = Vec::with_capacity(corpus.len());
    let mut labels = Vec::with_capacity(corpus.len());
    let mut rows = Vec::with_capacity(corpus.len());
    for d in &corpus.dialogues {
        let label = d.label.ok_or_else(|| {
            Error::Data(format!("dialogue {:?} is unlabeled; label the corpus first", d.id))
        })?;
        let mut row = Vec::with_capacity(models.composed_dim(&opts.channels));
        if opts.use_infer {
            let ch = extract_channels(d, tagger, lexicon, bins, tagset)?;
            for channel in opts.channels.iter() {
                let model = models.get(channel);
                let tokens: Vec<String> = match channel {
                    Channel::Word => ch.tokens.clone(),
                    Channel::Da => ch.das.iter().map(|t| t.as_str().to_string()).collect(),
                    Channel::Senti => ch.sentiments_quantized.clone(),
                };
                let params = InferParams {
                    steps: opts.infer_steps,
                    seed: infer_seed(opts.seed, &d.id, channel),
                };
                row.extend(infer(model, &tokens, &params));
            }
        } else {
            for channel in opts.channels.iter() {
                let model = models.get(channel);
                let vec = model.doc_vector(&d.id).ok_or_else(|| {
                    Error::Data(format!(
                        "dialogue {:?} not among the {} model's training documents",
                        d.id,
                        channel.as_str()
                    ))
                })?;
                row.extend_from_slice(vec);
            }
        }
        ids.push(d.id.clone());
        labels.push(label);
        rows.push(row);
    }
    Ok(EmbeddedDataset {
        ids,
        labels,
        matrix: Mat::from_rows(rows)?,
        channels: opts.channels.clone(),
    })
}

/// Writes the dataset as CSV with header `id,label,f0..f{D-1}`.
pub fn write_embeddings_csv(ds: &EmbeddedDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| {
        Error::io(path, std::io::Error::other(e))
    })?;
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..ds.matrix.cols()).map(|i| format!("f{i}")));
    w.write_record(&header).map_err(|e| Error::format(path, e.to_string()))?;
    for (i, id) in ds.ids.iter().enumerate() {
        let mut rec = vec![id.clone(), ds.labels[i].as_str().to_string()];
        // Ryu-style shortest round-trip formatting keeps values exact.
        rec.extend(ds.matrix.row(i).iter().map(|v| {
            let mut buf = ryu_format(*v);
            buf.shrink_to_fit();
            buf
        }));
        w.write_record(&rec).map_err(|e| Error::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn ryu_format(v: f64) -> String {
    // serde_json uses ryu internally; reuse it for shortest exact decimals.
    serde_json::to_string(&v).expect("finite f64")
}

/// Reads a dataset written by [`write_embeddings_csv`].
pub fn read_embeddings_csv(path: impl AsRef<Path>) -> Result<EmbeddedDataset> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    {
        let headers = r.headers().map_err(|e| Error::format(path, e.to_string()))?;
        let h: Vec<&str> = headers.iter().collect();
        if h.len() < 3 || h[0] != "id" || h[1] != "label" {
            return Err(Error::format(path, "expected header id,label,f0,..."));
        }
        for (i, name) in h[2..].iter().enumerate() {
            if *name != format!("f{i}") {
                return Err(Error::format(path, format!("unexpected column {name:?}")));
            }
        }
    }
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if rec.len() < 3 {
            return Err(Error::format(path, "row with fewer than 3 fields"));
        }
        ids.push(rec[0].to_string());
        labels.push(
            ConflictLabel::parse(&rec[1])
                .map_err(|e| Error::format(path, e.to_string()))?,
        );
        let row: Vec<f64> = rec
            .iter()
            .skip(2)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::format(path, format!("bad float {v:?}")))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if ids.is_empty() {
        return Err(Error::format(path, "no data rows"));
    }
    Ok(EmbeddedDataset {
        ids,
        labels,
        matrix: Mat::from_rows(rows)?,
        channels: ChannelSet::all(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Dialogue, Utterance};
    use crate::pvec::{train, Doc, TrainConfig};

    fn tiny_corpus() -> Corpus {
        let mk = |id: &str, texts: &[&str], score: f64| Dialogue {
            id: id.into(),
            domain_tag: "t".into(),
            utterances: texts
                .iter()
                .enumerate()
                .map(|(index, t)| Utterance {
                    speaker: format!("s{index}"),
                    text: (*t).into(),
                    index,
                })
                .collect(),
            conflict_score: Some(score),
            label: None,
            pretagged_das: None,
        };
        let mut c = Corpus::new(
            "tiny",
            vec![
                mk("d0", &["the plan is great", "thanks a lot"], 1.0),
                mk("d1", &["this is awful", "why did you do that?"], 4.0),
                mk("d2", &["move the piece there", "okay"], 1.2),
                mk("d3", &["that was a terrible call", "no it was not"], 3.8),
            ],
        )
        .unwrap();
        crate::corpus::assign_labels_zscore(&mut c, 0.0).unwrap();
        c
    }

    fn models_for(corpus: &Corpus) -> (ChannelModels, DaTagger, PolarityLexicon, TagSet) {
        let tagset = TagSet::bundled();
        let tagger = DaTagger::RuleBaseline(crate::featurize::RuleTable::bundled(&tagset));
        let lexicon = PolarityLexicon::bundled();
        let mut word_docs = Vec::new();
        let mut da_docs = Vec::new();
        let mut senti_docs = Vec::new();
        for d in &corpus.dialogues {
            let ch = extract_channels(d, &tagger, &lexicon, 5, &tagset).unwrap();
            word_docs.push(Doc { id: d.id.clone(), tokens: ch.tokens });
            da_docs.push(Doc {
                id: d.id.clone(),
                tokens: ch.das.iter().map(|t| t.as_str().to_string()).collect(),
            });
            senti_docs.push(Doc { id: d.id.clone(), tokens: ch.sentiments_quantized });
        }
        let cfg = TrainConfig { dim: 8, epochs: 2, seed: 3, ..TrainConfig::default() };
        let models = ChannelModels {
            word: train(&word_docs, &cfg).unwrap(),
            da: train(&da_docs, &TrainConfig { seed: 4, ..cfg.clone() }).unwrap(),
            senti: train(&senti_docs, &TrainConfig { seed: 5, ..cfg.clone() }).unwrap(),
        };
        (models, tagger, lexicon, tagset)
    }

    #[test]
    fn channel_set_parses_and_orders() {
        let s = ChannelSet::parse("senti,word").unwrap();
        assert_eq!(s.to_string(), "word,senti");
        assert!(ChannelSet::parse("word,bogus").is_err());
        assert!(ChannelSet::parse("").is_err());
        assert_eq!(ChannelSet::all().to_string(), "word,da,senti");
    }

    #[test]
    fn compose_concatenates_in_fixed_order() {
        let corpus = tiny_corpus();
        let (models, ..) = models_for(&corpus);
        let w = vec![1.0; 8];
        let d = vec![2.0; 8];
        let s = vec![3.0; 8];
        let v = compose(&w, &d, &s, &models).unwrap();
        assert_eq!(v.len(), 24);
        assert!(v[..8].iter().all(|&x| x == 1.0));
        assert!(v[8..16].iter().all(|&x| x == 2.0));
        assert!(v[16..].iter().all(|&x| x == 3.0));
        assert!(compose(&w[..4], &d, &s, &models).is_err());
    }

    #[test]
    fn lookup_embedding_uses_trained_doc_vectors() {
        let corpus = tiny_corpus();
        let (models, tagger, lexicon, tagset) = models_for(&corpus);
        let ds = embed_corpus(
            &corpus,
            &models,
            &tagger,
            &lexicon,
            5,
            &tagset,
            &EmbedOptions::default(),
        )
        .unwrap();
        assert_eq!(ds.matrix.rows(), 4);
        assert_eq!(ds.matrix.cols(), 24);
        assert_eq!(&ds.matrix.row(0)[..8], models.word.doc_vector("d0").unwrap());
        assert_eq!(&ds.matrix.row(2)[8..16], models.da.doc_vector("d2").unwrap());
    }

    #[test]
    fn masking_preserves_surviving_blocks_bit_for_bit() {
        let corpus = tiny_corpus();
        let (models, tagger, lexicon, tagset) = models_for(&corpus);
        for use_infer in [false, true] {
            let full = embed_corpus(
                &corpus,
                &models,
                &tagger,
                &lexicon,
                5,
                &tagset,
                &EmbedOptions { use_infer, seed: 21, ..EmbedOptions::default() },
            )
            .unwrap();
            let masked = embed_corpus(
                &corpus,
                &models,
                &tagger,
                &lexicon,
                5,
                &tagset,
                &EmbedOptions {
                    channels: ChannelSet::parse("word,senti").unwrap(),
                    use_infer,
                    seed: 21,
                    ..EmbedOptions::default()
                },
            )
            .unwrap();
            assert_eq!(masked.matrix.cols(), 16);
            for i in 0..corpus.len() {
                assert_eq!(&masked.matrix.row(i)[..8], &full.matrix.row(i)[..8]);
                assert_eq!(&masked.matrix.row(i)[8..], &full.matrix.row(i)[16..]);
            }
        }
    }

    #[test]
    fn infer_mode_handles_held_out_dialogues_deterministically() {
        let corpus = tiny_corpus();
        let (models, tagger, lexicon, tagset) = models_for(&corpus);
        let mut held_out = Corpus::new(
            "held",
            vec![Dialogue {
                id: "h0".into(),
                domain_tag: "t".into(),
                utterances: vec![Utterance {
                    speaker: "s0".into(),
                    text: "the plan is awful".into(),
                    index: 0,
                }],
                conflict_score: Some(1.0),
                label: Some(ConflictLabel::HighConflict),
                pretagged_das: None,
            }],
        )
        .unwrap();
        held_out.dialogues[0].label = Some(ConflictLabel::HighConflict);
        let opts = EmbedOptions { use_infer: true, seed: 77, ..EmbedOptions::default() };
        let a = embed_corpus(&corpus, &models, &tagger, &lexicon, 5, &tagset, &opts).unwrap();
        let b = embed_corpus(&corpus, &models, &tagger, &lexicon, 5, &tagset, &opts).unwrap();
        assert_eq!(a.matrix, b.matrix);
        // Held-out ids embed in infer mode but fail lookup mode.
        assert!(embed_corpus(
            &held_out,
            &models,
            &tagger,
            &lexicon,
            5,
            &tagset,
            &opts
        )
        .is_ok());
        assert!(embed_corpus(
            &held_out,
            &models,
            &tagger,
            &lexicon,
            5,
            &tagset,
            &EmbedOptions::default()
        )
        .is_err());
    }

    #[test]
    fn unlabeled_corpus_is_rejected() {
        let mut corpus = tiny_corpus();
        corpus.dialogues[1].label = None;
        let (models, tagger, lexicon, tagset) = models_for(&corpus);
        let err = embed_corpus(
            &corpus,
            &models,
            &tagger,
            &lexicon,
            5,
            &tagset,
            &EmbedOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("d1"), "error should name the dialogue: {err}");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let corpus = tiny_corpus();
        let (models, tagger, lexicon, tagset) = models_for(&corpus);
        let ds = embed_corpus(
            &corpus,
            &models,
            &tagger,
            &lexicon,
            5,
            &tagset,
            &EmbedOptions::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.csv");
        write_embeddings_csv(&ds, &path).unwrap();
        let back = read_embeddings_csv(&path).unwrap();
        assert_eq!(back.ids, ds.ids);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.matrix, ds.matrix);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("id,label,f0,"));
    }
}
