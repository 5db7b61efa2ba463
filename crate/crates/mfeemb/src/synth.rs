//! Deterministic synthetic benchmark corpora. Two small multiparty-dialogue
//! corpora simulate different task domains with fully disjoint word
//! vocabularies but the same class-conditional dialogue-act and sentiment
//! structure, so the act and sentiment channels carry all the transferable
//! signal. A small two-topic plain-document set supports embedding sanity
//! checks. Every generator records its ground truth alongside the text.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    assign_labels_zscore, save_corpus, ConflictLabel, Corpus, Dialogue, Utterance,
};
use crate::experiment::{ClassifierKind, ExperimentConfig, TaggerKind};
use crate::featurize::quantize_polarity;
use crate::pvec::{Doc, TrainConfig};
use crate::util::{derive_seed, fnv1a64};
use crate::{Error, Result};

pub const DESK_TEAMS_DIALOGUES: usize = 12;
pub const DESK_ASIST_DIALOGUES: usize = 24;
/// Sentiment quantization width the ground-truth channels are recorded at.
pub const DESK_BINS: usize = 5;

const POSITIVE_POLARITY: f64 = 0.6;
const NEGATIVE_POLARITY: f64 = -0.6;

// Word pools. The two domains share no word anywhere, including the
// sentiment-neutral fillers; pool positions pair up across domains with
// matching polarity, which is what the desk thesaurus encodes.
const TEAMS_POSITIVE: [&str; 8] = [
    "kudos", "aligned", "productive", "smooth", "onboard", "supportive", "organized", "thorough",
];
const TEAMS_NEGATIVE: [&str; 8] = [
    "blocker", "slipping", "overdue", "micromanage", "churn", "thrash", "stonewall", "backlog",
];
const TEAMS_NEUTRAL: [&str; 8] = [
    "sprint", "roadmap", "standup", "milestone", "retro", "charter", "estimate", "ticket",
];
const ASIST_POSITIVE: [&str; 8] = [
    "rescued", "stabilized", "coordinated", "efficient", "calm", "reliable", "focused", "steady",
];
const ASIST_NEGATIVE: [&str; 8] = [
    "collapsed", "trapped", "panic", "chaotic", "wasted", "lost", "confused", "stalled",
];
const ASIST_NEUTRAL: [&str; 8] = [
    "rubble", "medkit", "triage", "corridor", "victim", "beacon", "hallway", "perimeter",
];

// Class-conditional act pools, identical across domains. Every dialogue
// stays dominated by plain statements ("sd"), mirroring real transcripts.
const LOW_CONFLICT_ACTS: [&str; 7] = ["aa", "ba", "ft", "fc", "b", "na", "bk"];
const HIGH_CONFLICT_ACTS: [&str; 7] = ["ar", "ng", "br", "qw", "qy", "%", "ad"];

struct DomainWords {
    positive: &'static [&'static str],
    negative: &'static [&'static str],
    neutral: &'static [&'static str],
}

const TEAMS_WORDS: DomainWords = DomainWords {
    positive: &TEAMS_POSITIVE,
    negative: &TEAMS_NEGATIVE,
    neutral: &TEAMS_NEUTRAL,
};
const ASIST_WORDS: DomainWords = DomainWords {
    positive: &ASIST_POSITIVE,
    negative: &ASIST_NEGATIVE,
    neutral: &ASIST_NEUTRAL,
};

/// The polarity the generator planted for a word, if any.
pub fn desk_polarity(word: &str) -> Option<f64> {
    if TEAMS_POSITIVE.contains(&word) || ASIST_POSITIVE.contains(&word) {
        Some(POSITIVE_POLARITY)
    } else if TEAMS_NEGATIVE.contains(&word) || ASIST_NEGATIVE.contains(&word) {
        Some(NEGATIVE_POLARITY)
    } else {
        None
    }
}

/// What the generator actually emitted for one dialogue: the exact channel
/// sequences featurization must recover (sentiment recorded at `DESK_BINS`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthChannels {
    pub tokens: Vec<String>,
    pub das: Vec<String>,
    pub sentiments_raw: Vec<f64>,
    pub sentiments_quantized: Vec<String>,
}

/// A generated corpus together with its per-dialogue ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DeskCorpus {
    pub corpus: Corpus,
    pub truth: BTreeMap<String, GroundTruthChannels>,
}

fn gen_dialogue(
    domain: &str,
    idx: usize,
    label: ConflictLabel,
    words: &DomainWords,
    rng: &mut ChaCha8Rng,
) -> (Dialogue, GroundTruthChannels) {
    let act_pool: &[&str] = match label {
        ConflictLabel::LowConflict => &LOW_CONFLICT_ACTS,
        ConflictLabel::HighConflict => &HIGH_CONFLICT_ACTS,
    };
    let n_utts = rng.random_range(8..=11);
    let mut utterances = Vec::with_capacity(n_utts);
    let mut das = Vec::with_capacity(n_utts);
    let mut tokens = Vec::new();
    let mut sentiments_raw = Vec::with_capacity(n_utts);
    let mut sentiments_quantized = Vec::with_capacity(n_utts);
    for i in 0..n_utts {
        let tag = if i % 2 == 0 || rng.random::<f64>() < 0.4 {
            "sd"
        } else {
            act_pool.choose(rng).expect("act pool is non-empty")
        };
        let neutral_only = rng.random::<f64>() < 0.15;
        let n_neutral = rng.random_range(2..=4);
        let mut utt_tokens: Vec<&str> = index::sample(rng, words.neutral.len(), n_neutral)
            .iter()
            .map(|j| words.neutral[j])
            .collect();
        if !neutral_only {
            let pool = match label {
                ConflictLabel::LowConflict => words.positive,
                ConflictLabel::HighConflict => words.negative,
            };
            utt_tokens.extend(index::sample(rng, pool.len(), 2).iter().map(|j| pool[j]));
        }
        utt_tokens.shuffle(rng);

        let matched: Vec<f64> = utt_tokens.iter().filter_map(|w| desk_polarity(w)).collect();
        let polarity = if matched.is_empty() {
            0.0
        } else {
            (matched.iter().sum::<f64>() / matched.len() as f64).clamp(-1.0, 1.0)
        };
        let is_question = matches!(tag, "qw" | "qy");
        let text =
            format!("{}{}", utt_tokens.join(" "), if is_question { "?" } else { "." });

        utterances.push(Utterance {
            speaker: format!("p{}", i % 3 + 1),
            text,
            index: i,
        });
        das.push(tag.to_string());
        tokens.extend(utt_tokens.iter().map(|w| w.to_string()));
        sentiments_quantized
            .push(quantize_polarity(polarity, DESK_BINS).expect("polarity in range"));
        sentiments_raw.push(polarity);
    }
    let score = match label {
        ConflictLabel::LowConflict => 1.0 + 0.4 * rng.random::<f64>(),
        ConflictLabel::HighConflict => 3.6 + 0.4 * rng.random::<f64>(),
    };
    let dialogue = Dialogue {
        id: format!("{domain}_{idx:02}"),
        domain_tag: domain.to_string(),
        utterances,
        conflict_score: Some(score),
        label: Some(label),
        pretagged_das: Some(das.clone()),
    };
    (dialogue, GroundTruthChannels { tokens, das, sentiments_raw, sentiments_quantized })
}

fn gen_corpus(name: &str, domain: &str, n: usize, words: &DomainWords, seed: u64) -> DeskCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[fnv1a64(name.as_bytes())]));
    let mut dialogues = Vec::with_capacity(n);
    let mut truth = BTreeMap::new();
    for i in 0..n {
        let label = if i % 2 == 0 {
            ConflictLabel::LowConflict
        } else {
            ConflictLabel::HighConflict
        };
        let (d, gt) = gen_dialogue(domain, i, label, words, &mut rng);
        truth.insert(d.id.clone(), gt);
        dialogues.push(d);
    }
    let planted: Vec<ConflictLabel> = dialogues.iter().map(|d| d.label.unwrap()).collect();
    let mut corpus = Corpus::new(name, dialogues).expect("generated ids are unique");
    // The planted scores are far from the corpus mean on both sides, so
    // z-score labeling must reproduce the planted classes exactly.
    assign_labels_zscore(&mut corpus, 0.0).expect("generated scores are finite and spread");
    debug_assert!(corpus
        .dialogues
        .iter()
        .zip(&planted)
        .all(|(d, &l)| d.label == Some(l)));
    DeskCorpus { corpus, truth }
}

/// The source-domain benchmark corpus: 12 dialogues, 6 per class.
pub fn desk_teams(seed: u64) -> DeskCorpus {
    gen_corpus("desk_teams", "teams", DESK_TEAMS_DIALOGUES, &TEAMS_WORDS, seed)
}

/// The target-domain benchmark corpus: 24 dialogues, 12 per class, with a
/// word vocabulary disjoint from the source domain's.
pub fn desk_asist(seed: u64) -> DeskCorpus {
    gen_corpus("desk_asist", "asist", DESK_ASIST_DIALOGUES, &ASIST_WORDS, seed)
}

/// Polarity lexicon covering every sentiment-bearing desk word.
pub fn desk_lexicon_tsv() -> String {
    let mut s = String::from("# Word polarities for the bundled desk benchmark.\n");
    for w in TEAMS_POSITIVE.iter().chain(ASIST_POSITIVE.iter()) {
        s.push_str(&format!("{w}\t{POSITIVE_POLARITY}\n"));
    }
    for w in TEAMS_NEGATIVE.iter().chain(ASIST_NEGATIVE.iter()) {
        s.push_str(&format!("{w}\t{NEGATIVE_POLARITY}\n"));
    }
    s.push_str("#NEGATION\n#INTENSIFIER\n");
    s
}

/// Cross-domain synonym pairs; every pair has identical planted polarity, so
/// constrained replacement cannot move the sentiment channel.
pub fn desk_thesaurus_tsv() -> String {
    let mut s = String::from("# Cross-domain synonym pairs of matching polarity.\n");
    let pairs = TEAMS_POSITIVE
        .iter()
        .zip(ASIST_POSITIVE.iter())
        .chain(TEAMS_NEGATIVE.iter().zip(ASIST_NEGATIVE.iter()))
        .chain(TEAMS_NEUTRAL.iter().zip(ASIST_NEUTRAL.iter()));
    for (a, b) in pairs {
        s.push_str(&format!("{a}\t{b}\n"));
    }
    s
}

/// The experiment configuration the benchmark ships with: train on the
/// teams corpus, transfer to the asist corpus, centroid classifier, 15 runs.
pub fn desk_experiment_config() -> ExperimentConfig {
    ExperimentConfig {
        source: PathBuf::from("desk_teams.jsonl"),
        targets: vec![PathBuf::from("desk_asist.jsonl")],
        classifier: ClassifierKind::Centroid,
        tagger: TaggerKind::Pretagged,
        lexicon: Some(PathBuf::from("desk_lexicon.tsv")),
        bins: DESK_BINS,
        pvec: TrainConfig {
            dim: 12,
            window: 3,
            epochs: 60,
            alpha: 0.05,
            ..TrainConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

/// Plain documents in two topics with disjoint vocabularies, `per_topic`
/// documents each. Returns the documents and their topic indices (0 or 1).
pub fn two_topic_docs(
    per_topic: usize,
    tokens_per_doc: usize,
    seed: u64,
) -> (Vec<Doc>, Vec<usize>) {
    const TOPIC_A: [&str; 12] = [
        "nebula", "quasar", "comet", "orbit", "galaxy", "telescope", "eclipse", "asteroid",
        "lunar", "stellar", "cosmic", "meteor",
    ];
    const TOPIC_B: [&str; 12] = [
        "saute", "braise", "simmer", "dough", "seasoning", "skillet", "marinade", "roast",
        "whisk", "garnish", "broth", "knead",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[fnv1a64(b"two_topic")]));
    let mut docs = Vec::with_capacity(2 * per_topic);
    let mut topics = Vec::with_capacity(2 * per_topic);
    for (t, (prefix, pool)) in [("astro", TOPIC_A.as_slice()), ("cook", TOPIC_B.as_slice())]
        .into_iter()
        .enumerate()
    {
        for i in 0..per_topic {
            let tokens = (0..tokens_per_doc)
                .map(|_| pool.choose(&mut rng).expect("pool is non-empty").to_string())
                .collect();
            docs.push(Doc { id: format!("{prefix}_{i:02}"), tokens });
            topics.push(t);
        }
    }
    (docs, topics)
}

/// Writes the complete benchmark into `dir`: both corpora, their
/// ground-truth channel files, the desk lexicon and thesaurus, and a ready
/// experiment config. Returns the written paths.
pub fn write_desk_benchmark(dir: impl AsRef<Path>, seed: u64) -> Result<Vec<PathBuf>> {
    fn write_file(
        dir: &Path,
        name: &str,
        contents: &str,
        written: &mut Vec<PathBuf>,
    ) -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    }

    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for desk in [desk_teams(seed), desk_asist(seed)] {
        let path = dir.join(format!("{}.jsonl", desk.corpus.name));
        save_corpus(&desk.corpus, &path)?;
        written.push(path);
        let truth = serde_json::to_string_pretty(&desk.truth).expect("truth serializes");
        write_file(
            dir,
            &format!("{}.channels.json", desk.corpus.name),
            &(truth + "\n"),
            &mut written,
        )?;
    }
    write_file(dir, "desk_lexicon.tsv", &desk_lexicon_tsv(), &mut written)?;
    write_file(dir, "desk_thesaurus.tsv", &desk_thesaurus_tsv(), &mut written)?;
    let config =
        serde_json::to_string_pretty(&desk_experiment_config()).expect("config serializes");
    write_file(dir, "desk_config.json", &(config + "\n"), &mut written)?;
    Ok(written)
}
