//! Config-driven transfer experiments: train embeddings and a classifier on
//! one source corpus, evaluate on target corpora without any fine-tuning,
//! repeat over seeded runs, and aggregate F1 and generalizability scores
//! into a single deterministic JSON report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analyze::{analyze_corpus, parse_profanity, FrequencyReport, BUNDLED_PROFANITY};
use crate::augment::{augment_corpus, audit_robustness, AugmentConfig, AuditReport, Thesaurus};
use crate::classify::{
    classify_centroid, evaluate, fit_centroids, predict_logreg, predict_svm, train_logreg,
    train_svm_smo, EvalReport, LogRegParams, SvmParams,
};
use crate::corpus::{assign_labels_zscore, load_corpus, vocabulary, Corpus};
use crate::embed::{embed_corpus, ChannelModels, ChannelSet, EmbedOptions};
use crate::featurize::{
    extract_channels, DaTagger, PolarityLexicon, RuleTable, TagSet,
};
use crate::genmetric::{generalizability_score, SimilarityReport};
use crate::pvec::{train, Doc, PvMode, TrainConfig};
use crate::util::{compensated_sum, derive_seed, fnv1a64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Logreg,
    Svm,
    Centroid,
}

impl ClassifierKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(ClassifierKind::Logreg),
            "svm" => Ok(ClassifierKind::Svm),
            "centroid" => Ok(ClassifierKind::Centroid),
            other => Err(Error::Usage(format!(
                "unknown classifier {other:?} (expected logreg|svm|centroid)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaggerKind {
    Pretagged,
    Rules,
}

/// Optional augmentation block: when present, each run augments the source
/// corpus before training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentBlock {
    /// Synonym table path; the bundled table when absent.
    pub thesaurus: Option<PathBuf>,
    pub rate: f64,
    pub copies: usize,
    /// Corpus whose vocabulary constrains admissible synonyms. This is the
    /// one sanctioned use of target-side data.
    pub target_vocab_from: Option<PathBuf>,
    /// Keep the original dialogues alongside the synthetic ones.
    pub include_originals: bool,
}

impl Default for AugmentBlock {
    fn default() -> Self {
        AugmentBlock {
            thesaurus: None,
            rate: 0.1,
            copies: 4,
            target_vocab_from: None,
            include_originals: true,
        }
    }
}

/// One experiment, fully described. Relative paths are resolved against the
/// directory the config file was loaded from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: PathBuf,
    pub targets: Vec<PathBuf>,
    pub channels: ChannelSet,
    /// Training mode for the word channel; act and sentiment channels are
    /// always distributed-memory.
    pub word_mode: PvMode,
    pub classifier: ClassifierKind,
    /// Independent repetitions; run r uses seed `seed + r`.
    pub runs: usize,
    pub seed: u64,
    /// Sentiment quantization bins.
    pub bins: usize,
    pub tagger: TaggerKind,
    /// Polarity lexicon path; the bundled lexicon when absent.
    pub lexicon: Option<PathBuf>,
    pub zscore_threshold: f64,
    /// Frozen-weights inference passes when embedding target dialogues.
    pub infer_steps: usize,
    /// Shared per-channel training settings; `mode` and `seed` are
    /// overridden per channel and per run.
    pub pvec: TrainConfig,
    pub augment: Option<AugmentBlock>,
    pub logreg: LogRegParams,
    pub svm: SvmParams,
    /// How many n-grams per order the analysis section keeps.
    pub top_k: usize,
    /// Report destination; stdout when absent and no CLI override is given.
    pub out: Option<PathBuf>,
    /// Directory the config was loaded from; set by `load_config`.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source: PathBuf::new(),
            targets: Vec::new(),
            channels: ChannelSet::all(),
            word_mode: PvMode::Dm,
            classifier: ClassifierKind::Centroid,
            runs: 15,
            seed: 0,
            bins: 5,
            tagger: TaggerKind::Rules,
            lexicon: None,
            zscore_threshold: 0.0,
            infer_steps: 50,
            pvec: TrainConfig::default(),
            augment: None,
            logreg: LogRegParams::default(),
            svm: SvmParams::default(),
            top_k: 3,
            out: None,
            base_dir: PathBuf::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.source.as_os_str().is_empty() {
            return Err(Error::Usage("config must name a source corpus".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Usage("config must name at least one target corpus".into()));
        }
        if self.runs == 0 {
            return Err(Error::Usage("runs must be >= 1".into()));
        }
        if self.bins < 2 {
            return Err(Error::Usage("bins must be >= 2".into()));
        }
        if self.channels.is_empty() {
            return Err(Error::Usage("channel set must not be empty".into()));
        }
        self.pvec.validate()?;
        if let Some(a) = &self.augment {
            AugmentConfig { rate: a.rate, copies: a.copies, target_vocab: None, seed: 0 }
                .validate()?;
        }
        Ok(())
    }

    /// Resolves a config-relative path.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    cfg.base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    cfg.validate()?;
    Ok(cfg)
}

/// Everything loaded once and shared across runs.
pub struct Prepared {
    pub cfg: ExperimentConfig,
    pub source: Corpus,
    pub targets: Vec<Corpus>,
    pub tagset: TagSet,
    pub tagger: DaTagger,
    pub lexicon: PolarityLexicon,
    pub thesaurus: Option<Thesaurus>,
    pub target_vocab: Option<std::collections::BTreeSet<String>>,
}

/// Loads corpora and side tables and assigns conflict labels.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let mut source = load_corpus(cfg.resolve(&cfg.source))?;
    assign_labels_zscore(&mut source, cfg.zscore_threshold)?;
    let mut targets = Vec::with_capacity(cfg.targets.len());
    for t in &cfg.targets {
        let mut c = load_corpus(cfg.resolve(t))?;
        assign_labels_zscore(&mut c, cfg.zscore_threshold)?;
        targets.push(c);
    }
    let tagset = TagSet::bundled();
    let tagger = match cfg.tagger {
        TaggerKind::Pretagged => DaTagger::Pretagged,
        TaggerKind::Rules => DaTagger::RuleBaseline(RuleTable::bundled(&tagset)),
    };
    let lexicon = match &cfg.lexicon {
        Some(p) => PolarityLexicon::load(cfg.resolve(p))?,
        None => PolarityLexicon::bundled(),
    };
    let (thesaurus, target_vocab) = match &cfg.augment {
        Some(a) => {
            let th = match &a.thesaurus {
                Some(p) => Thesaurus::load(cfg.resolve(p))?,
                None => Thesaurus::bundled(),
            };
            let tv = match &a.target_vocab_from {
                Some(p) => Some(vocabulary(&load_corpus(cfg.resolve(p))?)),
                None => None,
            };
            (Some(th), tv)
        }
        None => (None, None),
    };
    Ok(Prepared {
        cfg: cfg.clone(),
        source,
        targets,
        tagset,
        tagger,
        lexicon,
        thesaurus,
        target_vocab,
    })
}

/// Trains the word, act, and sentiment channel models on one corpus. The
/// word channel uses `word_mode`; the other two are always DM. Each channel
/// draws its own seed from `seed`.
pub fn train_channel_models(
    corpus: &Corpus,
    tagger: &DaTagger,
    lexicon: &PolarityLexicon,
    bins: usize,
    tagset: &TagSet,
    pvec: &TrainConfig,
    word_mode: PvMode,
    seed: u64,
) -> Result<ChannelModels> {
    let mut word_docs = Vec::with_capacity(corpus.len());
    let mut da_docs = Vec::with_capacity(corpus.len());
    let mut senti_docs = Vec::with_capacity(corpus.len());
    for d in &corpus.dialogues {
        let ch = extract_channels(d, tagger, lexicon, bins, tagset)?;
        word_docs.push(Doc { id: d.id.clone(), tokens: ch.tokens });
        da_docs.push(Doc {
            id: d.id.clone(),
            tokens: ch.das.iter().map(|t| t.as_str().to_string()).collect(),
        });
        senti_docs.push(Doc { id: d.id.clone(), tokens: ch.sentiments_quantized });
    }
    let channel_cfg = |mode: PvMode, name: &str| TrainConfig {
        mode,
        seed: derive_seed(seed, &[fnv1a64(name.as_bytes())]),
        ..pvec.clone()
    };
    Ok(ChannelModels {
        word: train(&word_docs, &channel_cfg(word_mode, "word"))?,
        da: train(&da_docs, &channel_cfg(PvMode::Dm, "da"))?,
        senti: train(&senti_docs, &channel_cfg(PvMode::Dm, "senti"))?,
    })
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    /// Dialogues the channel models and classifier were trained on.
    pub train_dialogues: usize,
    /// Target corpus name -> evaluation against gold labels.
    pub evals: BTreeMap<String, EvalReport>,
    /// Corpus name -> similarity structure of its embeddings (training
    /// corpus by lookup, targets by inference).
    pub generalizability: BTreeMap<String, SimilarityReport>,
}

/// Training-side artifacts of a run, exposed so callers can inspect what the
/// models saw.
pub struct RunArtifacts {
    pub models: ChannelModels,
    pub train_corpus: Corpus,
    pub audit: Option<AuditReport>,
}

fn stage(e: Error, run: usize, what: &str) -> Error {
    let ctx = format!("run {run} ({what})");
    match e {
        Error::Usage(m) => Error::Usage(format!("{ctx}: {m}")),
        Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("{ctx}: {m}")),
        other => other,
    }
}

/// Executes run `run_idx`: optionally augment, train channel models, embed,
/// train the classifier on source-side embeddings only, evaluate every
/// target, and score generalizability. Target corpora never influence any
/// trained weight; their vocabulary may appear only in the augmentation
/// filter prepared from the config.
pub fn run_single(prep: &Prepared, run_idx: usize) -> Result<(RunResult, RunArtifacts)> {
    let cfg = &prep.cfg;
    let run_seed = cfg.seed.wrapping_add(run_idx as u64);

    // 1. Training corpus: the labeled source, optionally augmented.
    let (train_corpus, audit) = match &cfg.augment {
        Some(block) => {
            let th = prep.thesaurus.as_ref().ok_or_else(|| {
                Error::Usage("augmentation configured but no thesaurus prepared".into())
            })?;
            let aug_cfg = AugmentConfig {
                rate: block.rate,
                copies: block.copies,
                target_vocab: prep.target_vocab.clone(),
                seed: derive_seed(run_seed, &[fnv1a64(b"augment")]),
            };
            let (augmented, _logs) =
                augment_corpus(&prep.source, th, &aug_cfg, block.include_originals)
                    .map_err(|e| stage(e, run_idx, "augment"))?;
            let audit = audit_robustness(
                &prep.source,
                &augmented,
                &prep.tagger,
                &prep.lexicon,
                cfg.bins,
                &prep.tagset,
            )
            .map_err(|e| stage(e, run_idx, "augment audit"))?;
            (augmented, Some(audit))
        }
        None => (prep.source.clone(), None),
    };

    // 2. Channel models, trained only on the training corpus.
    let models = train_channel_models(
        &train_corpus,
        &prep.tagger,
        &prep.lexicon,
        cfg.bins,
        &prep.tagset,
        &cfg.pvec,
        cfg.word_mode,
        run_seed,
    )
    .map_err(|e| stage(e, run_idx, "train embeddings"))?;

    // 3. Source-side embeddings by lookup; classifier fit.
    let lookup = EmbedOptions {
        channels: cfg.channels.clone(),
        use_infer: false,
        infer_steps: cfg.infer_steps,
        seed: run_seed,
    };
    let train_ds = embed_corpus(
        &train_corpus,
        &models,
        &prep.tagger,
        &prep.lexicon,
        cfg.bins,
        &prep.tagset,
        &lookup,
    )
    .map_err(|e| stage(e, run_idx, "embed training corpus"))?;

    let predict: Box<dyn Fn(&[f64]) -> Result<crate::corpus::ConflictLabel>> =
        match cfg.classifier {
            ClassifierKind::Centroid => {
                let model = fit_centroids(&train_ds.matrix, &train_ds.labels)
                    .map_err(|e| stage(e, run_idx, "fit centroids"))?;
                Box::new(move |row| classify_centroid(&model, row))
            }
            ClassifierKind::Logreg => {
                let model = train_logreg(&train_ds.matrix, &train_ds.labels, &cfg.logreg)
                    .map_err(|e| stage(e, run_idx, "train logistic regression"))?;
                Box::new(move |row| Ok(predict_logreg(&model, row)))
            }
            ClassifierKind::Svm => {
                let params = SvmParams { seed: run_seed, ..cfg.svm.clone() };
                let model = train_svm_smo(&train_ds.matrix, &train_ds.labels, &params)
                    .map_err(|e| stage(e, run_idx, "train svm"))?;
                Box::new(move |row| Ok(predict_svm(&model, row)))
            }
        };

    let mut generalizability = BTreeMap::new();
    generalizability.insert(
        train_corpus.name.clone(),
        generalizability_score(&train_ds.matrix, &train_ds.labels)
            .map_err(|e| stage(e, run_idx, "generalizability (training corpus)"))?,
    );

    // 4. Embed and evaluate each target by frozen-weights inference.
    let mut evals = BTreeMap::new();
    for target in &prep.targets {
        let opts = EmbedOptions {
            channels: cfg.channels.clone(),
            use_infer: true,
            infer_steps: cfg.infer_steps,
            seed: derive_seed(run_seed, &[fnv1a64(target.name.as_bytes())]),
        };
        let ds = embed_corpus(
            target,
            &models,
            &prep.tagger,
            &prep.lexicon,
            cfg.bins,
            &prep.tagset,
            &opts,
        )
        .map_err(|e| stage(e, run_idx, "embed target"))?;
        let preds: Vec<_> = ds
            .matrix
            .iter_rows()
            .map(&*predict)
            .collect::<Result<_>>()
            .map_err(|e| stage(e, run_idx, "predict"))?;
        evals.insert(
            target.name.clone(),
            evaluate(&preds, &ds.labels).map_err(|e| stage(e, run_idx, "evaluate"))?,
        );
        generalizability.insert(
            target.name.clone(),
            generalizability_score(&ds.matrix, &ds.labels)
                .map_err(|e| stage(e, run_idx, "generalizability (target)"))?,
        );
    }

    Ok((
        RunResult {
            run: run_idx,
            seed: run_seed,
            train_dialogues: train_corpus.len(),
            evals,
            generalizability,
        },
        RunArtifacts { models, train_corpus, audit },
    ))
}

/// Mean and population standard deviation, with the per-run values kept so
/// the aggregate is recomputable from the report alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub per_run: Vec<f64>,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = compensated_sum(values) / n;
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let std = (compensated_sum(&sq) / n).sqrt();
        MeanStd { mean, std, per_run: values.to_vec() }
    }
}

/// Aggregated evaluation for one target across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetAggregate {
    pub weighted_f1: MeanStd,
    pub f1_low: MeanStd,
    pub f1_high: MeanStd,
    pub accuracy: MeanStd,
}

/// The full experiment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunResult>,
    /// Target corpus name -> aggregated metrics.
    pub aggregate: BTreeMap<String, TargetAggregate>,
    /// Corpus name -> aggregated generalizability score.
    pub generalizability: BTreeMap<String, MeanStd>,
    /// Descriptive statistics of the labeled source corpus.
    pub analysis: FrequencyReport,
    /// Channel-stability audit of run 0's augmentation, when configured.
    pub augment_audit: Option<AuditReport>,
}

/// Runs the whole experiment described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let prep = prepare(cfg)?;
    let profanity = parse_profanity(BUNDLED_PROFANITY)?;
    let analysis = analyze_corpus(
        &prep.source,
        &prep.tagger,
        &prep.lexicon,
        &prep.tagset,
        &profanity,
        cfg.top_k,
    )?;

    let mut runs = Vec::with_capacity(cfg.runs);
    let mut audit = None;
    for r in 0..cfg.runs {
        let (result, artifacts) = run_single(&prep, r)?;
        if r == 0 {
            audit = artifacts.audit;
        }
        runs.push(result);
    }

    let mut aggregate = BTreeMap::new();
    for target in &prep.targets {
        let series = |f: &dyn Fn(&EvalReport) -> f64| -> Vec<f64> {
            runs.iter().map(|r| f(&r.evals[&target.name])).collect()
        };
        aggregate.insert(
            target.name.clone(),
            TargetAggregate {
                weighted_f1: MeanStd::of(&series(&|e| e.weighted_f1)),
                f1_low: MeanStd::of(&series(&|e| e.per_class["low"].f1)),
                f1_high: MeanStd::of(&series(&|e| e.per_class["high"].f1)),
                accuracy: MeanStd::of(&series(&|e| e.accuracy)),
            },
        );
    }
    let mut generalizability = BTreeMap::new();
    for name in runs[0].generalizability.keys() {
        let vals: Vec<f64> = runs.iter().map(|r| r.generalizability[name].score).collect();
        generalizability.insert(name.clone(), MeanStd::of(&vals));
    }

    Ok(RunReport {
        config: cfg.clone(),
        runs,
        aggregate,
        generalizability,
        analysis,
        augment_audit: audit,
    })
}

/// Serializes a report with a stable layout (sorted maps, exact floats).
pub fn report_to_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
