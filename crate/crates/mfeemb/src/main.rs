//! Command-line interface: thin bindings over the library modules, one
//! subcommand per pipeline stage plus the config-driven experiment runner.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mfeemb::analyze::{analyze_corpus, parse_profanity, svg_bar_chart, BUNDLED_PROFANITY};
use mfeemb::augment::{augment_corpus, AugmentConfig, Thesaurus};
use mfeemb::classify::{
    classify_centroid, evaluate, fit_centroids, predict_logreg, predict_svm, train_logreg,
    train_svm_smo, Gamma, LogRegParams, SvmParams,
};
use mfeemb::corpus::{
    assign_labels_zscore, load_corpus, save_corpus, vocabulary, ConflictLabel, Corpus,
};
use mfeemb::embed::{
    embed_corpus, read_embeddings_csv, write_embeddings_csv, ChannelModels, ChannelSet,
    EmbedOptions,
};
use mfeemb::experiment::{load_config, report_to_json, run_experiment};
use mfeemb::featurize::{extract_channels, DaTagger, PolarityLexicon, RuleTable, TagSet};
use mfeemb::genmetric::generalizability_score;
use mfeemb::pvec::{load_model, save_model, PvMode, TrainConfig};
use mfeemb::synth::write_desk_benchmark;
use mfeemb::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mfeemb",
    version,
    about = "Multi-feature dialogue embeddings for cross-domain conflict prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaggerArg {
    /// Use the acts stored in the corpus file.
    Pretagged,
    /// Apply the bundled rule baseline to each utterance.
    Rules,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassifierArg {
    Centroid,
    Logreg,
    Svm,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WordModeArg {
    Dm,
    Dbow,
}

impl From<WordModeArg> for PvMode {
    fn from(m: WordModeArg) -> PvMode {
        match m {
            WordModeArg::Dm => PvMode::Dm,
            WordModeArg::Dbow => PvMode::Dbow,
        }
    }
}

/// Flags shared by every subcommand that featurizes dialogues.
#[derive(Args)]
struct FeaturizeOpts {
    /// Dialogue-act source.
    #[arg(long, value_enum, default_value = "rules")]
    tagger: TaggerArg,
    /// Polarity lexicon TSV; bundled lexicon when omitted.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Sentiment quantization bins.
    #[arg(long, default_value_t = 5)]
    bins: usize,
}

impl FeaturizeOpts {
    fn tagger(&self, tagset: &TagSet) -> DaTagger {
        match self.tagger {
            TaggerArg::Pretagged => DaTagger::Pretagged,
            TaggerArg::Rules => DaTagger::RuleBaseline(RuleTable::bundled(tagset)),
        }
    }

    fn lexicon(&self) -> Result<PolarityLexicon> {
        match &self.lexicon {
            Some(p) => PolarityLexicon::load(p),
            None => Ok(PolarityLexicon::bundled()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSONL corpus, derive conflict labels, report statistics.
    Ingest {
        /// Corpus to read (JSONL, one dialogue per line).
        input: PathBuf,
        /// Write the validated corpus here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        zscore_threshold: f64,
    },
    /// Extract the word, act, and sentiment channel sequences per dialogue.
    Featurize {
        input: PathBuf,
        /// Output JSONL; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        feat: FeaturizeOpts,
    },
    /// Generate synonym-replacement copies of every dialogue.
    Augment {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Synonym table TSV; bundled table when omitted.
        #[arg(long)]
        thesaurus: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        rate: f64,
        #[arg(long, default_value_t = 4)]
        copies: usize,
        /// Restrict replacements to this corpus's vocabulary.
        #[arg(long)]
        target_vocab_from: Option<PathBuf>,
        /// Keep the originals alongside the synthetic dialogues.
        #[arg(long)]
        include_originals: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        zscore_threshold: f64,
        /// Write the per-copy replacement logs here (JSON).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Train the three channel embedding models on a corpus.
    TrainEmbed {
        input: PathBuf,
        /// Directory for word.json, da.json, senti.json.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        feat: FeaturizeOpts,
        #[arg(long, value_enum, default_value = "dm")]
        word_mode: WordModeArg,
        #[arg(long, default_value_t = 100)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 5)]
        negative: usize,
        #[arg(long, default_value_t = 0.065)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-4)]
        min_alpha: f64,
        #[arg(long, default_value_t = 1)]
        min_count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Embed a labeled corpus with trained channel models.
    Embed {
        input: PathBuf,
        /// Directory holding word.json, da.json, senti.json.
        #[arg(long)]
        models: PathBuf,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
        /// Channels to concatenate, e.g. "word,da,senti" or "word".
        #[arg(long, default_value = "word,da,senti")]
        channels: String,
        /// Infer vectors instead of looking up training documents.
        #[arg(long)]
        infer: bool,
        #[arg(long, default_value_t = 50)]
        infer_steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        zscore_threshold: f64,
        #[command(flatten)]
        feat: FeaturizeOpts,
    },
    /// Train a classifier on one embedding CSV and evaluate on another.
    Classify {
        /// Training embeddings CSV.
        #[arg(long)]
        train: PathBuf,
        /// Evaluation embeddings CSV.
        #[arg(long)]
        eval: PathBuf,
        #[arg(long, value_enum, default_value = "centroid")]
        classifier: ClassifierArg,
        /// Evaluation report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// L2 penalty (logreg).
        #[arg(long, default_value_t = 1e-3)]
        lambda: f64,
        /// Box constraint (svm).
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// RBF width (svm): "scale" or a positive number.
        #[arg(long, default_value = "scale")]
        gamma: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compute the generalizability score of an embedding CSV.
    ScoreGen {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Class-conditional descriptive statistics of a labeled corpus.
    Analyze {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write SVG bar charts into this directory.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        top_k: usize,
        #[arg(long, default_value_t = 0.0)]
        zscore_threshold: f64,
        #[command(flatten)]
        feat: FeaturizeOpts,
    },
    /// Run a full transfer experiment from a JSON config.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's report destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the bundled synthetic two-domain benchmark.
    MakeDeskCorpus {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn load_labeled(path: &Path, threshold: f64) -> Result<Corpus> {
    let mut corpus = load_corpus(path)?;
    assign_labels_zscore(&mut corpus, threshold)?;
    Ok(corpus)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn load_channel_models(dir: &Path) -> Result<ChannelModels> {
    let models = ChannelModels {
        word: load_model(dir.join("word.json"))?,
        da: load_model(dir.join("da.json"))?,
        senti: load_model(dir.join("senti.json"))?,
    };
    models.validate()?;
    Ok(models)
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest { input, out, zscore_threshold } => {
            let corpus = load_labeled(&input, zscore_threshold)?;
            if let Some(path) = &out {
                save_corpus(&corpus, path)?;
            }
            #[derive(Serialize)]
            struct Summary {
                name: String,
                dialogues: usize,
                utterances: usize,
                vocabulary: usize,
                labels: BTreeMap<String, usize>,
            }
            let mut labels = BTreeMap::new();
            for d in &corpus.dialogues {
                *labels.entry(d.label.unwrap().to_string()).or_insert(0) += 1;
            }
            let summary = Summary {
                name: corpus.name.clone(),
                dialogues: corpus.len(),
                utterances: corpus.dialogues.iter().map(|d| d.utterances.len()).sum(),
                vocabulary: vocabulary(&corpus).len(),
                labels,
            };
            print!("{}", to_pretty_json(&summary));
            Ok(())
        }

        Command::Featurize { input, out, feat } => {
            let corpus = load_corpus(&input)?;
            let tagset = TagSet::bundled();
            let tagger = feat.tagger(&tagset);
            let lexicon = feat.lexicon()?;
            #[derive(Serialize)]
            struct Line {
                id: String,
                tokens: Vec<String>,
                das: Vec<String>,
                sentiments_raw: Vec<f64>,
                sentiments_quantized: Vec<String>,
            }
            let mut text = String::new();
            for d in &corpus.dialogues {
                let ch = extract_channels(d, &tagger, &lexicon, feat.bins, &tagset)?;
                let line = Line {
                    id: d.id.clone(),
                    tokens: ch.tokens,
                    das: ch.das.iter().map(|t| t.as_str().to_string()).collect(),
                    sentiments_raw: ch.sentiments_raw,
                    sentiments_quantized: ch.sentiments_quantized,
                };
                text.push_str(&serde_json::to_string(&line).expect("line serializes"));
                text.push('\n');
            }
            emit(&out, &text)
        }

        Command::Augment {
            input,
            out,
            thesaurus,
            rate,
            copies,
            target_vocab_from,
            include_originals,
            seed,
            zscore_threshold,
            log,
        } => {
            let corpus = load_labeled(&input, zscore_threshold)?;
            let th = match &thesaurus {
                Some(p) => Thesaurus::load(p)?,
                None => Thesaurus::bundled(),
            };
            let target_vocab = match &target_vocab_from {
                Some(p) => Some(vocabulary(&load_corpus(p)?)),
                None => None,
            };
            let cfg = AugmentConfig { rate, copies, target_vocab, seed };
            let (augmented, logs) = augment_corpus(&corpus, &th, &cfg, include_originals)?;
            save_corpus(&augmented, &out)?;
            if let Some(path) = &log {
                fs::write(path, to_pretty_json(&logs)).map_err(|e| Error::io(path, e))?;
            }
            eprintln!(
                "augmented {} dialogues into {} ({} synthetic)",
                corpus.len(),
                augmented.len(),
                augmented.len() - if include_originals { corpus.len() } else { 0 }
            );
            Ok(())
        }

        Command::TrainEmbed {
            input,
            out,
            feat,
            word_mode,
            dim,
            window,
            epochs,
            negative,
            alpha,
            min_alpha,
            min_count,
            seed,
        } => {
            let corpus = load_corpus(&input)?;
            let tagset = TagSet::bundled();
            let tagger = feat.tagger(&tagset);
            let lexicon = feat.lexicon()?;
            let pvec = TrainConfig {
                dim,
                window,
                epochs,
                negative,
                alpha,
                min_alpha,
                min_count,
                ..TrainConfig::default()
            };
            let models = mfeemb::experiment::train_channel_models(
                &corpus,
                &tagger,
                &lexicon,
                feat.bins,
                &tagset,
                &pvec,
                word_mode.into(),
                seed,
            )?;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            save_model(&models.word, out.join("word.json"))?;
            save_model(&models.da, out.join("da.json"))?;
            save_model(&models.senti, out.join("senti.json"))?;
            eprintln!(
                "trained channel models on {} dialogues (word vocab {})",
                corpus.len(),
                models.word.vocab.len()
            );
            Ok(())
        }

        Command::Embed {
            input,
            models,
            out,
            channels,
            infer,
            infer_steps,
            seed,
            zscore_threshold,
            feat,
        } => {
            let corpus = load_labeled(&input, zscore_threshold)?;
            let models = load_channel_models(&models)?;
            let tagset = TagSet::bundled();
            let tagger = feat.tagger(&tagset);
            let lexicon = feat.lexicon()?;
            let opts = EmbedOptions {
                channels: ChannelSet::parse(&channels)?,
                use_infer: infer,
                infer_steps,
                seed,
            };
            let ds = embed_corpus(
                &corpus, &models, &tagger, &lexicon, feat.bins, &tagset, &opts,
            )?;
            write_embeddings_csv(&ds, &out)?;
            eprintln!("embedded {} dialogues at dim {}", ds.ids.len(), ds.matrix.cols());
            Ok(())
        }

        Command::Classify { train, eval, classifier, out, lambda, c, gamma, seed } => {
            let train_ds = read_embeddings_csv(&train)?;
            let eval_ds = read_embeddings_csv(&eval)?;
            let predict: Box<dyn Fn(&[f64]) -> Result<ConflictLabel>> = match classifier {
                ClassifierArg::Centroid => {
                    let model = fit_centroids(&train_ds.matrix, &train_ds.labels)?;
                    Box::new(move |row| classify_centroid(&model, row))
                }
                ClassifierArg::Logreg => {
                    let params = LogRegParams { l2_lambda: lambda, ..LogRegParams::default() };
                    let model = train_logreg(&train_ds.matrix, &train_ds.labels, &params)?;
                    Box::new(move |row| Ok(predict_logreg(&model, row)))
                }
                ClassifierArg::Svm => {
                    let gamma = match gamma.as_str() {
                        "scale" => Gamma::Scale,
                        v => Gamma::Value(v.parse().map_err(|_| {
                            Error::Usage(format!("--gamma expects \"scale\" or a number, got {v:?}"))
                        })?),
                    };
                    let params = SvmParams { c, gamma, seed, ..SvmParams::default() };
                    let model = train_svm_smo(&train_ds.matrix, &train_ds.labels, &params)?;
                    Box::new(move |row| Ok(predict_svm(&model, row)))
                }
            };
            let preds: Vec<ConflictLabel> =
                eval_ds.matrix.iter_rows().map(&*predict).collect::<Result<_>>()?;
            let report = evaluate(&preds, &eval_ds.labels)?;
            emit(&out, &to_pretty_json(&report))
        }

        Command::ScoreGen { input, out } => {
            let ds = read_embeddings_csv(&input)?;
            let report = generalizability_score(&ds.matrix, &ds.labels)?;
            emit(&out, &to_pretty_json(&report))
        }

        Command::Analyze { input, out, svg, top_k, zscore_threshold, feat } => {
            let corpus = load_labeled(&input, zscore_threshold)?;
            let tagset = TagSet::bundled();
            let tagger = feat.tagger(&tagset);
            let lexicon = feat.lexicon()?;
            let profanity = parse_profanity(BUNDLED_PROFANITY)?;
            let report =
                analyze_corpus(&corpus, &tagger, &lexicon, &tagset, &profanity, top_k)?;
            if let Some(dir) = &svg {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                write_analysis_charts(dir, &report)?;
            }
            emit(&out, &to_pretty_json(&report))
        }

        Command::Run { config, seed, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_experiment(&cfg)?;
            let text = report_to_json(&report);
            let destination = out.or_else(|| cfg.out.as_ref().map(|p| cfg.resolve(p)));
            emit(&destination, &text)
        }

        Command::MakeDeskCorpus { out, seed } => {
            let written = write_desk_benchmark(&out, seed)?;
            for path in written {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

/// Renders the class-conditional act-group and sentiment charts.
fn write_analysis_charts(
    dir: &Path,
    report: &mfeemb::analyze::FrequencyReport,
) -> Result<()> {
    let classes: Vec<String> = report.da_group_frequencies.keys().cloned().collect();

    let group_labels: Vec<String> =
        ["good", "bad", "question", "other"].iter().map(|s| s.to_string()).collect();
    let group_series: Vec<(String, Vec<f64>)> = classes
        .iter()
        .map(|class| {
            let freqs = &report.da_group_frequencies[class];
            (
                class.clone(),
                group_labels.iter().map(|g| freqs.get(g).copied().unwrap_or(0.0)).collect(),
            )
        })
        .collect();
    let chart = svg_bar_chart("Dialogue-act groups by class", &group_labels, &group_series)?;
    let path = dir.join("da_groups.svg");
    fs::write(&path, chart).map_err(|e| Error::io(&path, e))?;

    let first = report.sentiment_histograms.values().next();
    if let Some(hist) = first {
        let bin_labels: Vec<String> = hist
            .edges
            .windows(2)
            .map(|w| format!("{:.1}", (w[0] + w[1]) / 2.0))
            .collect();
        let senti_series: Vec<(String, Vec<f64>)> = report
            .sentiment_histograms
            .iter()
            .map(|(class, h)| (class.clone(), h.counts.iter().map(|&c| c as f64).collect()))
            .collect();
        let chart =
            svg_bar_chart("Sentiment polarity by class", &bin_labels, &senti_series)?;
        let path = dir.join("sentiment.svg");
        fs::write(&path, chart).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
