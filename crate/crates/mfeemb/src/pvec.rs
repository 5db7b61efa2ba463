//! Paragraph-vector embeddings with negative sampling.
//!
//! Two training modes are provided: a distributed-memory model (`Dm`), where
//! the document vector is averaged with the input vectors of the words in a
//! context window to predict the focus word, and a bag-of-words model
//! (`Dbow`), where the document vector alone predicts each word. Both share
//! the same negative-sampling objective
//!
//! ```text
//! L = -log s(h.c_w) - sum_k log s(-h.c_nk)
//! ```
//!
//! where `h` is the predictor (mean of contributors or the document vector),
//! `c_w` the output vector of the focus word, and `c_nk` output vectors of
//! words drawn from the unigram^0.75 noise distribution.
//!
//! Training is single-threaded and fully determined by `TrainConfig::seed`;
//! rerunning with the same inputs reproduces every matrix bit for bit.
//! Held-out documents are embedded by [`infer`], which runs the same descent
//! with all model weights frozen, touching only the new document vector.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::util::{sigmoid, Mat};
use crate::{Error, Result};

/// Paragraph-vector training mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PvMode {
    #[serde(rename = "dm")]
    Dm,
    #[serde(rename = "dbow")]
    Dbow,
}

impl PvMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dm" => Ok(PvMode::Dm),
            "dbow" => Ok(PvMode::Dbow),
            other => Err(Error::Usage(format!("unknown mode {other:?} (expected dm|dbow)"))),
        }
    }
}

/// A document to embed: a stable id plus its token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Doc {
    pub id: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub mode: PvMode,
    pub dim: usize,
    pub epochs: usize,
    pub window: usize,
    pub negative: usize,
    pub alpha: f64,
    pub min_alpha: f64,
    pub min_count: u64,
    /// Optional frequent-word downsampling threshold; disabled by default.
    pub sample: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: PvMode::Dm,
            dim: 100,
            epochs: 5,
            window: 5,
            negative: 5,
            alpha: 0.065,
            min_alpha: 1e-4,
            min_count: 1,
            sample: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Usage("dim must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Usage("epochs must be >= 1".into()));
        }
        if self.window == 0 {
            return Err(Error::Usage("window must be >= 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Usage(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.min_alpha.is_finite() && self.min_alpha > 0.0 && self.min_alpha <= self.alpha) {
            return Err(Error::Usage(format!(
                "min_alpha must satisfy 0 < min_alpha <= alpha, got {}",
                self.min_alpha
            )));
        }
        if let Some(s) = self.sample {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Usage(format!("sample must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Vocabulary and noise distribution

/// Token vocabulary in first-appearance order, with the unigram^0.75 noise
/// distribution used for negative sampling.
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    /// Cumulative noise distribution; the final entry is exactly 1.0.
    noise_cdf: Vec<f64>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.tokens.iter().map(String::as_str).zip(self.counts.iter().copied())
    }

    /// Probability the noise distribution assigns to token `idx`.
    pub fn noise_probability(&self, idx: usize) -> f64 {
        let lo = if idx == 0 { 0.0 } else { self.noise_cdf[idx - 1] };
        self.noise_cdf[idx] - lo
    }

    /// Draws one token index from the noise distribution.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        self.noise_cdf.partition_point(|&c| c <= u).min(self.tokens.len() - 1)
    }

    fn from_counts(tokens: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Data("empty vocabulary after min_count filtering".into()));
        }
        let index: HashMap<String, usize> =
            tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != tokens.len() {
            return Err(Error::Data("duplicate token in vocabulary".into()));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
        let mut partials = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            partials.push(acc);
        }
        let total = acc;
        let noise_cdf: Vec<f64> = partials.into_iter().map(|p| p / total).collect();
        debug_assert_eq!(*noise_cdf.last().unwrap(), 1.0);
        Ok(Vocab { tokens, counts, index, noise_cdf })
    }
}

/// Builds the vocabulary over all documents, keeping tokens seen at least
/// `min_count` times, in order of first appearance.
pub fn build_vocab<'a, I>(docs: I, min_count: u64) -> Result<Vocab>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<String, u64> = HashMap::new();
    for doc in docs {
        for tok in doc {
            let e = counts.entry(tok.clone()).or_insert(0);
            if *e == 0 {
                order.push(tok.clone());
            }
            *e += 1;
        }
    }
    let mut tokens = Vec::new();
    let mut kept_counts = Vec::new();
    for t in order {
        let c = counts[&t];
        if c >= min_count.max(1) {
            kept_counts.push(c);
            tokens.push(t);
        }
    }
    Vocab::from_counts(tokens, kept_counts)
}

/// Draws one negative-sample token index; draws equal to `target` should be
/// skipped by the caller rather than redrawn.
pub fn negative_sample(vocab: &Vocab, rng: &mut impl Rng) -> usize {
    vocab.sample(rng)
}

// ---------------------------------------------------------------------------
// Model

#[derive(Debug, Clone)]
pub struct PvecModel {
    pub cfg: TrainConfig,
    pub vocab: Vocab,
    /// Input word vectors, `|V| x dim`. Used as context in `Dm`; left at
    /// their seeded initialization in `Dbow`.
    pub word_vectors: Mat,
    /// Output (context) word vectors, `|V| x dim`.
    pub context_vectors: Mat,
    /// Trained document vectors, one per training doc.
    pub doc_vectors: Mat,
    pub doc_ids: Vec<String>,
}

impl PvecModel {
    pub fn dim(&self) -> usize {
        self.cfg.dim
    }

    pub fn mode(&self) -> PvMode {
        self.cfg.mode
    }

    pub fn doc_index(&self, id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == id)
    }

    pub fn doc_vector(&self, id: &str) -> Option<&[f64]> {
        self.doc_index(id).map(|i| self.doc_vectors.row(i))
    }
}

// ---------------------------------------------------------------------------
// Negative-sampling objective (pure functions, shared with the tests)

/// One negative-sampling step as a self-contained instance: the contributor
/// vectors that average into the predictor `h` (document vector first, then
/// any window words), the output vector of the focus word, and the output
/// vectors of the drawn noise words.
#[derive(Debug, Clone)]
pub struct NsMicro {
    pub contributors: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub noise: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct NsMicroGrads {
    pub contributors: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub noise: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable `log(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn mean_of(contributors: &[Vec<f64>]) -> Vec<f64> {
    let dim = contributors[0].len();
    let mut h = vec![0.0; dim];
    for c in contributors {
        for (hk, ck) in h.iter_mut().zip(c) {
            *hk += ck;
        }
    }
    let inv = 1.0 / contributors.len() as f64;
    h.iter_mut().for_each(|v| *v *= inv);
    h
}

/// Loss of one negative-sampling step:
/// `-log s(h.target) - sum_k log s(-h.noise_k)` with `h` the contributor mean.
pub fn ns_micro_loss(m: &NsMicro) -> f64 {
    let h = mean_of(&m.contributors);
    // -log s(x) = softplus(-x)
    let mut loss = softplus(-dot(&h, &m.target));
    for n in &m.noise {
        loss += softplus(dot(&h, n));
    }
    loss
}

/// Analytic gradients of [`ns_micro_loss`] with respect to every vector in
/// the instance. These are exactly the gradients the training loop applies.
pub fn ns_micro_grads(m: &NsMicro) -> NsMicroGrads {
    let dim = m.target.len();
    let h = mean_of(&m.contributors);
    let mut h_grad = vec![0.0; dim];

    let g_t = sigmoid(dot(&h, &m.target)) - 1.0;
    let target_grad: Vec<f64> = h.iter().map(|&hk| g_t * hk).collect();
    for (hg, &tk) in h_grad.iter_mut().zip(&m.target) {
        *hg += g_t * tk;
    }

    let mut noise_grads = Vec::with_capacity(m.noise.len());
    for n in &m.noise {
        let g = sigmoid(dot(&h, n));
        noise_grads.push(h.iter().map(|&hk| g * hk).collect());
        for (hg, &nk) in h_grad.iter_mut().zip(n) {
            *hg += g * nk;
        }
    }

    let inv_m = 1.0 / m.contributors.len() as f64;
    let contrib_grad: Vec<f64> = h_grad.iter().map(|&g| g * inv_m).collect();
    NsMicroGrads {
        contributors: vec![contrib_grad; m.contributors.len()],
        target: target_grad,
        noise: noise_grads,
    }
}

// ---------------------------------------------------------------------------
// Training

fn init_matrix(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Mat {
    let mut m = Mat::zeros(rows, dim);
    let bound = 0.5 / dim as f64;
    for i in 0..rows {
        for v in m.row_mut(i) {
            *v = rng.random_range(-bound..bound);
        }
    }
    m
}

/// Collects the (context row, label) pairs for one step: the focus word with
/// label 1 plus up to `negative` noise draws with label 0. Draws that hit the
/// focus word are skipped.
fn draw_step_pairs(
    target: usize,
    negative: usize,
    vocab: &Vocab,
    rng: &mut ChaCha8Rng,
    pairs: &mut Vec<(usize, f64)>,
) {
    pairs.clear();
    pairs.push((target, 1.0));
    for _ in 0..negative {
        let n = vocab.sample(rng);
        if n != target {
            pairs.push((n, 0.0));
        }
    }
}

/// Applies one negative-sampling update. `h` is the predictor, `pairs` the
/// context rows with labels. Returns the gradient with respect to `h`.
/// Context rows are updated simultaneously: all logits are computed against
/// the pre-update values, matching [`ns_micro_grads`].
fn ns_apply_step(
    h: &[f64],
    pairs: &[(usize, f64)],
    context: &mut Mat,
    lr: f64,
) -> Vec<f64> {
    let dim = h.len();
    let mut h_grad = vec![0.0; dim];
    let mut gs = Vec::with_capacity(pairs.len());
    for &(row_idx, label) in pairs {
        let row = context.row(row_idx);
        let g = sigmoid(dot(h, row)) - label;
        for (hg, &rk) in h_grad.iter_mut().zip(row) {
            *hg += g * rk;
        }
        gs.push(g);
    }
    for (&(row_idx, _), &g) in pairs.iter().zip(&gs) {
        let row = context.row_mut(row_idx);
        for (rk, &hk) in row.iter_mut().zip(h) {
            *rk -= lr * g * hk;
        }
    }
    h_grad
}

/// Trains a paragraph-vector model over `docs`. Fully deterministic in
/// `cfg.seed`; documents whose tokens all fall below `min_count` (or are
/// downsampled away) keep their seeded initial vectors.
pub fn train(docs: &[Doc], cfg: &TrainConfig) -> Result<PvecModel> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(Error::Data("no documents to train on".into()));
    }
    {
        let mut seen = std::collections::HashSet::new();
        for d in docs {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::Data(format!("duplicate doc id {:?}", d.id)));
            }
        }
    }
    let vocab = build_vocab(docs.iter().map(|d| d.tokens.as_slice()), cfg.min_count)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut word_vectors = init_matrix(&mut rng, vocab.len(), cfg.dim);
    let mut doc_vectors = init_matrix(&mut rng, docs.len(), cfg.dim);
    let mut context_vectors = Mat::zeros(vocab.len(), cfg.dim);

    // Map each document to its retained in-vocabulary token indices.
    let total_count: u64 = (0..vocab.len()).map(|i| vocab.count(i)).sum();
    let retained: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| {
            d.tokens
                .iter()
                .filter_map(|t| vocab.lookup(t))
                .filter(|&idx| match cfg.sample {
                    None => true,
                    Some(t) => {
                        // gensim-style downsampling of frequent words.
                        let f = vocab.count(idx) as f64 / total_count as f64;
                        let keep = ((t / f).sqrt() + t / f).min(1.0);
                        rng.random::<f64>() < keep
                    }
                })
                .collect()
        })
        .collect();

    let total_positions: usize = retained.iter().map(Vec::len).sum();
    if total_positions == 0 {
        return Err(Error::Data("no trainable token positions".into()));
    }
    let total_steps = (cfg.epochs * total_positions) as f64;

    let mut processed = 0usize;
    let mut pairs: Vec<(usize, f64)> = Vec::with_capacity(cfg.negative + 1);
    let mut h = vec![0.0; cfg.dim];
    for _epoch in 0..cfg.epochs {
        for (doc_idx, idxs) in retained.iter().enumerate() {
            for pos in 0..idxs.len() {
                let lr = (cfg.alpha
                    - (cfg.alpha - cfg.min_alpha) * (processed as f64 / total_steps))
                    .max(cfg.min_alpha);
                processed += 1;
                let target = idxs[pos];
                draw_step_pairs(target, cfg.negative, &vocab, &mut rng, &mut pairs);
                match cfg.mode {
                    PvMode::Dbow => {
                        h.copy_from_slice(doc_vectors.row(doc_idx));
                        let h_grad = ns_apply_step(&h, &pairs, &mut context_vectors, lr);
                        let row = doc_vectors.row_mut(doc_idx);
                        for (rk, &glk) in row.iter_mut().zip(&h_grad) {
                            *rk -= lr * glk;
                        }
                    }
                    PvMode::Dm => {
                        let lo = pos.saturating_sub(cfg.window);
                        let hi = (pos + cfg.window + 1).min(idxs.len());
                        // Contributors: the document vector plus window words.
                        h.copy_from_slice(doc_vectors.row(doc_idx));
                        let mut m_count = 1usize;
                        for j in lo..hi {
                            if j == pos {
                                continue;
                            }
                            for (hk, &wk) in h.iter_mut().zip(word_vectors.row(idxs[j])) {
                                *hk += wk;
                            }
                            m_count += 1;
                        }
                        let inv = 1.0 / m_count as f64;
                        h.iter_mut().for_each(|v| *v *= inv);

                        let h_grad = ns_apply_step(&h, &pairs, &mut context_vectors, lr);
                        let scale = lr / m_count as f64;
                        {
                            let row = doc_vectors.row_mut(doc_idx);
                            for (rk, &glk) in row.iter_mut().zip(&h_grad) {
                                *rk -= scale * glk;
                            }
                        }
                        for j in lo..hi {
                            if j == pos {
                                continue;
                            }
                            let row = word_vectors.row_mut(idxs[j]);
                            for (rk, &glk) in row.iter_mut().zip(&h_grad) {
                                *rk -= scale * glk;
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(PvecModel {
        cfg: cfg.clone(),
        vocab,
        word_vectors,
        context_vectors,
        doc_vectors,
        doc_ids: docs.iter().map(|d| d.id.clone()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferParams {
    /// Descent passes over the document.
    pub steps: usize,
    pub seed: u64,
}

impl Default for InferParams {
    fn default() -> Self {
        InferParams { steps: 50, seed: 0 }
    }
}

/// Embeds an unseen token sequence against a trained model. All model
/// weights stay frozen; only the fresh document vector is optimized. A
/// document with no in-vocabulary tokens returns its seeded random
/// initialization unchanged.
pub fn infer(model: &PvecModel, tokens: &[String], params: &InferParams) -> Vec<f64> {
    let cfg = &model.cfg;
    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let bound = 0.5 / dim as f64;
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-bound..bound)).collect();

    let idxs: Vec<usize> = tokens.iter().filter_map(|t| model.vocab.lookup(t)).collect();
    if idxs.is_empty() || params.steps == 0 {
        return v;
    }
    let total_steps = (params.steps * idxs.len()) as f64;
    let mut processed = 0usize;
    let mut pairs: Vec<(usize, f64)> = Vec::with_capacity(cfg.negative + 1);
    let mut h = vec![0.0; dim];
    for _step in 0..params.steps {
        for pos in 0..idxs.len() {
            let lr = (cfg.alpha - (cfg.alpha - cfg.min_alpha) * (processed as f64 / total_steps))
                .max(cfg.min_alpha);
            processed += 1;
            let target = idxs[pos];
            draw_step_pairs(target, cfg.negative, &model.vocab, &mut rng, &mut pairs);

            let m_count;
            match cfg.mode {
                PvMode::Dbow => {
                    h.copy_from_slice(&v);
                    m_count = 1usize;
                }
                PvMode::Dm => {
                    h.copy_from_slice(&v);
                    let lo = pos.saturating_sub(cfg.window);
                    let hi = (pos + cfg.window + 1).min(idxs.len());
                    let mut m = 1usize;
                    for j in lo..hi {
                        if j == pos {
                            continue;
                        }
                        for (hk, &wk) in h.iter_mut().zip(model.word_vectors.row(idxs[j])) {
                            *hk += wk;
                        }
                        m += 1;
                    }
                    let inv = 1.0 / m as f64;
                    h.iter_mut().for_each(|x| *x *= inv);
                    m_count = m;
                }
            }

            // Frozen weights: compute gradients against the stored context
            // rows without updating them.
            let mut h_grad = vec![0.0; dim];
            for &(row_idx, label) in &pairs {
                let row = model.context_vectors.row(row_idx);
                let g = sigmoid(dot(&h, row)) - label;
                for (hg, &rk) in h_grad.iter_mut().zip(row) {
                    *hg += g * rk;
                }
            }
            let scale = lr / m_count as f64;
            for (vk, &glk) in v.iter_mut().zip(&h_grad) {
                *vk -= scale * glk;
            }
        }
    }
    v
}

// ---------------------------------------------------------------------------
// Persistence

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: TrainConfig,
    vocab: Vec<(String, u64)>,
    doc_ids: Vec<String>,
    word_vectors: Mat,
    context_vectors: Mat,
    doc_vectors: Mat,
}

const MODEL_FORMAT: &str = "mfeemb-pvec";
const MODEL_VERSION: u32 = 1;

pub fn model_to_json(model: &PvecModel) -> String {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        config: model.cfg.clone(),
        vocab: model.vocab.iter().map(|(t, c)| (t.to_string(), c)).collect(),
        doc_ids: model.doc_ids.clone(),
        word_vectors: model.word_vectors.clone(),
        context_vectors: model.context_vectors.clone(),
        doc_vectors: model.doc_vectors.clone(),
    };
    serde_json::to_string(&file).expect("model serializes")
}

pub fn model_from_json(text: &str, origin: &Path) -> Result<PvecModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
    if file.format != MODEL_FORMAT {
        return Err(Error::format(origin, format!("unexpected format {:?}", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::format(origin, format!("unsupported version {}", file.version)));
    }
    let (tokens, counts): (Vec<String>, Vec<u64>) = file.vocab.into_iter().unzip();
    let vocab = Vocab::from_counts(tokens, counts)
        .map_err(|e| Error::format(origin, e.to_string()))?;
    let dim = file.config.dim;
    for (name, m, rows) in [
        ("word_vectors", &file.word_vectors, vocab.len()),
        ("context_vectors", &file.context_vectors, vocab.len()),
        ("doc_vectors", &file.doc_vectors, file.doc_ids.len()),
    ] {
        if m.rows() != rows || m.cols() != dim {
            return Err(Error::format(
                origin,
                format!("{name}: expected {rows}x{dim}, got {}x{}", m.rows(), m.cols()),
            ));
        }
    }
    Ok(PvecModel {
        cfg: file.config,
        vocab,
        word_vectors: file.word_vectors,
        context_vectors: file.context_vectors,
        doc_vectors: file.doc_vectors,
        doc_ids: file.doc_ids,
    })
}

pub fn save_model(model: &PvecModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<PvecModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text, path)
}
