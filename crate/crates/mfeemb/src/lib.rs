//! Multi-feature embeddings for multiparty dialogue.
//!
//! A dialogue is read as three parallel token streams — the words themselves,
//! per-utterance dialogue-act tags, and per-utterance quantized sentiment —
//! and each stream is embedded with a paragraph-vector model. Concatenating
//! the three document vectors yields the dialogue representation used by the
//! classifiers and diagnostics in this crate:
//!
//! * [`corpus`] — dialogue data model, JSONL I/O, z-score conflict labels
//! * [`featurize`] — tokenizer, dialogue-act taggers, sentiment scoring
//! * [`pvec`] — paragraph-vector training and held-out inference
//! * [`embed`] — channel composition into fixed-width vectors
//! * [`classify`] — logistic regression, SMO-trained RBF SVM, nearest centroid
//! * [`genmetric`] — inter/intra-class cosine generalizability score
//! * [`augment`] — synonym-replacement augmentation and robustness audits
//! * [`analyze`] — frequency/sentiment/n-gram reports with SVG charts
//! * [`experiment`] — config-driven multi-run transfer experiments
//!
//! Everything is deterministic given the seeds in the relevant config: runs
//! are single-threaded and all randomness flows from explicitly derived
//! [`rand_chacha::ChaCha8Rng`] streams.

pub mod analyze;
pub mod augment;
pub mod classify;
pub mod corpus;
pub mod embed;
mod error;
pub mod experiment;
pub mod featurize;
pub mod genmetric;
pub mod pvec;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
