//! C ABI over the mfeemb library: opaque handles, integer status codes, and
//! JSON strings for structured inputs and outputs.
//!
//! Conventions:
//! - Every function returns an [`MfeembStatus`]; `MFEEMB_STATUS_OK` is 0.
//! - Output parameters are written only on success.
//! - On failure a thread-local message is set; fetch it with
//!   [`mfeemb_last_error_message`] and release it with [`mfeemb_string_free`].
//! - Handles are created and destroyed by this library only; passing a
//!   handle to any function after freeing it is undefined behavior.
//! - All `char*` inputs must be NUL-terminated UTF-8.

#![warn(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use serde::Deserialize;

use mfeemb::corpus::{assign_labels_zscore, load_corpus, parse_corpus, Corpus};
use mfeemb::embed::{embed_corpus, ChannelModels, EmbedOptions, EmbeddedDataset};
use mfeemb::experiment::{load_config, report_to_json, run_experiment, train_channel_models};
use mfeemb::featurize::{DaTagger, PolarityLexicon, RuleTable, TagSet};
use mfeemb::genmetric::generalizability_score;
use mfeemb::pvec::{PvMode, TrainConfig};
use mfeemb::Error;

/// Result of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfeembStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Invalid argument or configuration.
    Usage = 3,
    /// File system failure.
    Io = 4,
    /// Malformed input file.
    Format = 5,
    /// Input violates a data contract (labels, ids, shapes).
    Data = 6,
    /// Numeric failure (degenerate scores, non-finite values).
    Numeric = 7,
    /// The library panicked internally; state may be inconsistent.
    Panic = 8,
}

/// An in-memory dialogue corpus.
pub struct MfeembCorpus(Corpus);

/// Trained channel models plus the featurization context they were trained
/// with (tagger, lexicon, quantization width).
pub struct MfeembModels {
    models: ChannelModels,
    tagset: TagSet,
    tagger: DaTagger,
    lexicon: PolarityLexicon,
    bins: usize,
}

/// A labeled embedding matrix.
pub struct MfeembDataset(EmbeddedDataset);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = Some(CString::new(sanitized).expect("NULs removed"));
    });
}

fn fail(e: &Error) -> MfeembStatus {
    set_error(&e.to_string());
    match e {
        Error::Usage(_) => MfeembStatus::Usage,
        Error::Io { .. } => MfeembStatus::Io,
        Error::Format { .. } => MfeembStatus::Format,
        Error::Data(_) => MfeembStatus::Data,
        Error::Numeric(_) => MfeembStatus::Numeric,
    }
}

/// Runs `f`, converting panics into `MFEEMB_STATUS_PANIC` instead of
/// unwinding across the FFI boundary.
fn guarded<F: FnOnce() -> MfeembStatus>(f: F) -> MfeembStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            MfeembStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be NULL or a NUL-terminated string valid for reads.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, MfeembStatus> {
    if ptr.is_null() {
        set_error("string argument is NULL");
        return Err(MfeembStatus::NullArgument);
    }
    // SAFETY: non-NULL and NUL-terminated per the caller contract.
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        MfeembStatus::InvalidUtf8
    })
}

fn leak_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("NULs removed")
        .into_raw()
}

macro_rules! out_param {
    ($ptr:expr) => {{
        if $ptr.is_null() {
            set_error("output pointer is NULL");
            return MfeembStatus::NullArgument;
        }
    }};
}

macro_rules! handle {
    ($ptr:expr) => {{
        match unsafe { $ptr.as_ref() } {
            Some(h) => h,
            None => {
                set_error("handle is NULL");
                return MfeembStatus::NullArgument;
            }
        }
    }};
}

// ---------------------------------------------------------------------------
// Library metadata and error reporting

/// Version of this library as a static string; do not free.
#[no_mangle]
pub extern "C" fn mfeemb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the calling thread's last error message, or returns NULL if no
/// error has occurred. Free the copy with `mfeemb_string_free`.
#[no_mangle]
pub extern "C" fn mfeemb_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: `s` came from CString::into_raw per the caller contract.
        drop(unsafe { CString::from_raw(s) });
    }
}

// ---------------------------------------------------------------------------
// Corpus handles

/// Loads a JSONL corpus from `path` into a new handle.
///
/// # Safety
/// `path` must be a readable NUL-terminated UTF-8 string; `out` must be a
/// valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_corpus_load(
    path: *const c_char,
    out: *mut *mut MfeembCorpus,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let path = match unsafe { read_str(path) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match load_corpus(path) {
            Ok(corpus) => {
                // SAFETY: `out` is valid for writes per the caller contract.
                unsafe { *out = Box::into_raw(Box::new(MfeembCorpus(corpus))) };
                MfeembStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Parses an in-memory JSONL document as a corpus named `name`.
///
/// # Safety
/// `text` and `name` must be NUL-terminated UTF-8 strings; `out` must be a
/// valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_corpus_from_jsonl(
    text: *const c_char,
    name: *const c_char,
    out: *mut *mut MfeembCorpus,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let (text, name) = match unsafe { (read_str(text), read_str(name)) } {
            (Ok(t), Ok(n)) => (t, n),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match parse_corpus(text, name, std::path::Path::new("<memory>")) {
            Ok(corpus) => {
                // SAFETY: `out` is valid for writes per the caller contract.
                unsafe { *out = Box::into_raw(Box::new(MfeembCorpus(corpus))) };
                MfeembStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Writes the number of dialogues in the corpus to `out`.
///
/// # Safety
/// `corpus` must be a live corpus handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_corpus_len(
    corpus: *const MfeembCorpus,
    out: *mut usize,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let corpus = handle!(corpus);
        // SAFETY: `out` is valid for writes per the caller contract.
        unsafe { *out = corpus.0.len() };
        MfeembStatus::Ok
    })
}

/// Derives high/low conflict labels from the stored conflict scores by
/// z-scoring them against the corpus mean and thresholding.
///
/// # Safety
/// `corpus` must be a live corpus handle not aliased by another thread.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_corpus_assign_labels(
    corpus: *mut MfeembCorpus,
    threshold: f64,
) -> MfeembStatus {
    guarded(|| {
        let corpus = match unsafe { corpus.as_mut() } {
            Some(c) => c,
            None => {
                set_error("handle is NULL");
                return MfeembStatus::NullArgument;
            }
        };
        match assign_labels_zscore(&mut corpus.0, threshold) {
            Ok(()) => MfeembStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Frees a corpus handle. NULL is ignored.
///
/// # Safety
/// `corpus` must have come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_corpus_free(corpus: *mut MfeembCorpus) {
    if !corpus.is_null() {
        // SAFETY: the handle was allocated by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(corpus) });
    }
}

// ---------------------------------------------------------------------------
// Model training and embedding

/// JSON body accepted by `mfeemb_models_train`. All fields optional.
#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainSpec {
    pvec: TrainConfig,
    word_mode: PvMode,
    bins: usize,
    tagger: String,
    lexicon_path: Option<PathBuf>,
    seed: u64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            pvec: TrainConfig::default(),
            word_mode: PvMode::Dm,
            bins: 5,
            tagger: "rules".to_string(),
            lexicon_path: None,
            seed: 0,
        }
    }
}

/// Trains the three channel models on a labeled corpus. `config_json` is a
/// JSON object such as `{"pvec": {"dim": 32}, "bins": 5, "tagger": "rules",
/// "seed": 1}`; pass `"{}"` for defaults.
///
/// # Safety
/// `corpus` must be a live corpus handle; `config_json` must be a
/// NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_models_train(
    corpus: *const MfeembCorpus,
    config_json: *const c_char,
    out: *mut *mut MfeembModels,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let corpus = handle!(corpus);
        let config = match unsafe { read_str(config_json) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let spec: TrainSpec = match serde_json::from_str(config) {
            Ok(s) => s,
            Err(e) => return fail(&Error::Usage(format!("bad train config: {e}"))),
        };
        let tagset = TagSet::bundled();
        let tagger = match spec.tagger.as_str() {
            "pretagged" => DaTagger::Pretagged,
            "rules" => DaTagger::RuleBaseline(RuleTable::bundled(&tagset)),
            other => {
                return fail(&Error::Usage(format!(
                    "unknown tagger {other:?} (expected pretagged|rules)"
                )))
            }
        };
        let lexicon = match &spec.lexicon_path {
            Some(p) => match PolarityLexicon::load(p) {
                Ok(l) => l,
                Err(e) => return fail(&e),
            },
            None => PolarityLexicon::bundled(),
        };
        match train_channel_models(
            &corpus.0,
            &tagger,
            &lexicon,
            spec.bins,
            &tagset,
            &spec.pvec,
            spec.word_mode,
            spec.seed,
        ) {
            Ok(models) => {
                let handle = MfeembModels {
                    models,
                    tagset,
                    tagger,
                    lexicon,
                    bins: spec.bins,
                };
                // SAFETY: `out` is valid for writes per the caller contract.
                unsafe { *out = Box::into_raw(Box::new(handle)) };
                MfeembStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Frees a models handle. NULL is ignored.
///
/// # Safety
/// `models` must have come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_models_free(models: *mut MfeembModels) {
    if !models.is_null() {
        // SAFETY: the handle was allocated by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(models) });
    }
}

/// Embeds a labeled corpus. `options_json` matches the library's embedding
/// options, e.g. `{"channels": ["word","da","senti"], "use_infer": true,
/// "infer_steps": 50, "seed": 0}`; pass `"{}"` for defaults (all channels,
/// lookup mode).
///
/// # Safety
/// `models` and `corpus` must be live handles; `options_json` must be a
/// NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_embed(
    models: *const MfeembModels,
    corpus: *const MfeembCorpus,
    options_json: *const c_char,
    out: *mut *mut MfeembDataset,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let models = handle!(models);
        let corpus = handle!(corpus);
        let options = match unsafe { read_str(options_json) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let opts: EmbedOptions = match serde_json::from_str(options) {
            Ok(o) => o,
            Err(e) => return fail(&Error::Usage(format!("bad embed options: {e}"))),
        };
        match embed_corpus(
            &corpus.0,
            &models.models,
            &models.tagger,
            &models.lexicon,
            models.bins,
            &models.tagset,
            &opts,
        ) {
            Ok(ds) => {
                // SAFETY: `out` is valid for writes per the caller contract.
                unsafe { *out = Box::into_raw(Box::new(MfeembDataset(ds))) };
                MfeembStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

// ---------------------------------------------------------------------------
// Dataset accessors

/// Writes the number of embedded dialogues to `out`.
///
/// # Safety
/// `dataset` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_dataset_rows(
    dataset: *const MfeembDataset,
    out: *mut usize,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let ds = handle!(dataset);
        // SAFETY: `out` is valid for writes per the caller contract.
        unsafe { *out = ds.0.matrix.rows() };
        MfeembStatus::Ok
    })
}

/// Writes the embedding width to `out`.
///
/// # Safety
/// `dataset` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_dataset_cols(
    dataset: *const MfeembDataset,
    out: *mut usize,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let ds = handle!(dataset);
        // SAFETY: `out` is valid for writes per the caller contract.
        unsafe { *out = ds.0.matrix.cols() };
        MfeembStatus::Ok
    })
}

/// Copies row `row` into `buffer`, which must hold at least `len` doubles;
/// `len` must equal the dataset's column count.
///
/// # Safety
/// `dataset` must be a live dataset handle; `buffer` must be valid for
/// writing `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_dataset_copy_row(
    dataset: *const MfeembDataset,
    row: usize,
    buffer: *mut f64,
    len: usize,
) -> MfeembStatus {
    guarded(|| {
        out_param!(buffer);
        let ds = handle!(dataset);
        if row >= ds.0.matrix.rows() {
            set_error("row index out of range");
            return MfeembStatus::Usage;
        }
        if len != ds.0.matrix.cols() {
            set_error("buffer length does not match the embedding width");
            return MfeembStatus::Usage;
        }
        let src = ds.0.matrix.row(row);
        // SAFETY: `buffer` holds `len` doubles per the caller contract and
        // `src.len() == len` was just checked.
        unsafe { std::ptr::copy_nonoverlapping(src.as_ptr(), buffer, len) };
        MfeembStatus::Ok
    })
}

/// Writes the row's label to `out`: 0 for low conflict, 1 for high.
///
/// # Safety
/// `dataset` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_dataset_label(
    dataset: *const MfeembDataset,
    row: usize,
    out: *mut c_int,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let ds = handle!(dataset);
        if row >= ds.0.labels.len() {
            set_error("row index out of range");
            return MfeembStatus::Usage;
        }
        let value = match ds.0.labels[row] {
            mfeemb::corpus::ConflictLabel::LowConflict => 0,
            mfeemb::corpus::ConflictLabel::HighConflict => 1,
        };
        // SAFETY: `out` is valid for writes per the caller contract.
        unsafe { *out = value };
        MfeembStatus::Ok
    })
}

/// Returns a copy of the row's dialogue id. Free it with
/// `mfeemb_string_free`.
///
/// # Safety
/// `dataset` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_dataset_id(
    dataset: *const MfeembDataset,
    row: usize,
    out: *mut *mut c_char,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let ds = handle!(dataset);
        if row >= ds.0.ids.len() {
            set_error("row index out of range");
            return MfeembStatus::Usage;
        }
        // SAFETY: `out` is valid for writes per the caller contract.
        unsafe { *out = leak_string(ds.0.ids[row].clone()) };
        MfeembStatus::Ok
    })
}

/// Frees a dataset handle. NULL is ignored.
///
/// # Safety
/// `dataset` must have come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_dataset_free(dataset: *mut MfeembDataset) {
    if !dataset.is_null() {
        // SAFETY: the handle was allocated by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(dataset) });
    }
}

// ---------------------------------------------------------------------------
// Scores and experiments

/// Writes the generalizability score of the dataset to `out`.
///
/// # Safety
/// `dataset` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_generalizability(
    dataset: *const MfeembDataset,
    out: *mut f64,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let ds = handle!(dataset);
        match generalizability_score(&ds.0.matrix, &ds.0.labels) {
            Ok(report) => {
                // SAFETY: `out` is valid for writes per the caller contract.
                unsafe { *out = report.score };
                MfeembStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Writes the full similarity report of the dataset as a JSON string. Free
/// it with `mfeemb_string_free`.
///
/// # Safety
/// `dataset` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_generalizability_json(
    dataset: *const MfeembDataset,
    out: *mut *mut c_char,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let ds = handle!(dataset);
        match generalizability_score(&ds.0.matrix, &ds.0.labels) {
            Ok(report) => {
                let json = serde_json::to_string(&report).expect("report serializes");
                // SAFETY: `out` is valid for writes per the caller contract.
                unsafe { *out = leak_string(json) };
                MfeembStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Runs the experiment described by the JSON config at `config_path` and
/// returns the full report as a JSON string. Free it with
/// `mfeemb_string_free`.
///
/// # Safety
/// `config_path` must be a NUL-terminated UTF-8 string; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mfeemb_run_experiment_file(
    config_path: *const c_char,
    out: *mut *mut c_char,
) -> MfeembStatus {
    guarded(|| {
        out_param!(out);
        let path = match unsafe { read_str(config_path) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let report = match load_config(path).and_then(|cfg| run_experiment(&cfg)) {
            Ok(r) => r,
            Err(e) => return fail(&e),
        };
        // SAFETY: `out` is valid for writes per the caller contract.
        unsafe { *out = leak_string(report_to_json(&report)) };
        MfeembStatus::Ok
    })
}
