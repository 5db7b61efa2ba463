//! Exercises the C ABI end to end: corpus handles, training, embedding,
//! dataset accessors, scores, and the error paths.

use std::ffi::{c_char, c_int, CStr, CString};
use std::ptr;

use mfeemb::synth::write_desk_benchmark;
use mfeemb_ffi::*;
use tempfile::TempDir;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let ptr = mfeemb_last_error_message();
    assert!(!ptr.is_null(), "expected an error message");
    let msg = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string();
    unsafe { mfeemb_string_free(ptr) };
    msg
}

struct Bench {
    _dir: TempDir,
    corpus: *mut MfeembCorpus,
    target: *mut MfeembCorpus,
}

fn load_bench() -> Bench {
    let dir = TempDir::new().unwrap();
    write_desk_benchmark(dir.path(), 7).unwrap();
    let mut corpus = ptr::null_mut();
    let path = c(dir.path().join("desk_teams.jsonl").to_str().unwrap());
    assert_eq!(
        unsafe { mfeemb_corpus_load(path.as_ptr(), &mut corpus) },
        MfeembStatus::Ok
    );
    assert_eq!(unsafe { mfeemb_corpus_assign_labels(corpus, 0.0) }, MfeembStatus::Ok);
    let mut target = ptr::null_mut();
    let path = c(dir.path().join("desk_asist.jsonl").to_str().unwrap());
    assert_eq!(
        unsafe { mfeemb_corpus_load(path.as_ptr(), &mut target) },
        MfeembStatus::Ok
    );
    assert_eq!(unsafe { mfeemb_corpus_assign_labels(target, 0.0) }, MfeembStatus::Ok);
    Bench { _dir: dir, corpus, target }
}

#[test]
fn version_is_a_static_string() {
    let v = mfeemb_version();
    assert!(!v.is_null());
    let s = unsafe { CStr::from_ptr(v) }.to_str().unwrap();
    assert_eq!(s, env!("CARGO_PKG_VERSION"));
}

#[test]
fn full_pipeline_through_the_abi() {
    let bench = load_bench();
    let mut len = 0usize;
    assert_eq!(unsafe { mfeemb_corpus_len(bench.corpus, &mut len) }, MfeembStatus::Ok);
    assert_eq!(len, 12);

    let spec = c(r#"{"pvec": {"dim": 8, "epochs": 10, "window": 2}, "tagger": "pretagged", "seed": 3}"#);
    let mut models = ptr::null_mut();
    assert_eq!(
        unsafe { mfeemb_models_train(bench.corpus, spec.as_ptr(), &mut models) },
        MfeembStatus::Ok
    );

    // Lookup embedding of the training corpus.
    let opts = c("{}");
    let mut ds = ptr::null_mut();
    assert_eq!(
        unsafe { mfeemb_embed(models, bench.corpus, opts.as_ptr(), &mut ds) },
        MfeembStatus::Ok
    );
    let (mut rows, mut cols) = (0usize, 0usize);
    assert_eq!(unsafe { mfeemb_dataset_rows(ds, &mut rows) }, MfeembStatus::Ok);
    assert_eq!(unsafe { mfeemb_dataset_cols(ds, &mut cols) }, MfeembStatus::Ok);
    assert_eq!(rows, 12);
    assert_eq!(cols, 3 * 8);

    let mut row = vec![0.0f64; cols];
    assert_eq!(
        unsafe { mfeemb_dataset_copy_row(ds, 0, row.as_mut_ptr(), cols) },
        MfeembStatus::Ok
    );
    assert!(row.iter().any(|&v| v != 0.0), "embedding row is all zeros");
    let mut label: c_int = -1;
    assert_eq!(unsafe { mfeemb_dataset_label(ds, 0, &mut label) }, MfeembStatus::Ok);
    assert!(label == 0 || label == 1);
    let mut id: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { mfeemb_dataset_id(ds, 0, &mut id) }, MfeembStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(id) }.to_str().unwrap(), "teams_00");
    unsafe { mfeemb_string_free(id) };

    let mut score = f64::NAN;
    assert_eq!(unsafe { mfeemb_generalizability(ds, &mut score) }, MfeembStatus::Ok);
    assert!(score.is_finite());
    let mut json: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { mfeemb_generalizability_json(ds, &mut json) }, MfeembStatus::Ok);
    let report = unsafe { CStr::from_ptr(json) }.to_str().unwrap();
    assert!(report.contains("\"score\""));
    unsafe { mfeemb_string_free(json) };

    // Inference embedding of the disjoint-vocabulary target corpus.
    let infer_opts = c(r#"{"use_infer": true, "infer_steps": 10, "seed": 1}"#);
    let mut target_ds = ptr::null_mut();
    assert_eq!(
        unsafe { mfeemb_embed(models, bench.target, infer_opts.as_ptr(), &mut target_ds) },
        MfeembStatus::Ok
    );
    let mut target_rows = 0usize;
    assert_eq!(
        unsafe { mfeemb_dataset_rows(target_ds, &mut target_rows) },
        MfeembStatus::Ok
    );
    assert_eq!(target_rows, 24);

    unsafe {
        mfeemb_dataset_free(target_ds);
        mfeemb_dataset_free(ds);
        mfeemb_models_free(models);
        mfeemb_corpus_free(bench.target);
        mfeemb_corpus_free(bench.corpus);
    }
}

#[test]
fn error_paths_set_messages_and_codes() {
    // NULL arguments.
    assert_eq!(
        unsafe { mfeemb_corpus_load(ptr::null(), ptr::null_mut()) },
        MfeembStatus::NullArgument
    );
    let mut corpus = ptr::null_mut();
    assert_eq!(
        unsafe { mfeemb_corpus_load(ptr::null(), &mut corpus) },
        MfeembStatus::NullArgument
    );
    // Missing file.
    let missing = c("/nonexistent/corpus.jsonl");
    assert_eq!(
        unsafe { mfeemb_corpus_load(missing.as_ptr(), &mut corpus) },
        MfeembStatus::Io
    );
    assert!(last_error().contains("corpus.jsonl"));
    // Malformed JSONL.
    let bad = c("not json");
    let name = c("bad");
    assert_eq!(
        unsafe { mfeemb_corpus_from_jsonl(bad.as_ptr(), name.as_ptr(), &mut corpus) },
        MfeembStatus::Format
    );
    // Unlabeled corpus cannot be embedded.
    let jsonl = c(
        r#"{"id": "d1", "domain": "t", "score": 1.0, "utterances": [{"speaker": "a", "text": "hi there"}]}
{"id": "d2", "domain": "t", "score": 3.0, "utterances": [{"speaker": "b", "text": "hello friend"}]}"#,
    );
    let name = c("mini");
    assert_eq!(
        unsafe { mfeemb_corpus_from_jsonl(jsonl.as_ptr(), name.as_ptr(), &mut corpus) },
        MfeembStatus::Ok
    );
    let spec = c(r#"{"pvec": {"dim": 4, "epochs": 2}}"#);
    let mut models = ptr::null_mut();
    assert_eq!(
        unsafe { mfeemb_models_train(corpus, spec.as_ptr(), &mut models) },
        MfeembStatus::Ok
    );
    let opts = c("{}");
    let mut ds = ptr::null_mut();
    assert_eq!(
        unsafe { mfeemb_embed(models, corpus, opts.as_ptr(), &mut ds) },
        MfeembStatus::Data
    );
    assert!(!last_error().is_empty());
    // Bad config JSON.
    let bad_spec = c(r#"{"no_such_field": 1}"#);
    let mut m2 = ptr::null_mut();
    assert_eq!(
        unsafe { mfeemb_models_train(corpus, bad_spec.as_ptr(), &mut m2) },
        MfeembStatus::Usage
    );
    unsafe {
        mfeemb_models_free(models);
        mfeemb_corpus_free(corpus);
    }
}

#[test]
fn run_experiment_returns_report_json() {
    let dir = TempDir::new().unwrap();
    write_desk_benchmark(dir.path(), 7).unwrap();
    // Shrink the run count so the ABI test stays quick.
    let config_path = dir.path().join("ffi_config.json");
    let text = std::fs::read_to_string(dir.path().join("desk_config.json")).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg["runs"] = serde_json::json!(2);
    std::fs::write(&config_path, serde_json::to_string(&cfg).unwrap()).unwrap();

    let path = c(config_path.to_str().unwrap());
    let mut json: *mut c_char = ptr::null_mut();
    assert_eq!(
        unsafe { mfeemb_run_experiment_file(path.as_ptr(), &mut json) },
        MfeembStatus::Ok
    );
    let report = unsafe { CStr::from_ptr(json) }.to_str().unwrap();
    for key in ["\"config\"", "\"runs\"", "\"aggregate\"", "\"generalizability\""] {
        assert!(report.contains(key));
    }
    unsafe { mfeemb_string_free(json) };
}

#[test]
fn generated_header_covers_the_surface() {
    let header = include_str!("../include/mfeemb.h");
    for symbol in [
        "MFEEMB_H",
        "MfeembStatus",
        "MfeembCorpus",
        "MfeembModels",
        "MfeembDataset",
        "mfeemb_version",
        "mfeemb_last_error_message",
        "mfeemb_string_free",
        "mfeemb_corpus_load",
        "mfeemb_corpus_from_jsonl",
        "mfeemb_corpus_len",
        "mfeemb_corpus_assign_labels",
        "mfeemb_corpus_free",
        "mfeemb_models_train",
        "mfeemb_models_free",
        "mfeemb_embed",
        "mfeemb_dataset_rows",
        "mfeemb_dataset_cols",
        "mfeemb_dataset_copy_row",
        "mfeemb_dataset_label",
        "mfeemb_dataset_id",
        "mfeemb_dataset_free",
        "mfeemb_generalizability",
        "mfeemb_generalizability_json",
        "mfeemb_run_experiment_file",
    ] {
        assert!(header.contains(symbol), "header is missing {symbol}");
    }
}
