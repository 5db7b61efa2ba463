#ifndef MFEEMB_H
#define MFEEMB_H

/* Generated by cbindgen from the mfeemb-ffi crate. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every API call.
 */
typedef enum MfeembStatus {
  MFEEMB_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  MFEEMB_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  MFEEMB_STATUS_INVALID_UTF8 = 2,
  /**
   * Invalid argument or configuration.
   */
  MFEEMB_STATUS_USAGE = 3,
  /**
   * File system failure.
   */
  MFEEMB_STATUS_IO = 4,
  /**
   * Malformed input file.
   */
  MFEEMB_STATUS_FORMAT = 5,
  /**
   * Input violates a data contract (labels, ids, shapes).
   */
  MFEEMB_STATUS_DATA = 6,
  /**
   * Numeric failure (degenerate scores, non-finite values).
   */
  MFEEMB_STATUS_NUMERIC = 7,
  /**
   * The library panicked internally; state may be inconsistent.
   */
  MFEEMB_STATUS_PANIC = 8,
} MfeembStatus;

/**
 * An in-memory dialogue corpus.
 */
typedef struct MfeembCorpus MfeembCorpus;

/**
 * A labeled embedding matrix.
 */
typedef struct MfeembDataset MfeembDataset;

/**
 * Trained channel models plus the featurization context they were trained
 * with (tagger, lexicon, quantization width).
 */
typedef struct MfeembModels MfeembModels;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of this library as a static string; do not free.
 */
const char *mfeemb_version(void);

/**
 * Copies the calling thread's last error message, or returns NULL if no
 * error has occurred. Free the copy with `mfeemb_string_free`.
 */
char *mfeemb_last_error_message(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must have been returned by this library and not freed before.
 */
void mfeemb_string_free(char *s);

/**
 * Loads a JSONL corpus from `path` into a new handle.
 *
 * # Safety
 * `path` must be a readable NUL-terminated UTF-8 string; `out` must be a
 * valid writable pointer.
 */
enum MfeembStatus mfeemb_corpus_load(const char *path, struct MfeembCorpus **out);

/**
 * Parses an in-memory JSONL document as a corpus named `name`.
 *
 * # Safety
 * `text` and `name` must be NUL-terminated UTF-8 strings; `out` must be a
 * valid writable pointer.
 */
enum MfeembStatus mfeemb_corpus_from_jsonl(const char *text,
                                           const char *name,
                                           struct MfeembCorpus **out);

/**
 * Writes the number of dialogues in the corpus to `out`.
 *
 * # Safety
 * `corpus` must be a live corpus handle; `out` must be writable.
 */
enum MfeembStatus mfeemb_corpus_len(const struct MfeembCorpus *corpus, size_t *out);

/**
 * Derives high/low conflict labels from the stored conflict scores by
 * z-scoring them against the corpus mean and thresholding.
 *
 * # Safety
 * `corpus` must be a live corpus handle not aliased by another thread.
 */
enum MfeembStatus mfeemb_corpus_assign_labels(struct MfeembCorpus *corpus, double threshold);

/**
 * Frees a corpus handle. NULL is ignored.
 *
 * # Safety
 * `corpus` must have come from this library and not be used afterwards.
 */
void mfeemb_corpus_free(struct MfeembCorpus *corpus);

/**
 * Trains the three channel models on a labeled corpus. `config_json` is a
 * JSON object such as `{"pvec": {"dim": 32}, "bins": 5, "tagger": "rules",
 * "seed": 1}`; pass `"{}"` for defaults.
 *
 * # Safety
 * `corpus` must be a live corpus handle; `config_json` must be a
 * NUL-terminated UTF-8 string; `out` must be writable.
 */
enum MfeembStatus mfeemb_models_train(const struct MfeembCorpus *corpus,
                                      const char *config_json,
                                      struct MfeembModels **out);

/**
 * Frees a models handle. NULL is ignored.
 *
 * # Safety
 * `models` must have come from this library and not be used afterwards.
 */
void mfeemb_models_free(struct MfeembModels *models);

/**
 * Embeds a labeled corpus. `options_json` matches the library's embedding
 * options, e.g. `{"channels": ["word","da","senti"], "use_infer": true,
 * "infer_steps": 50, "seed": 0}`; pass `"{}"` for defaults (all channels,
 * lookup mode).
 *
 * # Safety
 * `models` and `corpus` must be live handles; `options_json` must be a
 * NUL-terminated UTF-8 string; `out` must be writable.
 */
enum MfeembStatus mfeemb_embed(const struct MfeembModels *models,
                               const struct MfeembCorpus *corpus,
                               const char *options_json,
                               struct MfeembDataset **out);

/**
 * Writes the number of embedded dialogues to `out`.
 *
 * # Safety
 * `dataset` must be a live dataset handle; `out` must be writable.
 */
enum MfeembStatus mfeemb_dataset_rows(const struct MfeembDataset *dataset, size_t *out);

/**
 * Writes the embedding width to `out`.
 *
 * # Safety
 * `dataset` must be a live dataset handle; `out` must be writable.
 */
enum MfeembStatus mfeemb_dataset_cols(const struct MfeembDataset *dataset, size_t *out);

/**
 * Copies row `row` into `buffer`, which must hold at least `len` doubles;
 * `len` must equal the dataset's column count.
 *
 * # Safety
 * `dataset` must be a live dataset handle; `buffer` must be valid for
 * writing `len` doubles.
 */
enum MfeembStatus mfeemb_dataset_copy_row(const struct MfeembDataset *dataset,
                                          size_t row,
                                          double *buffer,
                                          size_t len);

/**
 * Writes the row's label to `out`: 0 for low conflict, 1 for high.
 *
 * # Safety
 * `dataset` must be a live dataset handle; `out` must be writable.
 */
enum MfeembStatus mfeemb_dataset_label(const struct MfeembDataset *dataset, size_t row, int *out);

/**
 * Returns a copy of the row's dialogue id. Free it with
 * `mfeemb_string_free`.
 *
 * # Safety
 * `dataset` must be a live dataset handle; `out` must be writable.
 */
enum MfeembStatus mfeemb_dataset_id(const struct MfeembDataset *dataset, size_t row, char **out);

/**
 * Frees a dataset handle. NULL is ignored.
 *
 * # Safety
 * `dataset` must have come from this library and not be used afterwards.
 */
void mfeemb_dataset_free(struct MfeembDataset *dataset);

/**
 * Writes the generalizability score of the dataset to `out`.
 *
 * # Safety
 * `dataset` must be a live dataset handle; `out` must be writable.
 */
enum MfeembStatus mfeemb_generalizability(const struct MfeembDataset *dataset, double *out);

/**
 * Writes the full similarity report of the dataset as a JSON string. Free
 * it with `mfeemb_string_free`.
 *
 * # Safety
 * `dataset` must be a live dataset handle; `out` must be writable.
 */
enum MfeembStatus mfeemb_generalizability_json(const struct MfeembDataset *dataset, char **out);

/**
 * Runs the experiment described by the JSON config at `config_path` and
 * returns the full report as a JSON string. Free it with
 * `mfeemb_string_free`.
 *
 * # Safety
 * `config_path` must be a NUL-terminated UTF-8 string; `out` must be
 * writable.
 */
enum MfeembStatus mfeemb_run_experiment_file(const char *config_path, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MFEEMB_H */
