/* C interface for the sprint sparse retrieval engine. */

#ifndef SPRINT_H
#define SPRINT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>
#include <stdint.h>
#include <stddef.h>

/**
 * Status codes returned by fallible functions.
 */
typedef enum SprintStatus {
  SPRINT_STATUS_OK = 0,
  /**
   * A pointer argument was null or a value argument was out of range.
   */
  SPRINT_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The operation failed on file input/output.
   */
  SPRINT_STATUS_IO = 2,
  /**
   * Input data was malformed or violated an invariant.
   */
  SPRINT_STATUS_DATA = 3,
  /**
   * Unexpected internal failure (including caught panics).
   */
  SPRINT_STATUS_INTERNAL = 4,
} SprintStatus;

/**
 * Opaque handle over a loaded index segment.
 */
typedef struct SprintIndex SprintIndex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread; do not free.
 */
const char *sprint_last_error(void);

/**
 * Opens a segment directory written by the engine (or by
 * `sprint_build_impact_index` / `sprint_build_lexical_index`).
 * Returns null on failure; see `sprint_last_error`.
 *
 * # Safety
 * `segment_dir` must be a valid NUL-terminated string.
 */
struct SprintIndex *sprint_index_open(const char *segment_dir);

/**
 * Releases an index handle. Null is a no-op.
 *
 * # Safety
 * `handle` must be null or a pointer returned by `sprint_index_open`, and
 * must not be used afterwards.
 */
void sprint_index_close(struct SprintIndex *handle);

/**
 * Number of documents in the index, or -1 on a null handle.
 *
 * # Safety
 * `handle` must be null or a live pointer from `sprint_index_open`.
 */
int64_t sprint_index_num_docs(const struct SprintIndex *handle);

/**
 * Number of distinct tokens in the index, or -1 on a null handle.
 *
 * # Safety
 * `handle` must be null or a live pointer from `sprint_index_open`.
 */
int64_t sprint_index_vocab_size(const struct SprintIndex *handle);

/**
 * Top-k integer impact search. `query_json` is a JSON object mapping tokens
 * to positive integer weights, e.g. `{"apple": 2, "pie": 1}`. Returns a JSON
 * array of `{"doc", "score"}` rows (free with `sprint_string_free`) or null
 * on failure.
 *
 * # Safety
 * `handle` must be a live pointer from `sprint_index_open`; `query_json`
 * must be a valid NUL-terminated string.
 */
char *sprint_search_impact(const struct SprintIndex *handle, const char *query_json, uint32_t k);

/**
 * Top-k BM25 search over a lexical segment; the query text is analyzed with
 * the analyzer recorded in the segment. Returns JSON rows as
 * `sprint_search_impact`, or null on failure.
 *
 * # Safety
 * `handle` must be a live pointer from `sprint_index_open`; `query_text`
 * must be a valid NUL-terminated string.
 */
char *sprint_search_bm25(const struct SprintIndex *handle,
                         const char *query_text,
                         double k1,
                         double b,
                         uint32_t k);

/**
 * Builds an impact index segment from a quantized vector file
 * (JSON Lines: `{"id": ..., "vector": {token: impact}}`).
 *
 * # Safety
 * Both arguments must be valid NUL-terminated strings.
 */
enum SprintStatus sprint_build_impact_index(const char *vectors_path, const char *segment_dir);

/**
 * Builds a lexical (BM25) segment from a BEIR corpus file.
 * `analyzer_mode`: 0 = whitespace-lower, 1 = english-porter.
 *
 * # Safety
 * Both path arguments must be valid NUL-terminated strings.
 */
enum SprintStatus sprint_build_lexical_index(const char *corpus_path,
                                             int32_t analyzer_mode,
                                             const char *segment_dir);

/**
 * Scores a TREC run file against a qrels file at cutoff `k`, writing the
 * macro-averaged nDCG, MRR and Recall through the out pointers.
 *
 * # Safety
 * Path arguments must be valid NUL-terminated strings; out pointers must be
 * null or writable.
 */
enum SprintStatus sprint_evaluate_run(const char *run_path,
                                      const char *qrels_path,
                                      uint32_t k,
                                      double *out_ndcg,
                                      double *out_mrr,
                                      double *out_recall);

/**
 * Frees a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must be null or a pointer returned by a `sprint_*` function that
 * documents freeing with this function, and must not be used afterwards.
 */
void sprint_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPRINT_H */
