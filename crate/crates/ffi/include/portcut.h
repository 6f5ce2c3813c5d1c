#ifndef PORTCUT_H
#define PORTCUT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PORTCUT_OBJECTIVE_CUTN 0

#define PORTCUT_OBJECTIVE_CUTV 1

#define PORTCUT_SCHEME_AS1 0

#define PORTCUT_SCHEME_AS2 1

#define PORTCUT_LEAF_VERTICES 0

#define PORTCUT_LEAF_VOLUME 1

typedef enum PortcutStatus {
  PORTCUT_STATUS_OK = 0,
  PORTCUT_STATUS_NULL_POINTER = 1,
  PORTCUT_STATUS_INVALID_ARGUMENT = 2,
  PORTCUT_STATUS_INSUFFICIENT_DATA = 3,
  PORTCUT_STATUS_DEGENERATE_ASSET = 4,
  PORTCUT_STATUS_DEGENERATE_DEGREE = 5,
  PORTCUT_STATUS_DEGENERATE_VOLUME = 6,
  PORTCUT_STATUS_INVALID_PARTITION = 7,
  PORTCUT_STATUS_NUMERICAL_FAILURE = 8,
  PORTCUT_STATUS_SIZE_LIMIT = 9,
  PORTCUT_STATUS_SINGULAR_COVARIANCE = 10,
  PORTCUT_STATUS_DEGENERATE_NORMALIZATION = 11,
  PORTCUT_STATUS_DEGENERATE_SERIES = 12,
  PORTCUT_STATUS_INCONSISTENT = 13,
  PORTCUT_STATUS_PARSE = 14,
  PORTCUT_STATUS_MISSING_VALUE = 15,
  PORTCUT_STATUS_NON_MONOTONE_DATES = 16,
  PORTCUT_STATUS_IO = 17,
  PORTCUT_STATUS_BUFFER_TOO_SMALL = 18,
  PORTCUT_STATUS_PANIC = 99,
} PortcutStatus;

typedef struct PortcutGraph PortcutGraph;

typedef struct PortcutPrices PortcutPrices;

typedef struct PortcutTree PortcutTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent fallible call on this thread if it failed,
 * otherwise NULL. Valid until the next call into the library on this thread.
 */
const char *portcut_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *portcut_version(void);

void portcut_string_free(char *s);

/**
 * Prices from a row-major `rows x cols` array; assets are labelled
 * `A0, A1, ...` and timestamps `0, 1, ...`.
 */
enum PortcutStatus portcut_prices_new(const double *data,
                                      size_t rows,
                                      size_t cols,
                                      struct PortcutPrices **out);

/**
 * Reads a comma-separated price file with a `date` column; any missing
 * cell is an error.
 */
enum PortcutStatus portcut_prices_from_csv(const char *path, struct PortcutPrices **out);

size_t portcut_prices_num_assets(const struct PortcutPrices *prices);

size_t portcut_prices_num_rows(const struct PortcutPrices *prices);

void portcut_prices_free(struct PortcutPrices *prices);

/**
 * Market graph of absolute return correlations.
 */
enum PortcutStatus portcut_graph_from_prices(const struct PortcutPrices *prices,
                                             struct PortcutGraph **out);

/**
 * Graph from a row-major symmetric `n x n` weight matrix with zero
 * diagonal and entries in [0, 1].
 */
enum PortcutStatus portcut_graph_from_weights(const double *weights,
                                              size_t n,
                                              struct PortcutGraph **out);

size_t portcut_graph_num_vertices(const struct PortcutGraph *graph);

void portcut_graph_free(struct PortcutGraph *graph);

/**
 * One spectral bisection. Writes side labels 1 or 2 into `sides` (length
 * `n`) and lambda2 into `lambda2` when it is not NULL.
 */
enum PortcutStatus portcut_spectral_bisect(const struct PortcutGraph *graph,
                                           uint32_t objective_code,
                                           uint8_t *sides,
                                           size_t n,
                                           double *lambda2);

/**
 * Repeated bisection. A NaN `lambda2_threshold` disables the threshold.
 */
enum PortcutStatus portcut_tree_build(const struct PortcutGraph *graph,
                                      uint32_t objective_code,
                                      size_t max_cuts,
                                      double lambda2_threshold,
                                      uint32_t leaf_selection_code,
                                      size_t min_leaf_size,
                                      struct PortcutTree **out);

/**
 * Parses a tree document as written by `portcut cut`.
 */
enum PortcutStatus portcut_tree_from_json(const char *json, struct PortcutTree **out);

enum PortcutStatus portcut_tree_to_json(const struct PortcutTree *tree, char **out);

size_t portcut_tree_num_assets(const struct PortcutTree *tree);

size_t portcut_tree_num_leaves(const struct PortcutTree *tree);

size_t portcut_tree_k_performed(const struct PortcutTree *tree);

uint64_t portcut_tree_leaf_edge_budget(const struct PortcutTree *tree);

void portcut_tree_free(struct PortcutTree *tree);

/**
 * Asset weights for `scheme_code` written into `weights` (length `n`, the
 * tree's asset count).
 */
enum PortcutStatus portcut_tree_weights(const struct PortcutTree *tree,
                                        uint32_t scheme_code,
                                        double *weights,
                                        size_t n);

/**
 * Minimum-variance weights for a row-major `n x n` covariance matrix.
 */
enum PortcutStatus portcut_min_variance(const double *sigma,
                                        size_t n,
                                        double ridge,
                                        double *weights);

/**
 * Runs a backtest and returns the report as JSON. `strategies` is a
 * comma-separated list such as `"ew,mv,cutn-as2"`; cut strategies use
 * `max_cuts` with the default policy otherwise.
 */
enum PortcutStatus portcut_backtest(const struct PortcutPrices *prices,
                                    size_t split_index,
                                    const char *strategies,
                                    size_t max_cuts,
                                    double mv_ridge,
                                    char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PORTCUT_H */
