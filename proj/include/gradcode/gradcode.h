/*
 * gradcode C API.
 *
 * Opaque handles own C++ objects; every call returns a gc_status and, on
 * failure, leaves a message retrievable with gc_last_error() on the calling
 * thread. Strings returned through char** must be released with
 * gc_string_free().
 */
#ifndef GRADCODE_H
#define GRADCODE_H

#include <stddef.h>
#include <stdint.h>

#if defined(GRADCODE_BUILDING_LIBRARY)
#define GC_API __attribute__((visibility("default")))
#else
#define GC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gc_status {
  GC_OK = 0,
  GC_ERR_INVALID_ARGUMENT = 1,
  GC_ERR_DIMENSION_MISMATCH = 2,
  GC_ERR_NON_FINITE = 3,
  GC_ERR_SINGULAR_SYSTEM = 4,
  GC_ERR_DIVISIBILITY = 5,
  GC_ERR_RETRY_EXHAUSTED = 6,
  GC_ERR_SPAN_FAILURE = 7,
  GC_ERR_BUDGET_EXCEEDED = 8,
  GC_ERR_INDEX_OUT_OF_RANGE = 9,
  GC_ERR_PARSE = 10,
  GC_ERR_INVALID_ALPHA = 11,
  GC_ERR_DEGENERATE_LABELS = 12,
  GC_ERR_STARVED_ITERATION = 13,
  GC_ERR_MISMATCHED_CONFIGS = 14,
  GC_ERR_IO = 15,
  GC_ERR_INTERNAL = 16
} gc_status;

typedef enum gc_code_kind {
  GC_KIND_NAIVE = 0,
  GC_KIND_FRAC = 1,
  GC_KIND_CYC = 2,
  GC_KIND_CUSTOM = 3
} gc_code_kind;

typedef struct gc_code gc_code;
typedef struct gc_plan gc_plan;
typedef struct gc_run gc_run;

GC_API const char* gc_version(void);
GC_API const char* gc_status_name(gc_status status);
/* Message of the most recent failure on this thread ("" if none). */
GC_API const char* gc_last_error(void);
GC_API void gc_string_free(char* str);

/* ---- schemes ---------------------------------------------------------- */

GC_API gc_status gc_code_build_naive(size_t n, gc_code** out);
GC_API gc_status gc_code_build_frac(size_t n, size_t s, gc_code** out);
GC_API gc_status gc_code_build_cyc(size_t n, size_t s, uint64_t seed, gc_code** out);
/* B is n*k row-major. */
GC_API gc_status gc_code_from_matrix(gc_code_kind kind, size_t n, size_t k, size_t s,
                                     const double* b, gc_code** out);
GC_API gc_status gc_code_import(const char* path, gc_code** out);
GC_API gc_status gc_code_import_text(const char* text, gc_code** out);
GC_API gc_status gc_code_export(const gc_code* code, const char* path);
GC_API gc_status gc_code_export_text(const gc_code* code, char** out);
GC_API void gc_code_free(gc_code* code);

GC_API size_t gc_code_workers(const gc_code* code);
GC_API size_t gc_code_partitions(const gc_code* code);
GC_API size_t gc_code_stragglers(const gc_code* code);
GC_API gc_code_kind gc_code_get_kind(const gc_code* code);
/* Returns 1 and writes *seed when the code carries an H seed, else 0. */
GC_API int gc_code_h_seed(const gc_code* code, uint64_t* seed);
/* Copies B (n*k, row-major) into out, which must hold `len` >= n*k doubles. */
GC_API gc_status gc_code_matrix(const gc_code* code, double* out, size_t len);

/* Partition indices held by `worker`. *count receives the full size even when
 * it exceeds cap. */
GC_API gc_status gc_code_assignment(const gc_code* code, size_t worker, size_t* out, size_t cap,
                                    size_t* count);

/* Decoding coefficients for a survivor set of size n - s. coeffs receives one
 * value per survivor in ascending worker order. Rows are cached per handle. */
GC_API gc_status gc_code_decode(gc_code* code, const size_t* survivors, size_t count, double tol,
                                double* coeffs, double* residual);

typedef struct gc_bspan_report {
  int ok;
  uint64_t checked;
  uint64_t failures;
  /* First failing survivor set (n - s entries) when failures > 0, stored
   * into the caller's buffer if one was supplied. */
} gc_bspan_report;

GC_API gc_status gc_code_verify_bspan(const gc_code* code, double tol, uint64_t budget,
                                      gc_bspan_report* report, size_t* first_failure,
                                      size_t first_failure_cap);

typedef struct gc_density_report {
  size_t min_row_density;
  size_t max_row_density;
  size_t bound;
  int meets_bound_with_equality;
} gc_density_report;

GC_API gc_status gc_code_density(const gc_code* code, gc_density_report* report);

typedef struct gc_mds_report {
  int available; /* 0 when the code carries no H (not cyc, or no h_seed) */
  int ok;
  uint64_t checked;
  uint64_t failures;
} gc_mds_report;

/* For cyc codes with an h_seed: every s-column submatrix of H has rank s. */
GC_API gc_status gc_code_check_mds(const gc_code* code, double tol, gc_mds_report* report);

/* ---- partial-straggler plans ------------------------------------------ */

GC_API gc_status gc_load_fraction(size_t n, size_t s, double alpha, double* out);
GC_API gc_status gc_plan_build(size_t n, size_t s, double alpha, gc_code_kind kind, uint64_t seed,
                               gc_plan** out);
GC_API gc_status gc_plan_import_text(const char* text, gc_plan** out);
GC_API gc_status gc_plan_export(const gc_plan* plan, const char* path);
GC_API gc_status gc_plan_export_text(const gc_plan* plan, char** out);
GC_API void gc_plan_free(gc_plan* plan);

typedef struct gc_plan_info {
  size_t n;
  size_t s;
  double alpha;
  size_t naive_per_worker;
  size_t naive_partitions_total;
  size_t coded_partitions_total;
  double worker_fraction;      /* realized share of partitions per worker */
  double straggler_naive_time; /* in partition compute units */
  double non_straggler_total_time;
} gc_plan_info;

GC_API gc_status gc_plan_get_info(const gc_plan* plan, gc_plan_info* info);
/* Borrowed; valid while the plan lives. */
GC_API const gc_code* gc_plan_code(const gc_plan* plan);

/* ---- datasets ----------------------------------------------------------- */

/* Synthetic dataset as CSV (label then p features), one row per sample. */
GC_API gc_status gc_dataset_export_csv(size_t d, size_t p, uint64_t seed, const char* path);

/* ---- simulation ------------------------------------------------------- */

/* Validates a run config document without running it. */
GC_API gc_status gc_config_validate(const char* config_json);
/* Canonical form of a config (all fields, defaults filled in). */
GC_API gc_status gc_config_normalize(const char* config_json, char** out);
/* Splits a comparison bundle into normalized member configs. */
GC_API gc_status gc_bundle_members(const char* bundle_json, char*** configs, size_t* count);
GC_API void gc_string_array_free(char** strs, size_t count);

GC_API gc_status gc_run_simulation(const char* config_json, gc_run** out);
GC_API void gc_run_free(gc_run* run);

typedef struct gc_run_summary {
  size_t iterations;
  double total_time;
  double final_loss;
  double final_auc; /* NaN if never computed */
  double replication_overhead;
} gc_run_summary;

GC_API gc_status gc_run_get_summary(const gc_run* run, gc_run_summary* out);
GC_API gc_status gc_run_label(const gc_run* run, char** out);
GC_API gc_status gc_run_csv(const gc_run* run, char** out);
/* Model after the last iteration; *count receives p even when cap is short. */
GC_API gc_status gc_run_model(const gc_run* run, double* out, size_t cap, size_t* count);

/* Comparison outputs for `count` runs. loss_threshold <= 0 picks the highest
 * best-loss among the runs. Any output pointer may be NULL. */
GC_API gc_status gc_compare(const gc_run* const* runs, size_t count, double loss_threshold,
                            char** summary_csv, char** iteration_csv, char** timeline_csv);

#ifdef __cplusplus
}
#endif

#endif /* GRADCODE_H */
