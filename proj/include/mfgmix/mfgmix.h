#ifndef MFGMIX_H
#define MFGMIX_H

/* C interface to the mfgmix library. Every call returns an mfgmix_status;
   on failure the message is available from mfgmix_last_error() on the same
   thread until the next failing call. Handles are opaque and owned by the
   caller, who releases them with the matching *_free function (NULL is a
   no-op). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MFGMIX_API __declspec(dllexport)
#else
#define MFGMIX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mfgmix_status {
  MFGMIX_OK = 0,
  MFGMIX_INVALID_ARGUMENT = 1,
  MFGMIX_NEGATIVE_ENTRY = 2,
  MFGMIX_MASS_MISMATCH = 3,
  MFGMIX_FORMAT_VERSION_MISMATCH = 4,
  MFGMIX_DIMENSION_MISMATCH = 5,
  MFGMIX_CORRUPT_FILE = 6,
  MFGMIX_ZERO_PROBABILITY_WITH_ENTROPY = 7,
  MFGMIX_NONCONVERGENT_ROOT_FIND = 8,
  MFGMIX_UNSUPPORTED_COST = 9,
  MFGMIX_SINGULAR_SYSTEM = 10,
  MFGMIX_MAX_ITERATIONS_EXCEEDED = 11,
  MFGMIX_NON_UNIQUE_STATIONARY = 12,
  MFGMIX_POSITIVITY_VIOLATION = 13,
  MFGMIX_ALL_COMPONENTS_VANISH = 14,
  MFGMIX_EMPTY_CLUSTER = 15,
  MFGMIX_OUT_OF_DOMAIN = 16,
  MFGMIX_BAD_MAGIC = 17,
  MFGMIX_TRUNCATED_FILE = 18,
  MFGMIX_DIMENSION_OVERFLOW = 19,
  MFGMIX_UNKNOWN_LABEL = 20,
  MFGMIX_EMPTY_CLASS = 21,
  MFGMIX_NOT_SQUARE = 22,
  MFGMIX_IO_FAILURE = 23,
  MFGMIX_INTERNAL = 100
} mfgmix_status;

typedef struct mfgmix_dataset mfgmix_dataset;
typedef struct mfgmix_model mfgmix_model;
typedef struct mfgmix_fit_result mfgmix_fit_result;
typedef struct mfgmix_report mfgmix_report;
typedef struct mfgmix_solution mfgmix_solution;

MFGMIX_API const char* mfgmix_version(void);
MFGMIX_API const char* mfgmix_last_error(void);
MFGMIX_API const char* mfgmix_status_name(mfgmix_status status);

/* ---- datasets */

/* Loads IDX images (gzip or plain) and quantizes them to num_states grey
   levels. labels_path may be NULL. When classes is non-NULL, only samples
   with those labels are kept and relabeled 0..num_classes-1 in the given
   order; requested labels absent from the file are counted in
   *missing_classes (may be NULL). */
MFGMIX_API mfgmix_status mfgmix_dataset_load_idx(const char* images_path, const char* labels_path,
                                                 size_t num_states, const int* classes,
                                                 size_t num_classes, mfgmix_dataset** out,
                                                 size_t* missing_classes);
MFGMIX_API void mfgmix_dataset_free(mfgmix_dataset* data);
MFGMIX_API size_t mfgmix_dataset_num_samples(const mfgmix_dataset* data);
MFGMIX_API size_t mfgmix_dataset_num_dims(const mfgmix_dataset* data);
MFGMIX_API size_t mfgmix_dataset_num_states(const mfgmix_dataset* data);
MFGMIX_API int mfgmix_dataset_has_labels(const mfgmix_dataset* data);

/* Writes the samples as rows x cols IDX images (grey level of each state's
   bin) and, when labels_path is non-NULL, the labels. */
MFGMIX_API mfgmix_status mfgmix_dataset_write_idx(const mfgmix_dataset* data, size_t rows, size_t cols,
                                                  const char* images_path, const char* labels_path);

/* ---- models */

MFGMIX_API mfgmix_status mfgmix_model_load(const char* path, mfgmix_model** out);
MFGMIX_API mfgmix_status mfgmix_model_save(const mfgmix_model* model, const char* path);
MFGMIX_API void mfgmix_model_free(mfgmix_model* model);
MFGMIX_API size_t mfgmix_model_num_components(const mfgmix_model* model);
MFGMIX_API size_t mfgmix_model_num_dims(const mfgmix_model* model);
MFGMIX_API size_t mfgmix_model_num_states(const mfgmix_model* model);
MFGMIX_API double mfgmix_model_weight(const mfgmix_model* model, size_t k);
/* pi_k^d(i) */
MFGMIX_API double mfgmix_model_prob(const mfgmix_model* model, size_t k, size_t d, size_t i);

MFGMIX_API mfgmix_status mfgmix_synth_generate(const mfgmix_model* model, size_t num_samples,
                                               uint64_t seed, mfgmix_dataset** out);

/* One PGM per component, named <prefix>_<k>.pgm inside dir. */
MFGMIX_API mfgmix_status mfgmix_export_images(const mfgmix_model* model, size_t side, const char* dir,
                                              const char* prefix);

/* ---- fitting */

typedef struct mfgmix_fit_config {
  size_t num_components;
  double epsilon;
  double tolerance;
  size_t max_iterations;
  uint64_t seed;
  double empty_cluster_floor;
  double subsystem_residual_limit;
  double coupling_scale;
  double policy_tolerance;
  double inner_root_tolerance;
  size_t max_policy_iterations;
  size_t threads; /* 0: hardware concurrency */
  int baseline;   /* nonzero: classical EM M-step */
} mfgmix_fit_config;

MFGMIX_API void mfgmix_fit_config_default(mfgmix_fit_config* cfg);

MFGMIX_API mfgmix_status mfgmix_fit(const mfgmix_dataset* data, const mfgmix_fit_config* cfg,
                                    mfgmix_fit_result** out);
MFGMIX_API void mfgmix_fit_result_free(mfgmix_fit_result* result);
/* Copies the fitted model into a new handle. */
MFGMIX_API mfgmix_status mfgmix_fit_result_model(const mfgmix_fit_result* result, mfgmix_model** out);
MFGMIX_API size_t mfgmix_fit_result_iterations(const mfgmix_fit_result* result);
MFGMIX_API int mfgmix_fit_result_converged(const mfgmix_fit_result* result);
/* Per-iteration traces; loglik has iterations + 1 entries. */
MFGMIX_API size_t mfgmix_fit_result_trace_length(const mfgmix_fit_result* result);
MFGMIX_API double mfgmix_fit_result_theta_residual(const mfgmix_fit_result* result, size_t h);
MFGMIX_API double mfgmix_fit_result_loglik(const mfgmix_fit_result* result, size_t h);
MFGMIX_API double mfgmix_fit_result_subsystem_residual(const mfgmix_fit_result* result, size_t h);
MFGMIX_API size_t mfgmix_fit_result_num_warnings(const mfgmix_fit_result* result);
MFGMIX_API const char* mfgmix_fit_result_warning(const mfgmix_fit_result* result, size_t i);

MFGMIX_API mfgmix_status mfgmix_log_likelihood(const mfgmix_model* model, const mfgmix_dataset* data,
                                               size_t threads, double* out);

/* ---- evaluation */

/* H matrix against the dataset's labels, which must lie in 0..K-1. */
MFGMIX_API mfgmix_status mfgmix_evaluate(const mfgmix_model* model, const mfgmix_dataset* data,
                                         size_t threads, mfgmix_report** out);
MFGMIX_API void mfgmix_report_free(mfgmix_report* report);
MFGMIX_API size_t mfgmix_report_size(const mfgmix_report* report);
/* Raw H(class, cluster). */
MFGMIX_API double mfgmix_report_h(const mfgmix_report* report, size_t cls, size_t cluster);
/* Cluster matched with class cls. */
MFGMIX_API size_t mfgmix_report_cluster_of(const mfgmix_report* report, size_t cls);
MFGMIX_API double mfgmix_report_diagonal_mean(const mfgmix_report* report);
MFGMIX_API size_t mfgmix_report_class_size(const mfgmix_report* report, size_t cls);
MFGMIX_API mfgmix_status mfgmix_report_write_csv(const mfgmix_report* report,
                                                 const char* const* class_names, const char* path);

/* ---- single subsystem */

MFGMIX_API mfgmix_status mfgmix_solve(const double* theta, size_t num_states, double epsilon,
                                      mfgmix_solution** out);
MFGMIX_API void mfgmix_solution_free(mfgmix_solution* solution);
MFGMIX_API size_t mfgmix_solution_num_states(const mfgmix_solution* solution);
MFGMIX_API double mfgmix_solution_value(const mfgmix_solution* solution, size_t i);
MFGMIX_API double mfgmix_solution_ergodic_cost(const mfgmix_solution* solution);
MFGMIX_API double mfgmix_solution_distribution(const mfgmix_solution* solution, size_t i);
MFGMIX_API double mfgmix_solution_transition(const mfgmix_solution* solution, size_t i, size_t j);
MFGMIX_API double mfgmix_solution_hjb_residual(const mfgmix_solution* solution);
MFGMIX_API double mfgmix_solution_fp_residual(const mfgmix_solution* solution);
MFGMIX_API size_t mfgmix_solution_iterations(const mfgmix_solution* solution);

#ifdef __cplusplus
}
#endif

#endif
