/* C interface to the aeaudit library.
 *
 * Every object is an opaque handle created by a function that returns a
 * status and writes the handle through an out pointer. Handles are freed
 * with the matching *_free function (NULL is accepted). Strings returned
 * through char** are heap allocated and released with aeaudit_string_free.
 * On failure, aeaudit_last_error() describes the problem for the calling
 * thread until its next API call.
 */
#ifndef AEAUDIT_H
#define AEAUDIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AEAUDIT_API __declspec(dllexport)
#else
#define AEAUDIT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum aeaudit_status {
  AEAUDIT_OK = 0,
  AEAUDIT_ERR_NULL_ARG = 1,
  AEAUDIT_ERR_INPUT_DOMAIN = 2,
  AEAUDIT_ERR_NUMERICAL = 3,
  AEAUDIT_ERR_FORMAT = 4,
  AEAUDIT_ERR_VERSION = 5,
  AEAUDIT_ERR_SHAPE_MISMATCH = 6,
  AEAUDIT_ERR_DEGENERATE_BASIS = 7,
  AEAUDIT_ERR_UNSUPPORTED_DIMENSION = 8,
  AEAUDIT_ERR_TRAINING = 9,
  AEAUDIT_ERR_REFUSED = 10,
  AEAUDIT_ERR_IO = 11,
  AEAUDIT_ERR_INTERNAL = 12
} aeaudit_status;

typedef struct aeaudit_dataset aeaudit_dataset;
typedef struct aeaudit_model aeaudit_model;
typedef struct aeaudit_scores aeaudit_scores;
typedef struct aeaudit_audit aeaudit_audit;
typedef struct aeaudit_adversary aeaudit_adversary;

AEAUDIT_API const char* aeaudit_version(void);
AEAUDIT_API const char* aeaudit_status_string(aeaudit_status status);
AEAUDIT_API const char* aeaudit_last_error(void);
AEAUDIT_API void aeaudit_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* spec_json: {"family": "gaussian"|"double_gaussian"|"banana"|"diagonal",
 * "samples_per_component", "seed", "noise", "x_lo", "x_hi", "alpha_lo",
 * "alpha_hi", "components": [{"mean": [...], "covariance": [[...]]}]}.
 * resolved_spec_json (optional) receives the generator settings with defaults filled in. */
AEAUDIT_API aeaudit_status aeaudit_dataset_generate(const char* spec_json, aeaudit_dataset** out,
                                                    char** resolved_spec_json);
AEAUDIT_API aeaudit_status aeaudit_dataset_load_csv(const char* path, int has_header,
                                                    aeaudit_dataset** out);
/* digits may be NULL (all digits); max_per_digit 0 means no cap. */
AEAUDIT_API aeaudit_status aeaudit_dataset_load_mnist(const char* images_path,
                                                      const char* labels_path, const int* digits,
                                                      size_t digit_count, size_t max_per_digit,
                                                      aeaudit_dataset** out);
/* Row-major rows×cols copy of data. */
AEAUDIT_API aeaudit_status aeaudit_dataset_from_array(const double* data, size_t rows, size_t cols,
                                                      aeaudit_dataset** out);
AEAUDIT_API aeaudit_status aeaudit_dataset_save_csv(const aeaudit_dataset* ds, const char* path);
AEAUDIT_API aeaudit_status aeaudit_dataset_shape(const aeaudit_dataset* ds, size_t* rows,
                                                 size_t* cols);
AEAUDIT_API aeaudit_status aeaudit_dataset_row(const aeaudit_dataset* ds, size_t index,
                                               double* out, size_t len);
/* 0 = training data, 1 = test data. */
AEAUDIT_API aeaudit_status aeaudit_dataset_set_role(aeaudit_dataset* ds, int test);
AEAUDIT_API void aeaudit_dataset_free(aeaudit_dataset* ds);

/* ---- models ------------------------------------------------------------ */

/* activation: "linear", "relu" or "sigmoid". */
AEAUDIT_API aeaudit_status aeaudit_model_mlp(const size_t* sizes, size_t count,
                                             const char* activation, uint64_t seed,
                                             aeaudit_model** out);
/* name: "mnist-conv2" (latent_dim 0 selects 2). */
AEAUDIT_API aeaudit_status aeaudit_model_preset(const char* name, size_t latent_dim, uint64_t seed,
                                                aeaudit_model** out);
AEAUDIT_API aeaudit_status aeaudit_model_fit_pca(const aeaudit_dataset* ds, size_t latent_dim,
                                                 aeaudit_model** out);
AEAUDIT_API aeaudit_status aeaudit_model_load(const char* path, aeaudit_model** out);
AEAUDIT_API aeaudit_status aeaudit_model_save(const aeaudit_model* model, const char* path);

typedef struct aeaudit_model_info {
  size_t input_dim;
  size_t latent_dim;
  int is_pca;
  int is_linear;
  size_t channels, height, width; /* input shape; 1×1×n for vectors */
} aeaudit_model_info;

AEAUDIT_API aeaudit_status aeaudit_model_get_info(const aeaudit_model* model,
                                                  aeaudit_model_info* info);
AEAUDIT_API aeaudit_status aeaudit_model_reconstruct(const aeaudit_model* model, const double* x,
                                                     size_t n, double* out);
AEAUDIT_API aeaudit_status aeaudit_model_encode(const aeaudit_model* model, const double* x,
                                                size_t n, double* z, size_t d);
AEAUDIT_API aeaudit_status aeaudit_model_decode(const aeaudit_model* model, const double* z,
                                                size_t d, double* x, size_t n);
AEAUDIT_API void aeaudit_model_free(aeaudit_model* model);

/* ---- training ---------------------------------------------------------- */

typedef void (*aeaudit_log_fn)(const char* line, void* user);
/* snapshot is only valid during the call. */
typedef void (*aeaudit_checkpoint_fn)(size_t epoch, const aeaudit_model* snapshot, void* user);

/* Default training configuration as JSON. */
AEAUDIT_API aeaudit_status aeaudit_train_config_default(char** json);
/* Trains model in place. config_json may be NULL (defaults) and overrides
 * only the keys it names. report_json (optional) receives the report. */
AEAUDIT_API aeaudit_status aeaudit_train(aeaudit_model* model, const aeaudit_dataset* data,
                                         const char* config_json, aeaudit_log_fn log,
                                         aeaudit_checkpoint_fn checkpoint, void* user,
                                         char** report_json);

/* ---- scoring ----------------------------------------------------------- */

typedef struct aeaudit_verdict {
  int undetected;
  double score;
  double min_normal_score;
  double margin;
  int has_ratio;
  double ratio;
} aeaudit_verdict;

/* convention: "mean" (NULL) or "sum". */
AEAUDIT_API aeaudit_status aeaudit_score(const aeaudit_model* model, const aeaudit_dataset* data,
                                         const char* convention, aeaudit_scores** out);
AEAUDIT_API aeaudit_status aeaudit_scores_summary(const aeaudit_scores* scores, size_t* count,
                                                  double* min_score, double* max_score);
/* Scores in sample order. */
AEAUDIT_API aeaudit_status aeaudit_scores_values(const aeaudit_scores* scores, double* out,
                                                 size_t len);
AEAUDIT_API aeaudit_status aeaudit_scores_write_csv(const aeaudit_scores* scores, const char* path);
AEAUDIT_API aeaudit_status aeaudit_scores_summary_json(const aeaudit_scores* scores, char** json);
AEAUDIT_API aeaudit_status aeaudit_verdict_for(const aeaudit_model* model,
                                               const aeaudit_scores* train_scores, const double* a,
                                               size_t n, aeaudit_verdict* out);
AEAUDIT_API void aeaudit_scores_free(aeaudit_scores* scores);

/* ---- audit ------------------------------------------------------------- */

/* options_json (may be NULL): {"space": "auto"|"input"|"latent",
 * "nx", "ny", "epsilon", "far_threshold", "bounds": [xmin, xmax, ymin, ymax],
 * "threads"}. "auto" scans input space for 2-D inputs, else latent space. */
AEAUDIT_API aeaudit_status aeaudit_audit_run(const aeaudit_model* model,
                                             const aeaudit_dataset* train,
                                             const char* options_json, aeaudit_audit** out);
AEAUDIT_API aeaudit_status aeaudit_audit_summary(const aeaudit_audit* audit, int* finding,
                                                 size_t* region_count, size_t* nx, size_t* ny);
AEAUDIT_API aeaudit_status aeaudit_audit_loss(const aeaudit_audit* audit, size_t i, size_t j,
                                              double* loss);
/* Grid point with the smallest loss (first in row-major order on ties). */
AEAUDIT_API aeaudit_status aeaudit_audit_min_point(const aeaudit_audit* audit, double point[2],
                                                   double* loss);
AEAUDIT_API aeaudit_status aeaudit_audit_report_json(const aeaudit_audit* audit,
                                                     const char* model_file, uint64_t seed,
                                                     char** json);
AEAUDIT_API aeaudit_status aeaudit_audit_write_grid_csv(const aeaudit_audit* audit,
                                                        const char* path);
AEAUDIT_API aeaudit_status aeaudit_audit_write_svg(const aeaudit_audit* audit, const char* path);
AEAUDIT_API void aeaudit_audit_free(aeaudit_audit* audit);

/* ---- adversarial anomalies -------------------------------------------- */

/* options_json: {"method": "analytic"|"pgd"|"latent", "delta", "steps",
 * "step_size", "restarts", "seed", "z": [...], "max_angle"}. */
AEAUDIT_API aeaudit_status aeaudit_attack(const aeaudit_model* model, const aeaudit_dataset* train,
                                          const char* options_json, aeaudit_adversary** out);
/* train_scores (optional) adds the verdict of the result. */
AEAUDIT_API aeaudit_status aeaudit_adversary_json(const aeaudit_adversary* adv,
                                                  const aeaudit_scores* train_scores, char** json);
AEAUDIT_API aeaudit_status aeaudit_adversary_point(const aeaudit_adversary* adv, double* out,
                                                   size_t len, double* loss, double* min_dist,
                                                   int* found);
/* Writes a as an 8-bit PGM using the model's image shape. */
AEAUDIT_API aeaudit_status aeaudit_adversary_write_pgm(const aeaudit_adversary* adv,
                                                       const aeaudit_model* model,
                                                       const char* path);
AEAUDIT_API void aeaudit_adversary_free(aeaudit_adversary* adv);

#ifdef __cplusplus
}
#endif

#endif /* AEAUDIT_H */
