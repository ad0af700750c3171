/* warpal: input-warped Gaussian-process active learning, C interface.
 *
 * All functions return a warpal_status. On failure, warpal_last_error() gives a
 * thread-local message describing the most recent error on the calling thread.
 * Matrices are row-major: row i of an n x d input is X[i*d .. i*d + d - 1].
 * Hyperparameters are passed as a flat array of length dim + 2:
 * (lengthscale_1 .. lengthscale_dim, signal_variance, noise_variance).
 */
#ifndef WARPAL_WARPAL_H
#define WARPAL_WARPAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WARPAL_API __declspec(dllexport)
#elif defined(WARPAL_BUILDING_LIBRARY)
#define WARPAL_API __attribute__((visibility("default")))
#else
#define WARPAL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum warpal_status {
  WARPAL_OK = 0,
  WARPAL_ERR_DOMAIN = 1,
  WARPAL_ERR_SHAPE = 2,
  WARPAL_ERR_ILL_CONDITIONED = 3,
  WARPAL_ERR_UNSUPPORTED = 4,
  WARPAL_ERR_INVALID_ARGUMENT = 5,
  WARPAL_ERR_NUMERIC = 6,
  WARPAL_ERR_IO = 7,
  WARPAL_ERR_CONFIG = 8,
  WARPAL_ERR_NOT_FOUND = 9,
  WARPAL_ERR_INTERNAL = 100
} warpal_status;

typedef struct warpal_dataset warpal_dataset;
typedef struct warpal_warp warpal_warp;
typedef struct warpal_gp warpal_gp;

WARPAL_API const char* warpal_version(void);
WARPAL_API const char* warpal_last_error(void);

/* Datasets. Inputs must lie in [0,1]^d; exact duplicate rows are rejected. */
WARPAL_API warpal_status warpal_dataset_create(const double* X, size_t n, size_t d, const double* y,
                                               warpal_dataset** out);
WARPAL_API warpal_status warpal_dataset_append(warpal_dataset* ds, const double* x, double y);
WARPAL_API warpal_status warpal_dataset_size(const warpal_dataset* ds, size_t* n, size_t* d);
WARPAL_API void warpal_dataset_free(warpal_dataset* ds);

/* Warps. kind is "identity", "kumaraswamy" or "crqs" (8 bins, 4 layers, 32 hidden units). */
WARPAL_API warpal_status warpal_warp_create(const char* kind, size_t dim, uint64_t seed, warpal_warp** out);
WARPAL_API warpal_status warpal_warp_create_crqs(size_t dim, int bins, int layers, int hidden, uint64_t seed,
                                                 warpal_warp** out);
WARPAL_API warpal_status warpal_warp_num_params(const warpal_warp* w, size_t* n);
WARPAL_API warpal_status warpal_warp_get_params(const warpal_warp* w, double* params, size_t n);
WARPAL_API warpal_status warpal_warp_set_params(warpal_warp* w, const double* params, size_t n);
WARPAL_API warpal_status warpal_warp_forward(const warpal_warp* w, const double* X, size_t n, double* out);
/* Writes a NUL-terminated blob if it fits in cap bytes; *needed receives the required size. */
WARPAL_API warpal_status warpal_warp_serialize(const warpal_warp* w, char* buf, size_t cap, size_t* needed);
WARPAL_API warpal_status warpal_warp_deserialize(const char* blob, warpal_warp** out);
WARPAL_API void warpal_warp_free(warpal_warp* w);

/* Conditioned GP. warp may be NULL for the identity. The warp is copied. */
WARPAL_API warpal_status warpal_gp_condition(const warpal_dataset* ds, const double* hp, const warpal_warp* warp,
                                             warpal_gp** out);
WARPAL_API warpal_status warpal_gp_posterior(const warpal_gp* gp, const double* Xq, size_t n, double* mean,
                                             double* variance);
WARPAL_API warpal_status warpal_gp_eig(const warpal_gp* gp, const double* x, double* value, double* grad);
WARPAL_API warpal_status warpal_gp_propose(const warpal_gp* gp, int n_candidates, int opt_steps, uint64_t seed,
                                           double* x_out);
WARPAL_API void warpal_gp_free(warpal_gp* gp);

WARPAL_API warpal_status warpal_mll(const warpal_dataset* ds, const double* hp, const warpal_warp* warp,
                                    double* value, double* grad_log);
WARPAL_API warpal_status warpal_fit_hyperparams(const warpal_dataset* ds, const warpal_warp* warp,
                                                const double* hp_init, double* hp_out, double* mll_out);
/* objective is "ss" or "mll". Trains in place with hp frozen. */
WARPAL_API warpal_status warpal_train_warp(const warpal_dataset* ds, const double* hp, warpal_warp* warp,
                                           const char* objective, int steps, double learning_rate,
                                           size_t num_probes, uint64_t probe_seed, double* final_loss);

/* Metrics. Curve sets are row-major runs x length. */
WARPAL_API warpal_status warpal_crps_gaussian(double mu, double sigma, double y, double* out);
WARPAL_API warpal_status warpal_area_reduction(const double* metric, const double* baseline, size_t runs,
                                               size_t length, double* mean, double* variance);

/* Benchmarks evaluated on the unit cube. */
WARPAL_API warpal_status warpal_benchmark_dim(const char* name, size_t* dim);
WARPAL_API warpal_status warpal_benchmark_eval(const char* name, const double* u, size_t dim, double* value);

/* Command entry points; each returns a process exit code and prints to stdout/stderr. */
typedef struct warpal_run_overrides {
  int has_seed_base;
  uint64_t seed_base;
  int has_jobs;
  int jobs;
  int has_budget;
  int64_t budget;
  const char* method;    /* NULL for no override */
  const char* benchmark; /* NULL for no override */
} warpal_run_overrides;

WARPAL_API int warpal_cmd_run(const char* config_path, const warpal_run_overrides* overrides);
WARPAL_API int warpal_cmd_report(const char* sweep_dir, const char* baseline_method);
WARPAL_API int warpal_cmd_export(const char* sweep_dir);
WARPAL_API int warpal_cmd_check(void);

/* Test hook: scales the sqrt(5) constant inside the kernel. 1.0 restores normal behaviour. */
WARPAL_API void warpal_set_kernel_fault_scale(double scale);

#ifdef __cplusplus
}
#endif

#endif /* WARPAL_WARPAL_H */
