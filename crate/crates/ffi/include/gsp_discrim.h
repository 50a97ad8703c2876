#ifndef GSP_DISCRIM_H
#define GSP_DISCRIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum GspStatus {
  GSP_STATUS_OK = 0,
  GSP_STATUS_NULL_POINTER = 1,
  GSP_STATUS_INVALID_ARGUMENT = 2,
  GSP_STATUS_SHAPE_MISMATCH = 3,
  GSP_STATUS_NUMERICAL = 4,
  GSP_STATUS_PARSE = 5,
  GSP_STATUS_IO = 6,
  GSP_STATUS_INTERNAL = 7,
  GSP_STATUS_PANIC = 8,
} GspStatus;

// Pointwise activation of a model.
typedef enum GspActivation {
  GSP_ACTIVATION_IDENTITY = 0,
  GSP_ACTIVATION_TANH = 1,
  // Uses the `leaky_slope` argument.
  GSP_ACTIVATION_LEAKY_RECTIFIER = 2,
} GspActivation;

// Randomized check suites runnable through [`gsp_verify_suite`].
typedef enum GspSuite {
  GSP_SUITE_ZERO_HIGH_TANH = 0,
  GSP_SUITE_IDENTITY_AGREEMENT = 1,
  GSP_SUITE_POSITIVE_PAIRS = 2,
  GSP_SUITE_TANH_DISCRIMINATION = 3,
  GSP_SUITE_ZERO_HIGH_BANK_AGREEMENT = 4,
  GSP_SUITE_STRICT_INCLUSION = 5,
} GspSuite;

// Random geometric graph.
typedef struct GspGraph GspGraph;

// Filter bank, activation and readout.
typedef struct GspModel GspModel;

// Normalized Laplacian of a graph with its eigendecomposition.
typedef struct GspOperator GspOperator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL if the last call
// succeeded. Valid until the next call into the library on this thread.
const char *gsp_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *gsp_version(void);

// Releases a string returned by the library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void gsp_string_free(char *s);

// Random geometric kNN graph on `n` nodes.
//
// # Safety
// `out` must be a valid pointer.
enum GspStatus gsp_graph_generate(size_t n,
                                  size_t k_neighbors,
                                  uint64_t seed,
                                  struct GspGraph **out);

// Parses a graph from its text form.
//
// # Safety
// `s` must be a NUL-terminated string and `out` a valid pointer.
enum GspStatus gsp_graph_from_text(const char *s, struct GspGraph **out);

// Text form of a graph; release with [`gsp_string_free`].
//
// # Safety
// `g` must be a live graph handle and `out` a valid pointer.
enum GspStatus gsp_graph_to_text(const struct GspGraph *g, char **out);

// Number of nodes, or 0 for NULL.
//
// # Safety
// `g` must be NULL or a live graph handle.
size_t gsp_graph_node_count(const struct GspGraph *g);

// Edge weights as a row-major `n × n` matrix.
//
// # Safety
// `g` must be a live graph handle and `out` hold `len` values.
enum GspStatus gsp_graph_weights(const struct GspGraph *g, double *out, size_t len);

// Releases a graph. NULL is ignored.
//
// # Safety
// `g` must be NULL or a live graph handle.
void gsp_graph_free(struct GspGraph *g);

// Normalized Laplacian of `g` and its eigendecomposition.
//
// # Safety
// `g` must be a live graph handle and `out` a valid pointer.
enum GspStatus gsp_operator_from_graph(const struct GspGraph *g, struct GspOperator **out);

// Number of nodes, or 0 for NULL.
//
// # Safety
// `op` must be NULL or a live operator handle.
size_t gsp_operator_size(const struct GspOperator *op);

// Eigenvalues in ascending magnitude.
//
// # Safety
// `op` must be a live operator handle and `out` hold `len` values.
enum GspStatus gsp_operator_eigenvalues(const struct GspOperator *op, double *out, size_t len);

// Graph Fourier transform of `x`.
//
// # Safety
// `op` must be a live operator handle; `x` and `out` hold `len` values.
enum GspStatus gsp_operator_gft(const struct GspOperator *op,
                                const double *x,
                                double *out,
                                size_t len);

// Inverse graph Fourier transform of `xt`.
//
// # Safety
// `op` must be a live operator handle; `xt` and `out` hold `len` values.
enum GspStatus gsp_operator_igft(const struct GspOperator *op,
                                 const double *xt,
                                 double *out,
                                 size_t len);

// Applies the FIR filter `Σ taps[k] S^k` to `x`.
//
// # Safety
// `op` must be a live operator handle; `taps` holds `n_taps` values, `x`
// and `out` hold `len` values.
enum GspStatus gsp_operator_apply_fir(const struct GspOperator *op,
                                      const double *taps,
                                      size_t n_taps,
                                      const double *x,
                                      double *out,
                                      size_t len);

// Releases an operator. NULL is ignored.
//
// # Safety
// `op` must be NULL or a live operator handle.
void gsp_operator_free(struct GspOperator *op);

// Model with `features` FIR filters of `n_taps` taps (`taps` is row-major
// `features × n_taps`), an activation (a [`GspActivation`] value in `kind`) and
// `features` readout weights.
//
// # Safety
// Buffers must hold the stated number of values and `out` be valid.
enum GspStatus gsp_model_new(const double *taps,
                             size_t features,
                             size_t n_taps,
                             const double *readout,
                             int32_t kind,
                             double leaky_slope,
                             struct GspModel **out);

// Parses a model from its text form.
//
// # Safety
// `s` must be a NUL-terminated string and `out` a valid pointer.
enum GspStatus gsp_model_from_text(const char *s, struct GspModel **out);

// Text form of a model; release with [`gsp_string_free`].
//
// # Safety
// `m` must be a live model handle and `out` a valid pointer.
enum GspStatus gsp_model_to_text(const struct GspModel *m, char **out);

// Number of filters in the model, or 0 for NULL.
//
// # Safety
// `m` must be NULL or a live model handle.
size_t gsp_model_features(const struct GspModel *m);

// Integral Lipschitz constant of the model's bank over `[0, lam_max]`.
//
// # Safety
// `m` must be a live model handle and `out` a valid pointer.
enum GspStatus gsp_model_il_constant(const struct GspModel *m, double lam_max, double *out);

// Prediction `Σ_f c_f σ(H_f(S) x)` on the operator's graph.
//
// # Safety
// Handles must be live; `x` and `out` hold `len` values.
enum GspStatus gsp_model_predict(const struct GspModel *m,
                                 const struct GspOperator *op,
                                 const double *x,
                                 double *out,
                                 size_t len);

// Whether the pair `(x, y)` is nondiscriminable by the model's linear bank
// (`in_d_h`) and by bank plus activation (`in_d_phi`), using the `k`
// smallest-magnitude frequencies as the low band.
//
// # Safety
// Handles must be live; `x` and `y` hold `len` values; outputs are valid.
enum GspStatus gsp_model_pair_verdict(const struct GspModel *m,
                                      const struct GspOperator *op,
                                      size_t k,
                                      const double *x,
                                      const double *y,
                                      size_t len,
                                      double tol,
                                      bool *in_d_h,
                                      bool *in_d_phi);

// Releases a model. NULL is ignored.
//
// # Safety
// `m` must be NULL or a live model handle.
void gsp_model_free(struct GspModel *m);

// Runs one randomized check suite (a [`GspSuite`] value); `passed`
// receives the verdict.
//
// # Safety
// `passed` must be a valid pointer.
enum GspStatus gsp_verify_suite(int32_t suite, size_t trials, uint64_t seed, bool *passed);

// Finite-difference gradient check over `configs` random configurations.
//
// # Safety
// Outputs must be valid pointers.
enum GspStatus gsp_gradient_check(size_t configs,
                                  uint64_t seed,
                                  double *max_rel_error,
                                  bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSP_DISCRIM_H */
