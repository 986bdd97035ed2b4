#ifndef NCLAB_H
#define NCLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NclabFamily {
  NCLAB_FAMILY_TENSOR_DYADIC = 0,
  NCLAB_FAMILY_BLOCK_PINCHING = 1,
  NCLAB_FAMILY_COMMUTATIVE_PARTITION = 2,
} NclabFamily;

typedef enum NclabHardyKind {
  NCLAB_HARDY_KIND_CONDITIONED_COLUMN = 0,
  NCLAB_HARDY_KIND_CONDITIONED_ROW = 1,
  NCLAB_HARDY_KIND_DIAGONAL = 2,
  NCLAB_HARDY_KIND_COLUMN = 3,
  NCLAB_HARDY_KIND_ROW = 4,
} NclabHardyKind;

typedef enum NclabMethod {
  NCLAB_METHOD_ALGEBRAIC = 0,
  NCLAB_METHOD_WEAK_ATOMIC = 1,
  NCLAB_METHOD_CRUDE_SLICE = 2,
  NCLAB_METHOD_P_INFTY = 3,
} NclabMethod;

typedef enum NclabStatus {
  NCLAB_STATUS_OK = 0,
  NCLAB_STATUS_NULL_POINTER = 1,
  NCLAB_STATUS_INVALID_ARGUMENT = 2,
  NCLAB_STATUS_INVALID_OPERATOR = 3,
  NCLAB_STATUS_INVALID_FILTRATION = 4,
  NCLAB_STATUS_INVALID_MARTINGALE = 5,
  NCLAB_STATUS_INVALID_ATOM = 6,
  NCLAB_STATUS_UNKNOWN_SUITE = 7,
  NCLAB_STATUS_SERIALIZATION = 8,
  NCLAB_STATUS_PANIC = 9,
} NclabStatus;

typedef struct NclabDecomposition NclabDecomposition;

typedef struct NclabFiltration NclabFiltration;

typedef struct NclabMartingale NclabMartingale;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *nclab_last_error_message(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` is NULL or a string returned by this library and not yet freed.
 */
void nclab_string_free(char *s);

/**
 * The standard filtration of `family` at depth `levels` (`d = 2^levels`).
 *
 * # Safety
 * `out` is a valid pointer.
 */
enum NclabStatus nclab_filtration_new(enum NclabFamily family,
                                      uintptr_t levels,
                                      struct NclabFiltration **out);

/**
 * # Safety
 * `f` is a valid filtration handle.
 */
uintptr_t nclab_filtration_dim(const struct NclabFiltration *f);

/**
 * # Safety
 * `f` is a valid filtration handle.
 */
uintptr_t nclab_filtration_levels(const struct NclabFiltration *f);

/**
 * # Safety
 * `f` is NULL or a handle from [`nclab_filtration_new`] not yet freed.
 */
void nclab_filtration_free(struct NclabFiltration *f);

/**
 * The martingale of `x ∈ M_N` given as row-major `dim * dim` arrays; `im`
 * may be NULL for a real operator.
 *
 * # Safety
 * `f` is a valid handle, `re` (and `im` unless NULL) point to `dim * dim`
 * doubles, and `out` is a valid pointer.
 */
enum NclabStatus nclab_martingale_from_operator(const struct NclabFiltration *f,
                                                const double *re,
                                                const double *im,
                                                uintptr_t dim,
                                                struct NclabMartingale **out);

/**
 * Parses and validates an instance JSON.
 *
 * # Safety
 * `json` is a NUL-terminated string and `out` a valid pointer.
 */
enum NclabStatus nclab_martingale_from_json(const char *json, struct NclabMartingale **out);

/**
 * Instance JSON of a martingale; free with [`nclab_string_free`].
 *
 * # Safety
 * `m` is a valid handle and `out` a valid pointer.
 */
enum NclabStatus nclab_martingale_to_json(const struct NclabMartingale *m, char **out);

/**
 * # Safety
 * `m` is a valid handle.
 */
uintptr_t nclab_martingale_levels(const struct NclabMartingale *m);

/**
 * # Safety
 * `m` is NULL or a martingale handle not yet freed.
 */
void nclab_martingale_free(struct NclabMartingale *m);

/**
 * Hardy (quasi)norm of kind `kind`; `p` may be `INFINITY`.
 *
 * # Safety
 * `m` is a valid handle and `out` a valid pointer.
 */
enum NclabStatus nclab_hardy_norm(const struct NclabMartingale *m,
                                  enum NclabHardyKind kind,
                                  double p,
                                  double *out);

/**
 * `||x||_p` of the terminal value.
 *
 * # Safety
 * `m` is a valid handle and `out` a valid pointer.
 */
enum NclabStatus nclab_lp_norm(const struct NclabMartingale *m, double p, double *out);

/**
 * Decomposes the terminal value with the algebraic or weak method.
 *
 * # Safety
 * `m` is a valid handle and `out` a valid pointer.
 */
enum NclabStatus nclab_decompose(const struct NclabMartingale *m,
                                 enum NclabMethod kind,
                                 double p,
                                 double beta,
                                 struct NclabDecomposition **out);

/**
 * Decomposes an instance JSON with any method; atom methods read the
 * instance's `atom` object. `lambda <= 0`, `depth == 0` and `tol <= 0`
 * select the defaults.
 *
 * # Safety
 * `json` is a NUL-terminated string and `out` a valid pointer.
 */
enum NclabStatus nclab_decompose_json(const char *json,
                                      enum NclabMethod kind,
                                      double p,
                                      double beta,
                                      double lambda,
                                      uintptr_t depth,
                                      double tol,
                                      struct NclabDecomposition **out);

/**
 * The coefficient bound `lhs <= rhs` of a decomposition.
 *
 * # Safety
 * `d` is a valid handle; `lhs` and `rhs` are valid pointers.
 */
enum NclabStatus nclab_decomposition_bound(const struct NclabDecomposition *d,
                                           double *lhs,
                                           double *rhs);

/**
 * # Safety
 * `d` is a valid handle.
 */
uintptr_t nclab_decomposition_coefficient_count(const struct NclabDecomposition *d);

/**
 * Copies up to `len` coefficients into `buf`; returns the number copied.
 *
 * # Safety
 * `d` is a valid handle and `buf` points to `len` writable doubles.
 */
uintptr_t nclab_decomposition_coefficients(const struct NclabDecomposition *d,
                                           double *buf,
                                           uintptr_t len);

/**
 * `||input - x_1 - sum c_k a_k - residual||_2`.
 *
 * # Safety
 * `d` is a valid handle.
 */
double nclab_decomposition_reconstruction_error(const struct NclabDecomposition *d);

/**
 * Whether every atom certificate is valid.
 *
 * # Safety
 * `d` is a valid handle.
 */
bool nclab_decomposition_certificates_valid(const struct NclabDecomposition *d);

/**
 * The decomposition JSON written by `nclab decompose`; free with
 * [`nclab_string_free`].
 *
 * # Safety
 * `d` is a valid handle and `out` a valid pointer.
 */
enum NclabStatus nclab_decomposition_to_json(const struct NclabDecomposition *d, char **out);

/**
 * # Safety
 * `d` is NULL or a decomposition handle not yet freed.
 */
void nclab_decomposition_free(struct NclabDecomposition *d);

/**
 * Runs a suite (or `"all"`) on one family, or on all when `family` is
 * NULL; `trials == 0` uses the suite defaults. Counts rows by outcome.
 *
 * # Safety
 * `suite` is a NUL-terminated string, `family` NULL or one, and `passed`,
 * `failed` valid pointers.
 */
enum NclabStatus nclab_verify_suite(const char *suite,
                                    const char *family,
                                    uintptr_t trials,
                                    uint64_t seed,
                                    uintptr_t *passed,
                                    uintptr_t *failed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NCLAB_H */
