#ifndef RAMGAPS_H
#define RAMGAPS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RamgapsStatus {
  RAMGAPS_STATUS_OK = 0,
  RAMGAPS_STATUS_NULL_POINTER = 1,
  RAMGAPS_STATUS_INVALID_MODEL = 2,
  RAMGAPS_STATUS_INVALID_ARGUMENT = 3,
  RAMGAPS_STATUS_INFINITE_MU_LOG = 4,
  RAMGAPS_STATUS_CAP_EXCEEDED = 5,
  RAMGAPS_STATUS_INSUFFICIENT_HORIZON = 6,
  RAMGAPS_STATUS_DEGENERATE = 7,
  RAMGAPS_STATUS_INTERNAL = 8,
} RamgapsStatus;

/**
 * Opaque limit law.
 */
typedef struct RamgapsLaw RamgapsLaw;

/**
 * Opaque hazard model.
 */
typedef struct RamgapsModel RamgapsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *ramgaps_last_error(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ramgaps_string_free(char *s);

/**
 * Parses "gem:θ", "beta:a,b", "atoms:h1,h2/w1,w2" or a JSON object.
 *
 * # Safety
 * `spec` must be a nul-terminated string and `out` a valid pointer.
 */
enum RamgapsStatus ramgaps_model_parse(const char *spec, struct RamgapsModel **out);

/**
 * # Safety
 * `model` must come from `ramgaps_model_parse` or be NULL.
 */
void ramgaps_model_free(struct RamgapsModel *model);

/**
 * μ_{i,j} = E H^i (1-H)^j for j >= -1; infinity when it diverges.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RamgapsStatus ramgaps_model_mu(const struct RamgapsModel *model,
                                    uint64_t i,
                                    int64_t j,
                                    double *out);

/**
 * E[-log(1-H)], possibly infinite.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RamgapsStatus ramgaps_model_mu_log(const struct RamgapsModel *model, double *out);

/**
 * Probability of the count vector counts[0..len] in a sample of size sum(counts).
 *
 * # Safety
 * `counts` must point to `len` values.
 */
enum RamgapsStatus ramgaps_exact_config_probability(const struct RamgapsModel *model,
                                                    const uint64_t *counts,
                                                    size_t len,
                                                    double *out);

/**
 * g_{m:n}, the expected visits of the tail-count chain to m.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RamgapsStatus ramgaps_finite_potential(const struct RamgapsModel *model,
                                            uint64_t n,
                                            uint64_t m,
                                            double *out);

/**
 * JSON array of `replicates` sampled configurations of size n.
 *
 * # Safety
 * Pointers must be valid; free the result with `ramgaps_string_free`.
 */
enum RamgapsStatus ramgaps_simulate_json(const struct RamgapsModel *model,
                                         uint64_t n,
                                         uint64_t replicates,
                                         uint64_t seed,
                                         char **out);

/**
 * Fails with `RAMGAPS_STATUS_INFINITE_MU_LOG` when the limit degenerates.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RamgapsStatus ramgaps_law_new(const struct RamgapsModel *model, struct RamgapsLaw **out);

/**
 * # Safety
 * `law` must come from `ramgaps_law_new` or be NULL.
 */
void ramgaps_law_free(struct RamgapsLaw *law);

/**
 * P(Q_0 = m).
 *
 * # Safety
 * Pointers must be valid.
 */
enum RamgapsStatus ramgaps_law_entrance_pmf(const struct RamgapsLaw *law, uint64_t m, double *out);

/**
 * P(Q_{k+1} = n | Q_k = m).
 *
 * # Safety
 * Pointers must be valid.
 */
enum RamgapsStatus ramgaps_law_transition_pmf(const struct RamgapsLaw *law,
                                              uint64_t m,
                                              uint64_t n,
                                              double *out);

/**
 * P(G_j >= k) for j >= 1.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RamgapsStatus ramgaps_law_gap_tail(const struct RamgapsLaw *law,
                                        uint64_t j,
                                        uint64_t k,
                                        double *out);

/**
 * E Q_j, possibly infinite.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RamgapsStatus ramgaps_law_mean_q(const struct RamgapsLaw *law, uint64_t j, double *out);

/**
 * P(N_0 = counts[0], ..., N_k = counts[k]) with k = len - 1.
 *
 * # Safety
 * `counts` must point to `len` values.
 */
enum RamgapsStatus ramgaps_law_fdd(const struct RamgapsLaw *law,
                                   const uint64_t *counts,
                                   size_t len,
                                   double *out);

/**
 * Runs a verification suite ("gem-gaps", ..., "all") and returns its JSON
 * manifest; `*pass` is 1 when every check passed.
 *
 * # Safety
 * Pointers must be valid; free the result with `ramgaps_string_free`.
 */
enum RamgapsStatus ramgaps_verify_json(const char *suite,
                                       uint64_t seed,
                                       size_t workers,
                                       char **out,
                                       int *pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAMGAPS_H */
