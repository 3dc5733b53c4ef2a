#ifndef SUPMART_H
#define SUPMART_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SupmartStatus {
  SUPMART_STATUS_OK = 0,
  SUPMART_STATUS_NULL_POINTER = 1,
  // Malformed input: shapes, partitions, measures, claims.
  SUPMART_STATUS_INVALID_INPUT = 2,
  // A well-posed problem with no solution (no witness, no representation, ...).
  SUPMART_STATUS_INFEASIBLE = 3,
  SUPMART_STATUS_BUFFER_TOO_SMALL = 4,
  SUPMART_STATUS_PANIC = 5,
} SupmartStatus;

// Opaque measure set, bound to a copy of the space it was built on.
typedef struct SupmartMeasureSet SupmartMeasureSet;

// Opaque filtered space.
typedef struct SupmartSpace SupmartSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next `supmart_*` call on the same thread.
const char *supmart_last_error(void);

// Builds a space from outcome labels: `labels[t * outcomes + w]` names the
// cell of `w` at time `t`, for `t = 0..=horizon`.
//
// # Safety
// `labels` must point to `(horizon + 1) * outcomes` values; `out` must be writable.
enum SupmartStatus supmart_space_new(const size_t *labels,
                                     size_t outcomes,
                                     size_t horizon,
                                     struct SupmartSpace **out);

// # Safety
// `space` must come from [`supmart_space_new`] and not be used afterwards.
void supmart_space_free(struct SupmartSpace *space);

// # Safety
// `space` must be a live handle or null.
size_t supmart_space_outcomes(const struct SupmartSpace *space);

// # Safety
// `space` must be a live handle or null.
size_t supmart_space_horizon(const struct SupmartSpace *space);

// Convex hull of `count` strictly positive generators, `probabilities[k * outcomes + w]`.
//
// # Safety
// `probabilities` must hold `count * outcomes` values; `out` must be writable.
enum SupmartStatus supmart_hull_new(const struct SupmartSpace *space,
                                    const double *probabilities,
                                    size_t count,
                                    struct SupmartMeasureSet **out);

// Equivalent martingale measures of `assets` price processes,
// `values[(j * (horizon + 1) + t) * outcomes + w]`.
//
// # Safety
// `values` must hold `assets * (horizon + 1) * outcomes` values; `out` must be writable.
enum SupmartStatus supmart_martingale_set_new(const struct SupmartSpace *space,
                                              const double *values,
                                              size_t assets,
                                              struct SupmartMeasureSet **out);

// # Safety
// `set` must come from a `supmart_*_new` constructor and not be used afterwards.
void supmart_set_free(struct SupmartMeasureSet *set);

// Number of extreme points (generators or polytope vertices).
//
// # Safety
// `set` must be a live handle or null.
size_t supmart_set_extreme_points(const struct SupmartMeasureSet *set);

// `sup_Q E^Q claim` over the set.
//
// # Safety
// `claim` must hold one value per outcome; `out` must be writable.
enum SupmartStatus supmart_sup_expectation(const struct SupmartMeasureSet *set,
                                           const double *claim,
                                           size_t len,
                                           double *out);

// Fair price over all unit claims.
//
// # Safety
// `claim` must hold one value per outcome; `out` must be writable.
enum SupmartStatus supmart_fair_price_full(const struct SupmartMeasureSet *set,
                                           const double *claim,
                                           size_t len,
                                           double *out);

// Fair price over nonnegative combinations of `count` unit claims,
// `unit_claims[i * len + w]`.
//
// # Safety
// `unit_claims` must hold `count * len` values, `claim` `len`; `out` must be writable.
enum SupmartStatus supmart_fair_price_generated(const struct SupmartMeasureSet *set,
                                                const double *unit_claims,
                                                size_t count,
                                                const double *claim,
                                                size_t len,
                                                double *out);

// # Safety
// `out` must be writable.
enum SupmartStatus supmart_euro_call_price(double s0, double d2, double strike, double *out);

// # Safety
// `out` must be writable.
enum SupmartStatus supmart_euro_put_price(double d1, double strike, double *out);

// Superhedging strategy of a claim on a martingale set. With
// `unit_claims` null the full price is used, otherwise the generated one.
//
// Writes the price, the cash holdings (`horizon * outcomes` values) and
// the risky holdings (`horizon * outcomes * assets` values).
//
// # Safety
// Buffers must be valid for the stated lengths; `price` must be writable.
enum SupmartStatus supmart_superhedge(const struct SupmartMeasureSet *set,
                                      const double *claim,
                                      size_t len,
                                      const double *unit_claims,
                                      size_t count,
                                      double *price,
                                      double *cash,
                                      size_t cash_len,
                                      double *risky,
                                      size_t risky_len);

// Decomposes a super-martingale `f = M - g` by the local-regularity
// witness. `values`, `martingale` and `compensator` hold
// `(horizon + 1) * outcomes` values each.
//
// # Safety
// Buffers must be valid for the stated lengths.
enum SupmartStatus supmart_decompose(const struct SupmartMeasureSet *set,
                                     const double *values,
                                     size_t len,
                                     double *martingale,
                                     double *compensator);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUPMART_H */
