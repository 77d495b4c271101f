#ifndef QHLAB_H
#define QHLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QhStatus {
  QH_STATUS_OK = 0,
  QH_STATUS_NULL_POINTER = 1,
  QH_STATUS_INVALID_UTF8 = 2,
  QH_STATUS_INVALID_JSON = 3,
  QH_STATUS_DIMENSION_MISMATCH = 4,
  QH_STATUS_POINT_NOT_IN_DOMAIN = 5,
  QH_STATUS_INVALID_DOMAIN = 6,
  QH_STATUS_INVALID_PARAMETER = 7,
  QH_STATUS_INVALID_CONSTANT = 8,
  QH_STATUS_GRAPH_DISCONNECTED = 9,
  QH_STATUS_MAP_INVALID = 10,
  QH_STATUS_BRANCH_VIOLATION = 11,
  QH_STATUS_INTERNAL = 98,
  QH_STATUS_PANIC = 99,
} QhStatus;

/**
 * Domain handle.
 */
typedef struct QhDomain QhDomain;

/**
 * Computed constants with the inputs they came from.
 */
typedef struct QhLedger QhLedger;

/**
 * Map handle; owns its source and image domains.
 */
typedef struct QhMapping QhMapping;

/**
 * Copies the calling thread's last error message into `buf`, NUL-terminated
 * and truncated to `len`. Returns the full message length in bytes.
 *
 * # Safety
 * `buf` is null or points to `len` writable bytes.
 */
size_t qh_last_error(char *buf, size_t len);

/**
 * Builds a domain from its JSON description, e.g.
 * `{"shape": {"kind": "ball", "center": [0, 0], "radius": 1}}`.
 *
 * # Safety
 * `spec_json` is a NUL-terminated string; `out` is writable.
 */
enum QhStatus qh_domain_from_json(const char *spec_json, struct QhDomain **out);

/**
 * # Safety
 * `domain` is null or came from `qh_domain_from_json` and is not used again.
 */
void qh_domain_free(struct QhDomain *domain);

/**
 * # Safety
 * `domain` is a live handle; `out` is writable.
 */
enum QhStatus qh_domain_dimension(const struct QhDomain *domain, size_t *out);

/**
 * # Safety
 * `domain` is a live handle; `z` holds `dim` doubles; `out` is writable.
 */
enum QhStatus qh_domain_contains(const struct QhDomain *domain,
                                 const double *z,
                                 size_t dim,
                                 bool *out);

/**
 * # Safety
 * `domain` is a live handle; `z` holds `dim` doubles; `out` is writable.
 */
enum QhStatus qh_boundary_distance(const struct QhDomain *domain,
                                   const double *z,
                                   size_t dim,
                                   double *out);

/**
 * Distance ratio metric `j`.
 *
 * # Safety
 * `domain` is a live handle; `z1`, `z2` hold `dim` doubles; `out` is writable.
 */
enum QhStatus qh_j_metric(const struct QhDomain *domain,
                          const double *z1,
                          const double *z2,
                          size_t dim,
                          double *out);

/**
 * Certified lower bound on the quasihyperbolic distance.
 *
 * # Safety
 * `domain` is a live handle; `z1`, `z2` hold `dim` doubles; `out` is writable.
 */
enum QhStatus qh_k_lower(const struct QhDomain *domain,
                         const double *z1,
                         const double *z2,
                         size_t dim,
                         double *out);

/**
 * Quasihyperbolic distance bracket from a seeded graph at `resolution`.
 *
 * # Safety
 * `domain` is a live handle; `z1`, `z2` hold `dim` doubles; `lower` and
 * `upper` are writable.
 */
enum QhStatus qh_k_between(const struct QhDomain *domain,
                           const double *z1,
                           const double *z2,
                           size_t dim,
                           double resolution,
                           size_t neighbors,
                           uint64_t seed,
                           double *lower,
                           double *upper);

/**
 * Validates a map on `source`, e.g. `{"kind": "radial_power", "exponent": 2}`.
 *
 * # Safety
 * `source` is a live handle; `kind_json` is a NUL-terminated string; `out`
 * is writable.
 */
enum QhStatus qh_mapping_new(const struct QhDomain *source,
                             const char *kind_json,
                             struct QhMapping **out);

/**
 * # Safety
 * `mapping` is null or came from `qh_mapping_new` and is not used again.
 */
void qh_mapping_free(struct QhMapping *mapping);

/**
 * Image domain of the map as a new domain handle.
 *
 * # Safety
 * `mapping` is a live handle; `out` is writable.
 */
enum QhStatus qh_mapping_target(const struct QhMapping *mapping, struct QhDomain **out);

/**
 * Writes `f(z)` into `out`, which holds `dim` doubles.
 *
 * # Safety
 * `mapping` is a live handle; `z` and `out` hold `dim` doubles.
 */
enum QhStatus qh_mapping_evaluate(const struct QhMapping *mapping,
                                  const double *z,
                                  size_t dim,
                                  double *out);

/**
 * Writes `f^-1(w)` into `out`, which holds `dim` doubles.
 *
 * # Safety
 * `mapping` is a live handle; `w` and `out` hold `dim` doubles.
 */
enum QhStatus qh_mapping_inverse(const struct QhMapping *mapping,
                                 const double *w,
                                 size_t dim,
                                 double *out);

/**
 * Computes the constants ledger from a JSON `LedgerInput`.
 *
 * # Safety
 * `input_json` is a NUL-terminated string; `out` is writable.
 */
enum QhStatus qh_ledger_from_json(const char *input_json, struct QhLedger **out);

/**
 * # Safety
 * `ledger` is null or came from `qh_ledger_from_json` and is not used again.
 */
void qh_ledger_free(struct QhLedger *ledger);

/**
 * Tower form of a named member (`b1`, `b2`, `b3`, `vartheta1`, `tau`, `b4`,
 * or `bound` for the uniformity bound). Plain members come back at level 0.
 * An infinite value has mantissa `INFINITY`.
 *
 * # Safety
 * `ledger` is a live handle; `name` is a NUL-terminated string; `level`
 * and `mantissa` are writable.
 */
enum QhStatus qh_ledger_member(const struct QhLedger *ledger,
                               const char *name,
                               uint32_t *level,
                               double *mantissa);

/**
 * Writes whether each of the three chain inequalities holds into `out[0..3]`.
 *
 * # Safety
 * `ledger` is a live handle; `out` holds 3 writable bools.
 */
enum QhStatus qh_ledger_verify(const struct QhLedger *ledger, bool *out);

/**
 * Three-way comparison of two tower values: -1, 0 or 1 in `out`.
 *
 * # Safety
 * `out` is writable.
 */
enum QhStatus qh_tower_compare(uint32_t level_a,
                               double mantissa_a,
                               uint32_t level_b,
                               double mantissa_b,
                               int32_t *out);

#endif  /* QHLAB_H */
