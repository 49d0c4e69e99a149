#ifndef LOSSLESS_H
#define LOSSLESS_H

/* Generated by cbindgen; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_ARGUMENT = 2,
  LS_STATUS_INVALID_DISTRIBUTION = 3,
  LS_STATUS_DIMENSION_MISMATCH = 4,
  LS_STATUS_SUPPORT_VIOLATION = 5,
  LS_STATUS_EMPTY_DATASET = 6,
  LS_STATUS_PARSE = 7,
  LS_STATUS_IO = 8,
  LS_STATUS_PANIC = 9,
} LsStatus;

/**
 * Records `(x, y, z)` with `d` x and `d_prime` z coordinates.
 */
typedef struct LsDataset LsDataset;

/**
 * Joint pmf of `(Y, X, Z)`.
 */
typedef struct LsJoint LsJoint;

/**
 * Square loss matrix.
 */
typedef struct LsLoss LsLoss;

/**
 * Deterministic map `T` on the alphabet of `X`.
 */
typedef struct LsMap LsMap;

/**
 * Finite-alphabet market with side information.
 */
typedef struct LsMarket LsMarket;

typedef struct LsTestOutcome {
  double l_n;
  double t_n;
  uint64_t m;
  uint64_t m_prime;
  uint64_t m_dprime;
  double h;
  bool reject;
  double type1_bound;
} LsTestOutcome;

typedef struct LsBoundReport {
  double delta_i;
  double bound;
  double excess;
  bool holds;
} LsBoundReport;

typedef struct LsGrowthReport {
  double w_star;
  double w_star_x;
  double w_star_z;
  double i_rx;
  double i_rz;
  double gap;
  double mi_gap;
  bool holds;
} LsGrowthReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *ls_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *ls_version(void);

/**
 * # Safety
 * `values` points to `len` doubles, row-major with `d + 1 + d_prime` per record.
 */
enum LsStatus ls_dataset_new(size_t d,
                             size_t d_prime,
                             const double *values,
                             size_t len,
                             struct LsDataset **out);

/**
 * Reads a CSV dataset with header `x1,..,xd,y,z1,..,zd'`.
 *
 * # Safety
 * `path` is a nul-terminated string.
 */
enum LsStatus ls_dataset_read_csv(const char *path, struct LsDataset **out);

/**
 * # Safety
 * `out` is writable.
 */
enum LsStatus ls_gen_h0(size_t n, uint64_t seed, struct LsDataset **out);

/**
 * # Safety
 * `out` is writable.
 */
enum LsStatus ls_gen_h1(size_t n, uint64_t seed, double theta, struct LsDataset **out);

/**
 * Number of records, or 0 for a null handle.
 *
 * # Safety
 * `data` is null or a live handle.
 */
size_t ls_dataset_len(const struct LsDataset *data);

/**
 * # Safety
 * `data` is null or a handle not yet freed.
 */
void ls_dataset_free(struct LsDataset *data);

/**
 * Runs the partitioning test. A positive `h` fixes the cell side; otherwise
 * `h = n^-delta`.
 *
 * # Safety
 * `data` is a live handle and `out` is writable.
 */
enum LsStatus ls_test_run(const struct LsDataset *data,
                          double c1,
                          double delta,
                          double h,
                          struct LsTestOutcome *out);

/**
 * `probs` holds `ny * nx * nz` entries indexed `(y * nx + x) * nz + z`.
 *
 * # Safety
 * `probs` points to `ny * nx * nz` doubles.
 */
enum LsStatus ls_joint_new(size_t ny,
                           size_t nx,
                           size_t nz,
                           const double *probs,
                           struct LsJoint **out);

/**
 * # Safety
 * `joint` is null or a handle not yet freed.
 */
void ls_joint_free(struct LsJoint *joint);

/**
 * `I(Y; X | Z)` in nats.
 *
 * # Safety
 * `joint` is a live handle and `out` is writable.
 */
enum LsStatus ls_joint_cmi(const struct LsJoint *joint, double *out);

/**
 * `I(Y; X) - I(Y; Z)` in nats.
 *
 * # Safety
 * `joint` is a live handle and `out` is writable.
 */
enum LsStatus ls_joint_information_gap(const struct LsJoint *joint, double *out);

/**
 * `table[x]` is `T(x)`, which must lie in `0..n_out`.
 *
 * # Safety
 * `table` points to `len` entries.
 */
enum LsStatus ls_map_new(const size_t *table, size_t len, size_t n_out, struct LsMap **out);

/**
 * # Safety
 * `map` is null or a handle not yet freed.
 */
void ls_map_free(struct LsMap *map);

/**
 * `cost` holds `k * k` entries, row `y` then column `y'`.
 *
 * # Safety
 * `cost` points to `k * k` doubles.
 */
enum LsStatus ls_loss_new(size_t k, const double *cost, struct LsLoss **out);

/**
 * # Safety
 * `out` is writable.
 */
enum LsStatus ls_loss_zero_one(size_t k, struct LsLoss **out);

/**
 * # Safety
 * `loss` is null or a handle not yet freed.
 */
void ls_loss_free(struct LsLoss *loss);

/**
 * Bayes risk given `T(X)` minus Bayes risk given `X`.
 *
 * # Safety
 * Handles are live and `out` is writable.
 */
enum LsStatus ls_excess_risk(const struct LsJoint *joint,
                             const struct LsMap *map,
                             const struct LsLoss *loss,
                             double *out);

/**
 * Excess risk against `||l||_inf / sqrt(2) * sqrt(dI)`.
 *
 * # Safety
 * Handles are live and `out` is writable.
 */
enum LsStatus ls_bound_bounded_loss(const struct LsJoint *joint,
                                    const struct LsMap *map,
                                    const struct LsLoss *loss,
                                    struct LsBoundReport *out);

/**
 * Parses `{"d_a", "returns", "joint", "map"}`.
 *
 * # Safety
 * `json` is a nul-terminated string.
 */
enum LsStatus ls_market_from_json(const char *json, struct LsMarket **out);

/**
 * The two-horse doubling race.
 *
 * # Safety
 * `out` is writable.
 */
enum LsStatus ls_market_horse_race(struct LsMarket **out);

/**
 * # Safety
 * `market` is null or a handle not yet freed.
 */
void ls_market_free(struct LsMarket *market);

/**
 * # Safety
 * `market` is a live handle and `out` is writable.
 */
enum LsStatus ls_growth_gap_bound(const struct LsMarket *market, struct LsGrowthReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOSSLESS_H */
