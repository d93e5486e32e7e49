#ifndef KSLAB_H
#define KSLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KslabStatus {
  KSLAB_STATUS_OK = 0,
  KSLAB_STATUS_NULL_POINTER = 1,
  KSLAB_STATUS_INVALID_SEQUENCE = 2,
  KSLAB_STATUS_INVALID_GRAPH = 3,
  KSLAB_STATUS_NOT_SIMPLEX = 4,
  KSLAB_STATUS_NO_LEAF = 5,
  KSLAB_STATUS_DOMAIN = 6,
  KSLAB_STATUS_SOLVER = 7,
  KSLAB_STATUS_PARSE = 8,
  KSLAB_STATUS_IO = 9,
  KSLAB_STATUS_INTERNAL = 10,
} KslabStatus;

typedef enum KslabPolicy {
  KSLAB_POLICY_FIRST_INDEX = 0,
  KSLAB_POLICY_UNIFORM_RANDOM = 1,
} KslabPolicy;

typedef enum KslabRegime {
  KSLAB_REGIME_SUBCRITICAL = -1,
  KSLAB_REGIME_CRITICAL = 0,
  KSLAB_REGIME_SUPERCRITICAL = 1,
} KslabRegime;

typedef struct KslabCore KslabCore;

typedef struct KslabFluid KslabFluid;

typedef struct KslabGraph KslabGraph;

typedef struct KslabTrajectory KslabTrajectory;

/**
 * Chain state: step index and half-edge counts by unmatched degree.
 */
typedef struct KslabChainState {
  uint64_t k;
  uint64_t x;
  uint64_t y;
  uint64_t z;
} KslabChainState;

typedef struct KslabFluidState {
  double x;
  double y;
  double z;
} KslabFluidState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *kslab_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kslab_version(void);

/**
 * Samples a configuration-model graph with `d1`, `d2`, `d3` vertices of
 * degree 1, 2, 3.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KslabStatus kslab_graph_sample(uint64_t d1,
                                    uint64_t d2,
                                    uint64_t d3,
                                    uint64_t seed,
                                    struct KslabGraph **out);

/**
 * Builds a graph from `num_edges` vertex pairs stored flat in `edges`
 * (`2 * num_edges` entries). Loops are `u u`.
 *
 * # Safety
 * `edges` must point to `2 * num_edges` readable values (or be NULL when
 * `num_edges` is 0); `out` must be valid for writes.
 */
enum KslabStatus kslab_graph_from_edges(size_t num_vertices,
                                        const uint32_t *edges,
                                        size_t num_edges,
                                        struct KslabGraph **out);

/**
 * # Safety
 * `g` must be a live graph handle or NULL.
 */
size_t kslab_graph_num_vertices(const struct KslabGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle or NULL.
 */
size_t kslab_graph_num_half_edges(const struct KslabGraph *g);

/**
 * # Safety
 * `g` must come from this library and not be freed twice.
 */
void kslab_graph_free(struct KslabGraph *g);

/**
 * Karp–Sipser core of `g`. `seed` is used only by the uniform policy.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be valid for writes.
 */
enum KslabStatus kslab_core_compute(const struct KslabGraph *g,
                                    enum KslabPolicy policy,
                                    uint64_t seed,
                                    struct KslabCore **out);

/**
 * Core size in half-edges.
 *
 * # Safety
 * `c` must be a live core handle or NULL.
 */
uint64_t kslab_core_size(const struct KslabCore *c);

/**
 * # Safety
 * `c` must be a live core handle or NULL.
 */
uint64_t kslab_core_independent_set_size(const struct KslabCore *c);

/**
 * Writes the core vertex counts by degree 1, 2, 3 into `vertices[0..3]`.
 *
 * # Safety
 * `c` must be a live core handle; `vertices` must hold 3 writable values.
 */
enum KslabStatus kslab_core_histogram(const struct KslabCore *c, uint64_t *vertices);

/**
 * # Safety
 * `c` must come from this library and not be freed twice.
 */
void kslab_core_free(struct KslabCore *c);

/**
 * Runs the exploration chain on a fresh configuration model. `stride` 0
 * records endpoints only, 1 every state, K every K-th state.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KslabStatus kslab_explore(uint64_t d1,
                               uint64_t d2,
                               uint64_t d3,
                               uint64_t seed,
                               uint64_t stride,
                               struct KslabTrajectory **out);

/**
 * Number of recorded states.
 *
 * # Safety
 * `t` must be a live trajectory handle or NULL.
 */
size_t kslab_trajectory_len(const struct KslabTrajectory *t);

/**
 * # Safety
 * `t` must be a live trajectory handle; `state` must be valid for writes.
 */
enum KslabStatus kslab_trajectory_state(const struct KslabTrajectory *t,
                                        size_t index,
                                        struct KslabChainState *state);

/**
 * Stopping step θ and the degree-2 / degree-3 half-edge counts there.
 *
 * # Safety
 * `t` must be a live trajectory handle; the outputs must be valid for writes.
 */
enum KslabStatus kslab_trajectory_endpoints(const struct KslabTrajectory *t,
                                            uint64_t *theta,
                                            uint64_t *d2,
                                            uint64_t *d3);

/**
 * # Safety
 * `t` must come from this library and not be freed twice.
 */
void kslab_trajectory_free(struct KslabTrajectory *t);

/**
 * Θ and regime of half-edge proportions.
 *
 * # Safety
 * `theta` and `regime` must be valid for writes.
 */
enum KslabStatus kslab_phase(double p1,
                             double p2,
                             double p3,
                             double *theta,
                             enum KslabRegime *regime);

/**
 * Integrates the fluid limit from `(p1, p2, p3)` to extinction.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum KslabStatus kslab_fluid_integrate(double p1, double p2, double p3, struct KslabFluid **out);

/**
 * Extinction time, or NaN for a NULL handle.
 *
 * # Safety
 * `f` must be a live fluid handle or NULL.
 */
double kslab_fluid_t_ext(const struct KslabFluid *f);

/**
 * State at time `t` (clamped to `[0, t_ext]`).
 *
 * # Safety
 * `f` must be a live fluid handle; `state` must be valid for writes.
 */
enum KslabStatus kslab_fluid_eval(const struct KslabFluid *f,
                                  double t,
                                  struct KslabFluidState *state);

/**
 * # Safety
 * `f` must come from this library and not be freed twice.
 */
void kslab_fluid_free(struct KslabFluid *f);

/**
 * Fills `out[0..count]` with samples of ϑ, the first time a standard
 * Brownian motion hits the curve t ↦ t^-2.
 *
 * # Safety
 * `out` must hold `count` writable values.
 */
enum KslabStatus kslab_vartheta_sample(size_t count,
                                       uint64_t seed,
                                       double dt,
                                       double t0,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KSLAB_H */
