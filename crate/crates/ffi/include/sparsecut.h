#ifndef SPARSECUT_H
#define SPARSECUT_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes returned by every fallible call.
typedef enum ScStatus {
  SC_STATUS_OK = 0,
  SC_STATUS_NULL_POINTER = 1,
  SC_STATUS_INVALID_UTF8 = 2,
  // Malformed or inconsistent instance or decomposition.
  SC_STATUS_INVALID_INPUT = 3,
  SC_STATUS_INVALID_PARAMS = 4,
  // Input beyond a documented size cap, or a search budget was exhausted.
  SC_STATUS_TOO_LARGE = 5,
  // The LP or rounding stage failed.
  SC_STATUS_SOLVER_FAILURE = 6,
  // A check inside the library failed; this is a bug.
  SC_STATUS_INTERNAL = 7,
  SC_STATUS_PANIC = 8,
} ScStatus;

typedef enum ScMode {
  SC_MODE_NONE = 0,
  SC_MODE_BRIDGES = 1,
  SC_MODE_HIGHWAYS = 2,
  SC_MODE_SUPER_HIGHWAYS = 3,
} ScMode;

typedef enum ScMethod {
  SC_METHOD_GREEDY = 0,
  SC_METHOD_EXACT = 1,
} ScMethod;

// Opaque tree decomposition.
typedef struct ScDecomposition ScDecomposition;

// Opaque cut instance.
typedef struct ScInstance ScInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses an instance from JSON.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum ScStatus sc_instance_from_json(const char *json, struct ScInstance **out);

// Number of vertices, or 0 for a null handle.
//
// # Safety
// `inst` must be null or a live handle.
size_t sc_instance_vertex_count(const struct ScInstance *inst);

// # Safety
// `inst` must be null or a handle not yet freed.
void sc_instance_free(struct ScInstance *inst);

// Parses a decomposition from JSON.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum ScStatus sc_decomposition_from_json(const char *json, struct ScDecomposition **out);

// Min-fill decomposition of the instance's graph.
//
// # Safety
// `inst` must be a live handle and `out` a writable pointer.
enum ScStatus sc_decomposition_min_fill(const struct ScInstance *inst,
                                        struct ScDecomposition **out);

// Rebalanced copy of `dec` with logarithmic depth.
//
// # Safety
// `dec` must be a live handle and `out` a writable pointer.
enum ScStatus sc_decomposition_balance(const struct ScDecomposition *dec,
                                       struct ScDecomposition **out);

// Shallow transform of `dec`. `param` is lambda for bridges and highways and
// q for super-highways; it must be at least 1.
//
// # Safety
// `dec` must be a live handle and `out` a writable pointer.
enum ScStatus sc_decomposition_transform(const struct ScDecomposition *dec,
                                         enum ScMode mode,
                                         uint32_t param,
                                         struct ScDecomposition **out);

// Serialises `dec` as decomposition JSON.
//
// # Safety
// `dec` must be a live handle and `out` a writable pointer.
enum ScStatus sc_decomposition_to_json(const struct ScDecomposition *dec, char **out);

// Width (largest bag size minus one).
//
// # Safety
// `dec` must be a live handle and `out` a writable pointer.
enum ScStatus sc_decomposition_width(const struct ScDecomposition *dec, size_t *out);

// Depth of the rooted tree.
//
// # Safety
// `dec` must be a live handle and `out` a writable pointer.
enum ScStatus sc_decomposition_depth(const struct ScDecomposition *dec, size_t *out);

// # Safety
// `dec` must be null or a handle not yet freed.
void sc_decomposition_free(struct ScDecomposition *dec);

// Combinatorial diameter over all node pairs. `budget` caps the exact search.
//
// # Safety
// `dec` must be a live handle and `out` a writable pointer.
enum ScStatus sc_combinatorial_diameter(const struct ScDecomposition *dec,
                                        enum ScMethod method,
                                        size_t budget,
                                        size_t *out);

// Exhaustive sparsest cut, as JSON `{"phi", "cut", "enumerated"}`.
//
// # Safety
// `inst` must be a live handle and `out` a writable pointer.
enum ScStatus sc_oracle_brute_force(const struct ScInstance *inst, char **out);

// Full pipeline. `dec` may be null to use a min-fill decomposition. The result
// is JSON `{"alpha", "cut", "sparsity", "oracle_sparsity", "diameter_used"}`.
//
// # Safety
// `inst` must be a live handle, `dec` null or a live handle, and `out` a
// writable pointer.
enum ScStatus sc_solve(const struct ScInstance *inst,
                       const struct ScDecomposition *dec,
                       enum ScMode mode,
                       uint32_t param,
                       size_t trials,
                       uint64_t seed,
                       char **out);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void sc_string_free(char *s);

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *sc_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPARSECUT_H */
