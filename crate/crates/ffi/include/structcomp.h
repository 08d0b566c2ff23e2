#ifndef STRUCTCOMP_H
#define STRUCTCOMP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum ScStatus {
  SC_STATUS_OK = 0,
  SC_STATUS_INVALID_ARGUMENT = 1,
  SC_STATUS_DIMENSION_MISMATCH = 2,
  SC_STATUS_NON_FINITE = 3,
  SC_STATUS_DEGENERATE = 4,
  SC_STATUS_DATA = 5,
  SC_STATUS_IO = 6,
  SC_STATUS_NULL_POINTER = 7,
  SC_STATUS_PANIC = 8,
} ScStatus;

// Undirected graph.
typedef struct ScGraph ScGraph;

// Dense row-major `f64` matrix.
typedef struct ScMatrix ScMatrix;

// Trained encoder weights.
typedef struct ScParams ScParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length without
// the terminator; 0 when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t sc_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *sc_version(void);

// Builds an undirected graph on `n` nodes from `m` edges `(src[i], dst[i])`.
// Duplicates collapse and self-loops are dropped.
//
// # Safety
// `src` and `dst` must point to `m` readable values; `out` must be writable.
enum ScStatus sc_graph_from_edges(size_t n,
                                  const uint32_t *src,
                                  const uint32_t *dst,
                                  size_t m,
                                  struct ScGraph **out);

// Reads a whitespace-separated edge list. `n` = 0 infers the node count.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum ScStatus sc_graph_read(const char *path, size_t n, struct ScGraph **out);

// Number of nodes, or 0 for a null handle.
//
// # Safety
// `g` must be null or a live graph handle.
size_t sc_graph_num_nodes(const struct ScGraph *g);

// Number of undirected edges, or 0 for a null handle.
//
// # Safety
// `g` must be null or a live graph handle.
size_t sc_graph_num_edges(const struct ScGraph *g);

// # Safety
// `g` must be null or a handle not yet freed.
void sc_graph_free(struct ScGraph *g);

// Copies `rows * cols` row-major values into a new matrix.
//
// # Safety
// `data` must point to `rows * cols` readable values; `out` must be writable.
enum ScStatus sc_matrix_new(size_t rows, size_t cols, const double *data, struct ScMatrix **out);

// Reads a matrix file (binary or CSV, chosen by extension).
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum ScStatus sc_matrix_read(const char *path, struct ScMatrix **out);

// Writes a matrix file (binary or CSV, chosen by extension).
//
// # Safety
// `m` must be a live handle; `path` a NUL-terminated string.
enum ScStatus sc_matrix_write(const struct ScMatrix *m, const char *path);

// Row count, or 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t sc_matrix_rows(const struct ScMatrix *m);

// Column count, or 0 for a null handle.
//
// # Safety
// `m` must be null or a live handle.
size_t sc_matrix_cols(const struct ScMatrix *m);

// Copies the row-major values into `buf`, which must hold exactly
// `rows * cols` values.
//
// # Safety
// `m` must be a live handle; `buf` must point to `len` writable values.
enum ScStatus sc_matrix_copy(const struct ScMatrix *m, double *buf, size_t len);

// # Safety
// `m` must be null or a handle not yet freed.
void sc_matrix_free(struct ScMatrix *m);

// Multilevel balanced partition into `k` clusters. Writes one cluster id
// per node into `assign`, which must hold exactly `n` values.
//
// # Safety
// `g` must be a live handle; `assign` must point to `len` writable values.
enum ScStatus sc_partition(const struct ScGraph *g,
                           size_t k,
                           double balance_eps,
                           uint64_t seed,
                           uint32_t *assign,
                           size_t len);

// Trains an encoder on the compressed graph. `config_json` holds training
// options as a JSON object; null or empty means all defaults.
//
// # Safety
// `g` and `x` must be live handles; `config_json` null or NUL-terminated;
// `out` writable.
enum ScStatus sc_train(const struct ScGraph *g,
                       const struct ScMatrix *x,
                       const char *config_json,
                       struct ScParams **out);

// Embeds every node of the full graph with trained weights.
//
// # Safety
// All input handles must be live; `out` writable.
enum ScStatus sc_infer(const struct ScGraph *g,
                       const struct ScMatrix *x,
                       const struct ScParams *params,
                       struct ScMatrix **out);

// Reads weights written by [`sc_params_write`] or the CLI.
//
// # Safety
// `path` must be NUL-terminated; `out` writable.
enum ScStatus sc_params_read(const char *path, struct ScParams **out);

// Writes weights plus their JSON sidecar.
//
// # Safety
// `p` must be a live handle; `path` NUL-terminated.
enum ScStatus sc_params_write(const struct ScParams *p, const char *path);

// Embedding width produced by the weights, or 0 for a null handle.
//
// # Safety
// `p` must be null or a live handle.
size_t sc_params_output_dim(const struct ScParams *p);

// # Safety
// `p` must be null or a handle not yet freed.
void sc_params_free(struct ScParams *p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRUCTCOMP_H */
