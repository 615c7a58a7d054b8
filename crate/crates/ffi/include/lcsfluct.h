#ifndef LCSFLUCT_H
#define LCSFLUCT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Insertion slots `{2..k}`.
#define LCSF_MODE_PAPER_INTERIOR 0

// Insertion slots `{1..k+1}`.
#define LCSF_MODE_FULL_UNIFORM 1

// Only identical letters share a column.
#define LCSF_PAIRING_IDENTICAL 0

// Any two letters share a column at the matrix score.
#define LCSF_PAIRING_ANY 1

typedef enum LcsfStatus {
  LCSF_STATUS_OK = 0,
  LCSF_STATUS_NULL_POINTER = 1,
  LCSF_STATUS_INVALID_ARGUMENT = 2,
  LCSF_STATUS_BUFFER_TOO_SMALL = 3,
  LCSF_STATUS_PANIC = 4,
} LcsfStatus;

// A drop-scheme string together with the random stream that grows it.
typedef struct LcsfDropState LcsfDropState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// NUL-terminated crate version; static storage.
const char *lcsf_version(void);

// Copies the calling thread's last error message, NUL-terminated and
// truncated to `cap` bytes, into `buf`. Returns the full length including
// the terminator; 1 means no error is recorded.
//
// # Safety
// `buf` must be null or valid for `cap` bytes.
size_t lcsf_last_error(char *buf, size_t cap);

// LCS length of two NUL-terminated strings over `0`, `1` and `a`.
//
// # Safety
// `a` and `b` must be NUL-terminated strings; `out` must be writable.
enum LcsfStatus lcsf_lcs(const char *a, const char *b, size_t *out);

// Global alignment score. `matrix` holds `s00, s01, s10, s11`; `pairing`
// is one of the `LCSF_PAIRING_*` constants.
//
// # Safety
// `a`, `b` NUL-terminated; `matrix` valid for 4 reads; `out` writable.
enum LcsfStatus lcsf_align(const char *a,
                           const char *b,
                           const int64_t *matrix,
                           int64_t gap,
                           uint32_t pairing,
                           int64_t *out);

// Probability that a fixed `l`-bit word is a subsequence of `k` fair bits.
//
// # Safety
// `out` must be writable.
enum LcsfStatus lcsf_containment_prob(size_t l, size_t k, double *out);

// Exact `E[LCS]` of two uniform `n`-bit strings, `n <= 12`, as
// `numerator / 2^log2_denominator`, plus its value as a double.
//
// # Safety
// All out-pointers must be writable.
enum LcsfStatus lcsf_exact_mean(uint32_t n,
                                uint64_t *numerator,
                                uint32_t *log2_denominator,
                                double *value);

// One draw of `(L_n, N^a)` through the drop scheme on stream `(seed, rep)`;
// identical to replication `rep` of the library and CLI.
//
// # Safety
// `ln` and `na` must be writable.
enum LcsfStatus lcsf_simulate_ln(size_t n,
                                 double p,
                                 uint64_t seed,
                                 uint64_t rep,
                                 uint32_t mode,
                                 size_t *ln,
                                 size_t *na);

// New `Z^2` on stream `(seed, stream)`. Release with [`lcsf_drop_free`].
//
// # Safety
// `out` must be writable.
enum LcsfStatus lcsf_drop_new(uint64_t seed,
                              uint64_t stream,
                              uint32_t mode,
                              struct LcsfDropState **out);

// Inserts one fresh bit. `position` (1-based) and `bit` may be null.
//
// # Safety
// `handle` must come from [`lcsf_drop_new`] and not be freed.
enum LcsfStatus lcsf_drop_step(struct LcsfDropState *handle, size_t *position, uint8_t *bit);

// Steps until the string has length `k` (no-op when already there).
//
// # Safety
// As for [`lcsf_drop_step`].
enum LcsfStatus lcsf_drop_grow_to(struct LcsfDropState *handle, size_t k);

// Current length `k`.
//
// # Safety
// `handle` valid; `out` writable.
enum LcsfStatus lcsf_drop_len(const struct LcsfDropState *handle, size_t *out);

// Writes the `k` bits of the current string as bytes 0/1 into `buf`.
// `len` receives `k` even when `cap` is too small.
//
// # Safety
// `handle` valid; `buf` valid for `cap` bytes (may be null when `cap` is 0);
// `len` writable.
enum LcsfStatus lcsf_drop_bits(const struct LcsfDropState *handle,
                               uint8_t *buf,
                               size_t cap,
                               size_t *len);

// Releases a handle; null is ignored.
//
// # Safety
// `handle` must be null or come from [`lcsf_drop_new`], freed at most once.
void lcsf_drop_free(struct LcsfDropState *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LCSFLUCT_H */
