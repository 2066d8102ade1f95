#ifndef LEXSHIFT_H
#define LEXSHIFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum LexshiftStatus {
  LEXSHIFT_STATUS_OK = 0,
  LEXSHIFT_STATUS_NULL_POINTER = 1,
  LEXSHIFT_STATUS_INVALID_ARGUMENT = 2,
  LEXSHIFT_STATUS_VALIDATION = 3,
  LEXSHIFT_STATUS_DIMENSION_MISMATCH = 4,
  LEXSHIFT_STATUS_DOMAIN = 5,
  LEXSHIFT_STATUS_IO = 6,
  LEXSHIFT_STATUS_FORMAT = 7,
  LEXSHIFT_STATUS_CONFIG = 8,
  LEXSHIFT_STATUS_PANIC = 9,
} LexshiftStatus;

// A validated set of embedding rows (finite values, no zero rows).
typedef struct LexshiftSet LexshiftSet;

// An opened embedding store.
typedef struct LexshiftStore LexshiftStore;

// Directional average minimum distances.
typedef struct LexshiftDirectionalAmd {
  double a_to_b;
  double b_to_a;
} LexshiftDirectionalAmd;

// Hubness statistics averaged over both directions.
typedef struct LexshiftHubness {
  double dominant_share;
  double unused_share;
  double avg_load;
} LexshiftHubness;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL if it succeeded.
//
// The pointer stays valid until the next call into this library on the
// same thread.
const char *lexshift_last_error(void);

// Copies `rows × dim` row-major floats into a new set.
//
// # Safety
// `data` must point to `rows * dim` readable floats and `out` must be
// writable. The handle written to `out` must be released with
// [`lexshift_set_free`].
enum LexshiftStatus lexshift_set_new(const float *data,
                                     size_t rows,
                                     size_t dim,
                                     struct LexshiftSet **out);

// Releases a set. NULL is ignored.
//
// # Safety
// `set` must be NULL or a handle from this library that was not yet freed.
void lexshift_set_free(struct LexshiftSet *set);

// Number of rows in `set`, or 0 for NULL.
//
// # Safety
// `set` must be NULL or a live handle.
size_t lexshift_set_rows(const struct LexshiftSet *set);

// Dimension of `set`, or 0 for NULL.
//
// # Safety
// `set` must be NULL or a live handle.
size_t lexshift_set_dim(const struct LexshiftSet *set);

// Average pairwise cosine distance between two sets.
//
// # Safety
// `a` and `b` must be live handles and `out` writable.
enum LexshiftStatus lexshift_apd(const struct LexshiftSet *a,
                                 const struct LexshiftSet *b,
                                 double *out);

// Cosine distance between the centroids of the unit-length rows.
//
// # Safety
// `a` and `b` must be live handles and `out` writable.
enum LexshiftStatus lexshift_prt(const struct LexshiftSet *a,
                                 const struct LexshiftSet *b,
                                 double *out);

// Symmetric average minimum distance.
//
// # Safety
// `a` and `b` must be live handles and `out` writable.
enum LexshiftStatus lexshift_amd(const struct LexshiftSet *a,
                                 const struct LexshiftSet *b,
                                 double *out);

// Both directional average minimum distances.
//
// # Safety
// `a` and `b` must be live handles and `out` writable.
enum LexshiftStatus lexshift_amd_directional(const struct LexshiftSet *a,
                                             const struct LexshiftSet *b,
                                             struct LexshiftDirectionalAmd *out);

// Matched minimum distance with greedy one-to-one pairing.
//
// `seed` selects the equal-size subsample when the sets differ in size.
//
// # Safety
// `a` and `b` must be live handles and `out` writable.
enum LexshiftStatus lexshift_samd_greedy(const struct LexshiftSet *a,
                                         const struct LexshiftSet *b,
                                         uint64_t seed,
                                         double *out);

// Matched minimum distance with an optimal one-to-one pairing.
//
// # Safety
// `a` and `b` must be live handles and `out` writable.
enum LexshiftStatus lexshift_samd_hungarian(const struct LexshiftSet *a,
                                            const struct LexshiftSet *b,
                                            uint64_t seed,
                                            double *out);

// Nearest-neighbour hubness statistics between two sets.
//
// # Safety
// `a` and `b` must be live handles and `out` writable.
enum LexshiftStatus lexshift_hubness(const struct LexshiftSet *a,
                                     const struct LexshiftSet *b,
                                     struct LexshiftHubness *out);

// Spearman rank correlation of two length-`n` arrays (ties get mean ranks).
//
// # Safety
// `x` and `y` must point to `n` readable doubles and `out` must be writable.
enum LexshiftStatus lexshift_spearman(const double *x, const double *y, size_t n, double *out);

// Opens and validates the store rooted at `path`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable. The handle
// must be released with [`lexshift_store_free`].
enum LexshiftStatus lexshift_store_open(const char *path, struct LexshiftStore **out);

// Releases a store. NULL is ignored.
//
// # Safety
// `store` must be NULL or a handle from this library that was not yet freed.
void lexshift_store_free(struct LexshiftStore *store);

// Number of words in the store manifest, or 0 for NULL.
//
// # Safety
// `store` must be NULL or a live handle.
size_t lexshift_store_word_count(const struct LexshiftStore *store);

// Embedding dimension of the store, or 0 for NULL.
//
// # Safety
// `store` must be NULL or a live handle.
size_t lexshift_store_dimension(const struct LexshiftStore *store);

// Word at `index` in manifest order, or NULL when out of range.
//
// The string is owned by the store and lives as long as the handle.
//
// # Safety
// `store` must be NULL or a live handle.
const char *lexshift_store_word(const struct LexshiftStore *store, size_t index);

// Loads the usage set of `word` for `period` (1 or 2).
//
// # Safety
// `store` must be a live handle, `word` a NUL-terminated string and `out`
// writable. The returned set must be released with [`lexshift_set_free`].
enum LexshiftStatus lexshift_store_load(const struct LexshiftStore *store,
                                        const char *word,
                                        uint32_t period,
                                        struct LexshiftSet **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEXSHIFT_H */
