/* C interface to the appdiff application profiling toolkit. */

#ifndef APPDIFF_H
#define APPDIFF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>

/**
 * Result codes.
 */
typedef enum AppdiffStatus {
  APPDIFF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  APPDIFF_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  APPDIFF_STATUS_INVALID_UTF8 = 2,
  APPDIFF_STATUS_INVALID_ARGUMENT = 3,
  APPDIFF_STATUS_IO = 4,
  APPDIFF_STATUS_CAPTURE = 5,
  /**
   * Text is not well-formed XML or not a snapshot file.
   */
  APPDIFF_STATUS_PARSE = 6,
  /**
   * A profile violates the APXML schema.
   */
  APPDIFF_STATUS_SCHEMA = 7,
  /**
   * An internal error was caught at the boundary.
   */
  APPDIFF_STATUS_PANIC = 8,
} AppdiffStatus;

typedef enum AppdiffDeltaState {
  APPDIFF_DELTA_STATE_NEW = 0,
  APPDIFF_DELTA_STATE_CHANGED = 1,
  APPDIFF_DELTA_STATE_MODIFIED = 2,
  APPDIFF_DELTA_STATE_DELETED = 3,
} AppdiffDeltaState;

typedef enum AppdiffFileFallback {
  APPDIFF_FILE_FALLBACK_NONE = 0,
  APPDIFF_FILE_FALLBACK_HASH_ONLY = 1,
  APPDIFF_FILE_FALLBACK_PATH_ONLY = 2,
} AppdiffFileFallback;

typedef struct AppdiffDiff AppdiffDiff;

typedef struct AppdiffProfile AppdiffProfile;

typedef struct AppdiffSnapshot AppdiffSnapshot;

typedef struct AppdiffTarget AppdiffTarget;

typedef struct AppdiffMatchPolicy {
  enum AppdiffFileFallback file_fallback;
  bool require_value_data;
  bool absence_matching;
} AppdiffMatchPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next `appdiff_*` call on the same thread.
 */
const char *appdiff_last_error(void);

/**
 * Library version as a static string.
 */
const char *appdiff_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from an `appdiff_*` out-parameter and not be freed twice.
 */
void appdiff_string_free(char *s);

/**
 * Captures `root` (and the serialized hive at `hive`, which may be null).
 * With `hash` set every file is hashed.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum AppdiffStatus appdiff_snapshot_capture(const char *root,
                                            const char *hive,
                                            bool case_sensitive,
                                            bool hash,
                                            struct AppdiffSnapshot **out);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum AppdiffStatus appdiff_snapshot_load(const char *path, struct AppdiffSnapshot **out);

/**
 * # Safety
 * `snapshot` must be a live handle; `path` must be NUL-terminated.
 */
enum AppdiffStatus appdiff_snapshot_save(const struct AppdiffSnapshot *snapshot, const char *path);

/**
 * Entry counts; any output pointer may be null.
 *
 * # Safety
 * `snapshot` must be a live handle; non-null outputs must be writable.
 */
enum AppdiffStatus appdiff_snapshot_counts(const struct AppdiffSnapshot *snapshot,
                                           size_t *files,
                                           size_t *keys,
                                           size_t *values);

/**
 * # Safety
 * `snapshot` must be null or a handle not yet freed.
 */
void appdiff_snapshot_free(struct AppdiffSnapshot *snapshot);

/**
 * Compares two snapshots.
 *
 * # Safety
 * Both snapshots must be live handles; `out` must be writable.
 */
enum AppdiffStatus appdiff_diff(const struct AppdiffSnapshot *before,
                                const struct AppdiffSnapshot *after,
                                struct AppdiffDiff **out);

/**
 * Number of deltas in a given state, or 0 for a null handle.
 *
 * # Safety
 * `diff` must be null or a live handle.
 */
size_t appdiff_diff_count(const struct AppdiffDiff *diff, enum AppdiffDeltaState state);

/**
 * Total number of deltas, or 0 for a null handle.
 *
 * # Safety
 * `diff` must be null or a live handle.
 */
size_t appdiff_diff_len(const struct AppdiffDiff *diff);

/**
 * One line per delta: `state<TAB>kind<TAB>path`.
 *
 * # Safety
 * `diff` must be a live handle; `out` must be writable.
 */
enum AppdiffStatus appdiff_diff_render(const struct AppdiffDiff *diff, char **out);

/**
 * # Safety
 * `diff` must be null or a handle not yet freed.
 */
void appdiff_diff_free(struct AppdiffDiff *diff);

/**
 * Starts an empty profile whose creator describes the running platform.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
enum AppdiffStatus appdiff_profile_new(const char *app_name,
                                       const char *app_version,
                                       struct AppdiffProfile **out);

/**
 * Appends the objects of `diff` under a new phase.
 *
 * # Safety
 * `profile` and `diff` must be live handles; `phase` must be
 * NUL-terminated. The profile must not be used concurrently.
 */
enum AppdiffStatus appdiff_profile_add_phase(struct AppdiffProfile *profile,
                                             const char *phase,
                                             const struct AppdiffDiff *diff);

/**
 * Emits canonical UTF-8 APXML text.
 *
 * # Safety
 * `profile` must be a live handle; `out` must be writable.
 */
enum AppdiffStatus appdiff_profile_emit(const struct AppdiffProfile *profile, char **out);

/**
 * Writes the profile to `path`, as UTF-16 with a byte order mark when
 * `utf16` is set.
 *
 * # Safety
 * `profile` must be a live handle; `path` must be NUL-terminated.
 */
enum AppdiffStatus appdiff_profile_save(const struct AppdiffProfile *profile,
                                        const char *path,
                                        bool utf16);

/**
 * Parses APXML text. In strict mode unknown phases and extension
 * elements are rejected.
 *
 * # Safety
 * `text_in` must be NUL-terminated; `out` must be writable.
 */
enum AppdiffStatus appdiff_profile_parse(const char *text_in,
                                         bool strict,
                                         struct AppdiffProfile **out);

/**
 * Reads a profile file in UTF-8 or UTF-16.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum AppdiffStatus appdiff_profile_load(const char *path, struct AppdiffProfile **out);

/**
 * Number of phases, or 0 for a null handle.
 *
 * # Safety
 * `profile` must be null or a live handle.
 */
size_t appdiff_profile_phase_count(const struct AppdiffProfile *profile);

/**
 * Number of objects across all phases, or 0 for a null handle.
 *
 * # Safety
 * `profile` must be null or a live handle.
 */
size_t appdiff_profile_object_count(const struct AppdiffProfile *profile);

/**
 * # Safety
 * `profile` must be null or a handle not yet freed.
 */
void appdiff_profile_free(struct AppdiffProfile *profile);

/**
 * Validates APXML text. Returns `Ok` or `Schema`; when `report` is not
 * null it receives one line per violation (`ok` when valid).
 *
 * # Safety
 * `text_in` must be NUL-terminated; `report` must be null or writable.
 */
enum AppdiffStatus appdiff_validate(const char *text_in, char **report);

/**
 * Captures and fully hashes a target tree for matching.
 *
 * # Safety
 * String arguments must be null (hive only) or NUL-terminated; `out`
 * must be writable.
 */
enum AppdiffStatus appdiff_target_build(const char *root,
                                        const char *hive,
                                        bool case_sensitive,
                                        struct AppdiffTarget **out);

/**
 * # Safety
 * `target` must be null or a handle not yet freed.
 */
void appdiff_target_free(struct AppdiffTarget *target);

/**
 * The default policy: path and digest for files, exact data for values,
 * deleted objects skipped.
 */
struct AppdiffMatchPolicy appdiff_match_policy_default(void);

/**
 * Matches a profile against a target and renders the report as text, or
 * as JSON when `json` is set. A null `policy` selects the default.
 *
 * # Safety
 * Handles must be live; `policy` must be null or valid; `report` must be
 * writable.
 */
enum AppdiffStatus appdiff_match(const struct AppdiffProfile *profile,
                                 const struct AppdiffTarget *target,
                                 const struct AppdiffMatchPolicy *policy,
                                 bool json,
                                 char **report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* APPDIFF_H */
