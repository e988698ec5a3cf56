/* C interface to the multi-index SGD laboratory.
 *
 * All entry points return a milab_status; MILAB_OK is zero. On failure the
 * thread-local message from milab_last_error() describes what went wrong.
 * Strings returned through char** are heap-allocated and must be released
 * with milab_string_free().
 */

#ifndef MILAB_H
#define MILAB_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum milab_status {
  MILAB_OK = 0,
  MILAB_ERR_NONFINITE = 1,
  MILAB_ERR_DIMENSION_MISMATCH = 2,
  MILAB_ERR_DEGREE_TOO_LARGE = 3,
  MILAB_ERR_ALL_COEFFS_VANISH = 4,
  MILAB_ERR_ASSUMPTION_VIOLATED = 5,
  MILAB_ERR_DEGENERATE_GRADIENT = 6,
  MILAB_ERR_PARSE = 7,
  MILAB_ERR_VALIDATION = 8,
  MILAB_ERR_INSUFFICIENT_DATA = 9,
  MILAB_ERR_IO = 10,
  MILAB_ERR_INVALID_ARGUMENT = 11,
  MILAB_ERR_INTERNAL = 12
} milab_status;

typedef struct milab_config milab_config; /* opaque */

typedef struct milab_run_options {
  int jobs;                 /* parallel trajectory workers; <= 1 = serial */
  const char* out_dir;      /* override the config's output_dir; NULL = keep */
  int64_t seed_offset;      /* added to every seed in the grid */
  int write_files;          /* 0 = compute only, skip CSV/manifest output */
} milab_run_options;

const char* milab_version(void);

/* Message for the most recent failure on this thread. */
const char* milab_last_error(void);

void milab_string_free(char* s);

/* Load + validate a JSON experiment config. */
milab_status milab_config_load(const char* path, milab_config** out);
milab_status milab_config_parse(const char* json_text, milab_config** out);
void milab_config_free(milab_config* cfg);

/* Canonical serialized form and its SHA-256 (the manifest hash). */
milab_status milab_config_canonical_json(const milab_config* cfg, char** out_json);
milab_status milab_config_sha256(const milab_config* cfg, char** out_hex);

/* Mode of the config as a string (trajectory, sweep, escape, ...). */
milab_status milab_config_mode(const milab_config* cfg, char** out_mode);

/* Run the experiment described by the config: expands the grid, writes one
 * CSV per run plus manifest.json and the mode summary, and returns a JSON
 * report {out_dir, manifest, summary}. */
milab_status milab_run(const milab_config* cfg, const milab_run_options* opts,
                       char** out_report_json);

/* Hermite coefficient dump for a named 1-D function:
 * {"kind":..., "scale":..., "coeffs":[...], "k_star":...}.
 * kind is one of identity|hermite:<k>|sin|tanh|gauss_sq|relu|softplus|gelu. */
milab_status milab_hermite_coeffs(const char* kind, double scale, int kmax,
                                  char** out_json);

/* Oracle and invariant suite. Returns the number of failed checks through
 * out_failures (0 = healthy); the JSON lists every check in deterministic
 * order. fast != 0 skips the Monte-Carlo heavy checks. */
milab_status milab_selfcheck(int fast, char** out_json, int* out_failures);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MILAB_H */
