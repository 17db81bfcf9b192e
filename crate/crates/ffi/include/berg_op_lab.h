#ifndef BERG_OP_LAB_H
#define BERG_OP_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum BolStatus {
  BOL_STATUS_OK = 0,
  /*
   A required pointer was null or a string was not UTF-8.
   */
  BOL_STATUS_NULL_OR_INVALID_ARGUMENT = 1,
  /*
   The run configuration failed to parse or validate.
   */
  BOL_STATUS_CONFIG = 2,
  /*
   A parameter was out of range (point outside the disk, bad exponent, ...).
   */
  BOL_STATUS_INVALID_PARAMETER = 3,
  /*
   A computation failed or produced non-finite values.
   */
  BOL_STATUS_NUMERICAL = 4,
  /*
   Reading or writing a file failed.
   */
  BOL_STATUS_IO = 5,
  /*
   The requested quantity or verdict is not in the report.
   */
  BOL_STATUS_NOT_FOUND = 6,
  /*
   A Rust panic was caught at the boundary.
   */
  BOL_STATUS_PANIC = 7,
} BolStatus;

/*
 Parsed and validated run configuration.
 */
typedef struct BolConfig BolConfig;

/*
 Finished run report.
 */
typedef struct BolReport BolReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failing call on this thread, or null. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *bol_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *bol_version(void);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must be null or a pointer returned through a `char **` out-parameter of this library.
 */
void bol_string_free(char *s);

/*
 Parses and validates a TOML run configuration. Any rejection is reported as
 [`BolStatus::Config`].

 # Safety
 `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BolStatus bol_config_parse(const char *toml, struct BolConfig **out);

/*
 Releases a config. Null is ignored.

 # Safety
 `cfg` must be null or a handle from [`bol_config_parse`] not yet freed.
 */
void bol_config_free(struct BolConfig *cfg);

/*
 Replaces the seed of randomized checks.

 # Safety
 `cfg` must be a live config handle.
 */
enum BolStatus bol_config_set_seed(struct BolConfig *cfg, uint64_t seed);

/*
 The config with all defaults filled in, as TOML.

 # Safety
 `cfg` must be a live config handle and `out` a valid pointer.
 */
enum BolStatus bol_config_emit(const struct BolConfig *cfg, char **out);

/*
 Runs the config's task. No report file is written.

 # Safety
 `cfg` must be a live config handle and `out` a valid pointer.
 */
enum BolStatus bol_run(const struct BolConfig *cfg, struct BolReport **out);

/*
 Parses `toml`, runs it and returns the JSON report. `exit_code` receives the
 command-line exit status of the run (0 clean, 2 some verdict indeterminate).

 # Safety
 `toml` must be a NUL-terminated string; `json` and `exit_code` valid pointers.
 */
enum BolStatus bol_run_config(const char *toml, char **json, int32_t *exit_code);

/*
 Releases a report. Null is ignored.

 # Safety
 `report` must be null or a handle from [`bol_run`] not yet freed.
 */
void bol_report_free(struct BolReport *report);

/*
 Serializes a report as JSON.

 # Safety
 `report` must be a live report handle and `out` a valid pointer.
 */
enum BolStatus bol_report_json(const struct BolReport *report, char **out);

/*
 Serializes a report as CSV.

 # Safety
 `report` must be a live report handle and `out` a valid pointer.
 */
enum BolStatus bol_report_csv(const struct BolReport *report, char **out);

/*
 Looks up a named quantity.

 # Safety
 `report` must be a live report handle, `name` a NUL-terminated string and `out` a valid pointer.
 */
enum BolStatus bol_report_quantity(const struct BolReport *report, const char *name, double *out);

/*
 Looks up a named verdict.

 # Safety
 `report` must be a live report handle, `name` a NUL-terminated string and `out` a valid pointer.
 */
enum BolStatus bol_report_verdict(const struct BolReport *report, const char *name, char **out);

/*
 1 if every cross-check of the report agrees, 0 otherwise, -1 for a null handle.

 # Safety
 `report` must be null or a live report handle.
 */
int32_t bol_report_coherent(const struct BolReport *report);

/*
 Command-line exit status of the report: 0 if every verdict is definite, 2
 otherwise, -1 for a null handle.

 # Safety
 `report` must be null or a live report handle.
 */
int32_t bol_report_exit_code(const struct BolReport *report);

/*
 Pseudo-hyperbolic distance between two points of the unit disk.

 # Safety
 `out` must be a valid pointer.
 */
enum BolStatus bol_pseudo_distance(double z_re, double z_im, double w_re, double w_im, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERG_OP_LAB_H */
