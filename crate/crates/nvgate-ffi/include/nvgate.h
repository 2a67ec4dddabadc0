#ifndef NVGATE_H
#define NVGATE_H

/* Generated by cbindgen from nvgate-ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Scenario selector for `nvg_run`.
typedef enum NvgScenario {
  NVG_SCENARIO_SPECTRUM = 0,
  NVG_SCENARIO_CALIBRATE = 1,
  NVG_SCENARIO_SIMULATE = 2,
  NVG_SCENARIO_SCAN_ERRORS = 3,
  NVG_SCENARIO_SCAN_INTRUDER = 4,
  NVG_SCENARIO_COMPARE = 5,
  NVG_SCENARIO_DIAGNOSE_ERRORS = 6,
} NvgScenario;

// Status codes. Zero is success.
typedef enum NvgStatus {
  NVG_STATUS_OK = 0,
  NVG_STATUS_NULL_POINTER = 1,
  NVG_STATUS_INVALID_UTF8 = 2,
  NVG_STATUS_INVALID_ARGUMENT = 3,
  NVG_STATUS_CONFIG = 4,
  NVG_STATUS_CALIBRATION_FAILURE = 5,
  NVG_STATUS_NO_SOLUTION = 6,
  NVG_STATUS_NUMERICAL_FAILURE = 7,
  NVG_STATUS_CONSTRUCTION_FAILURE = 8,
  NVG_STATUS_INTERNAL = 9,
  NVG_STATUS_PANIC = 10,
} NvgStatus;

// Parsed and validated scenario file.
typedef struct NvgConfig NvgConfig;

// Calibrated direct gate.
typedef struct NvgDesign NvgDesign;

// Scalar field over one or two axes.
typedef struct NvgResult NvgResult;

// Calibrated quantities of a design. Times in us, couplings in rad/us.
typedef struct NvgDesignInfo {
  double tau;
  double tau1;
  double tau2;
  double phi;
  double a1;
  double a2;
  uint64_t super_periods;
  double total_time;
  int32_t sign1;
  int32_t sign2;
  double ratio_residual;
  double magnitude_residual;
} NvgDesignInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *nvg_version(void);

// Copies the last error message of this thread into `buf` (truncated and
// NUL-terminated when `cap > 0`). Returns the full message length without
// the terminator, 0 when there is none.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes.
size_t nvg_last_error(char *buf, size_t cap);

// Parses a scenario from TOML text.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` must be writable.
enum NvgStatus nvg_config_parse(const char *toml, struct NvgConfig **out);

// Loads a scenario from a TOML file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum NvgStatus nvg_config_load(const char *path, struct NvgConfig **out);

// # Safety
// `cfg` must be null or a handle from `nvg_config_*` not yet freed.
void nvg_config_free(struct NvgConfig *cfg);

// Calibrates the direct gate described by the scenario.
//
// # Safety
// `cfg` must be a live config handle; `out` must be writable.
enum NvgStatus nvg_design_new(const struct NvgConfig *cfg, struct NvgDesign **out);

// # Safety
// `d` must be a live design handle; `out` must be writable.
enum NvgStatus nvg_design_info(const struct NvgDesign *d, struct NvgDesignInfo *out);

// Process infidelity of the simulated gate against its target, with a
// relative pulse detuning and a relative amplitude error.
//
// # Safety
// `d` must be a live design handle; `out` must be writable.
enum NvgStatus nvg_design_infidelity(const struct NvgDesign *d,
                                     double detuning_rel,
                                     double amplitude_err,
                                     double *out);

// # Safety
// `d` must be null or a live design handle.
void nvg_design_free(struct NvgDesign *d);

// Runs one scenario.
//
// # Safety
// `cfg` must be a live config handle; `out` must be writable.
enum NvgStatus nvg_run(const struct NvgConfig *cfg,
                       enum NvgScenario scenario,
                       struct NvgResult **out);

// Number of axes (1 or 2) and their lengths; `len1` is 1 for a single axis.
//
// # Safety
// `r` must be a live result handle; the out pointers must be writable.
enum NvgStatus nvg_result_shape(const struct NvgResult *r, size_t *len0, size_t *len1);

// Row-major field values, valid until the result is freed.
//
// # Safety
// `r` must be a live result handle; `len` must be writable.
const double *nvg_result_values(const struct NvgResult *r, size_t *len);

// Values of axis `axis`, valid until the result is freed; null if out of range.
//
// # Safety
// `r` must be a live result handle; `len` must be writable.
const double *nvg_result_axis(const struct NvgResult *r, size_t axis, size_t *len);

// CSV rendering; free with `nvg_string_free`.
//
// # Safety
// `r` must be a live result handle; `out` must be writable.
enum NvgStatus nvg_result_csv(const struct NvgResult *r, char **out);

// JSON rendering with metadata; free with `nvg_string_free`.
//
// # Safety
// `r` must be a live result handle; `out` must be writable.
enum NvgStatus nvg_result_json(const struct NvgResult *r, char **out);

// # Safety
// `r` must be null or a live result handle.
void nvg_result_free(struct NvgResult *r);

// # Safety
// `s` must be null or a string returned by this library.
void nvg_string_free(char *s);

// Closed-form two-nucleus flip-flop evolution, 8x8 row-major, written as
// interleaved (re, im) pairs into `out[128]`. Signs are +1 or -1.
//
// # Safety
// `out` must point to 128 writable doubles.
enum NvgStatus nvg_flipflop_evolution(double a1,
                                      double a2,
                                      int32_t s1,
                                      int32_t s2,
                                      double t,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NVGATE_H */
