#ifndef PINNSE_PINNSE_H
#define PINNSE_PINNSE_H

/*
 * C interface to the pinnse library: IEEE test-grid modelling, dataset
 * generation, physics-informed state-estimation training and a weighted
 * least-squares baseline.
 *
 * Conventions
 *   - Every fallible call returns a pinnse_status. On failure, a
 *     description is available from pinnse_last_error() on the same thread
 *     until the next failing call.
 *   - Objects are opaque handles, released with their *_free function.
 *     Freeing NULL is a no-op.
 *   - Strings returned through char** are owned by the caller and released
 *     with pinnse_string_free().
 *   - Handles are not synchronized; a handle may be used from one thread at
 *     a time. Distinct handles are independent.
 */

#include <stdint.h>

#if defined(_WIN32)
#if defined(PINNSE_BUILDING)
#define PINNSE_API __declspec(dllexport)
#else
#define PINNSE_API __declspec(dllimport)
#endif
#else
#define PINNSE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pinnse_status {
  PINNSE_OK = 0,
  PINNSE_E_INVALID_ARGUMENT = 1, /* null pointer or out-of-range argument */
  PINNSE_E_PARSE = 2,            /* malformed or unreadable input file */
  PINNSE_E_GRID = 3,             /* invalid grid description */
  PINNSE_E_CONFIG = 4,           /* invalid configuration */
  PINNSE_E_DIMENSION = 5,        /* mismatched sizes (e.g. dataset vs grid) */
  PINNSE_E_CONVERGENCE = 6,      /* power flow or estimator did not converge */
  PINNSE_E_TRAINING = 7,         /* training aborted on a non-finite value */
  PINNSE_E_IO = 8,               /* output could not be written */
  PINNSE_E_INTERNAL = 9          /* unexpected failure (e.g. out of memory) */
} pinnse_status;

typedef enum pinnse_scenario {
  PINNSE_SCENARIO_STEADY = 0, /* randomised load levels, 1% SCADA noise */
  PINNSE_SCENARIO_OUTAGE = 1  /* generator shut-down trajectory, 0.1% PMU noise */
} pinnse_scenario;

typedef struct pinnse_grid pinnse_grid;
typedef struct pinnse_dataset pinnse_dataset;

PINNSE_API const char* pinnse_version(void);
PINNSE_API const char* pinnse_status_name(pinnse_status status);
/* Message of the last failure on this thread ("" if none). */
PINNSE_API const char* pinnse_last_error(void);
PINNSE_API void pinnse_string_free(char* s);

/* ---- grid ------------------------------------------------------------ */

PINNSE_API pinnse_status pinnse_grid_load_case14(pinnse_grid** out);
PINNSE_API pinnse_status pinnse_grid_load_file(const char* path, pinnse_grid** out);
PINNSE_API void pinnse_grid_free(pinnse_grid* grid);
PINNSE_API pinnse_status pinnse_grid_bus_count(const pinnse_grid* grid, int* out);
PINNSE_API pinnse_status pinnse_grid_name(const pinnse_grid* grid, char** out);

/* ---- dataset --------------------------------------------------------- */

typedef struct pinnse_generate_options {
  pinnse_scenario scenario;
  int n;               /* instances: 192 steady, 2000 outage */
  uint64_t seed;       /* master seed; load, noise and jitter are substreams */
  double load_band;    /* steady: loads scaled by U[1-band, 1+band] */
  double load_jitter;  /* outage: relative load jitter per instance */
  int outage_bus;      /* outage: 1-based bus that trips (2) */
  double p_sigma_rel;  /* relative Gaussian noise on P; negative = scenario default */
  double q_sigma_rel;  /* relative Gaussian noise on Q; negative = scenario default */
} pinnse_generate_options;

/* Scenario defaults: n, band/jitter, outage bus and default noise. */
PINNSE_API void pinnse_generate_options_init(pinnse_generate_options* options, pinnse_scenario scenario);
PINNSE_API pinnse_status pinnse_dataset_generate(const pinnse_grid* grid, const pinnse_generate_options* options,
                                                 pinnse_dataset** out);
/* Reads the CSV and its JSON sidecar when present. */
PINNSE_API pinnse_status pinnse_dataset_read(const char* csv_path, pinnse_dataset** out);
/* Writes the CSV and its JSON sidecar (same stem, .json). */
PINNSE_API pinnse_status pinnse_dataset_write(const pinnse_dataset* dataset, const char* csv_path);
PINNSE_API pinnse_status pinnse_dataset_size(const pinnse_dataset* dataset, int* out);
/* JSON summary: scenario, seed, case, sizes, noise, generation statistics. */
PINNSE_API pinnse_status pinnse_dataset_info(const pinnse_dataset* dataset, char** out_json);
PINNSE_API void pinnse_dataset_free(pinnse_dataset* dataset);

/* ---- weighted least squares baseline ---------------------------------- */

typedef struct pinnse_wls_summary {
  int samples;
  int max_iterations;
  double mean_mag_error; /* pu, mean over samples of per-sample mean |error| */
  double max_mag_error;  /* pu */
  double mean_ang_error; /* rad */
  double max_ang_error;  /* rad */
} pinnse_wls_summary;

/* Estimates every sample; writes per-sample estimates to out_csv when it is
 * not NULL. sigma_floor (pu) bounds the measurement standard deviation
 * from below; pass 0 for the default (1e-4). */
PINNSE_API pinnse_status pinnse_wls_batch(const pinnse_grid* grid, const pinnse_dataset* dataset,
                                          double sigma_floor, const char* out_csv, pinnse_wls_summary* out);

/* ---- training -------------------------------------------------------- */

/* Default training configuration as JSON (epochs, batch_size, folds,
 * regimes, learning_rate, hidden, period, parallel_folds). */
PINNSE_API pinnse_status pinnse_train_config_defaults(char** out_json);
/* Validates config_json (NULL = defaults) and fills in the dataset seed
 * when no seed is given. */
PINNSE_API pinnse_status pinnse_train_config_resolve(const pinnse_dataset* dataset, const char* config_json,
                                                     char** out_json);
/* Runs every configured regime with k-fold cross-validation and writes
 * report.json, report.txt, curves/ and checkpoints/ into out_dir. The
 * report document is returned through report_json when it is not NULL. */
PINNSE_API pinnse_status pinnse_train(const pinnse_grid* grid, const pinnse_dataset* dataset,
                                      const char* config_json, const char* out_dir, char** report_json);

/* Renders the text table of a report.json document. */
PINNSE_API pinnse_status pinnse_render_report(const char* report_json, char** out_text);

#ifdef __cplusplus
}
#endif

#endif /* PINNSE_PINNSE_H */
