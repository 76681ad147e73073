/*
 * C interface to the fdtr trust-region engine.
 *
 * All objects are opaque handles created by *_create / *_run functions and
 * released with the matching *_destroy. Functions return an fdtr_status;
 * on failure fdtr_last_error() holds a message for the calling thread.
 */
#ifndef FDTR_H
#define FDTR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FDTR_BUILDING_LIBRARY)
#    define FDTR_API __declspec(dllexport)
#  else
#    define FDTR_API __declspec(dllimport)
#  endif
#else
#  define FDTR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fdtr_status {
  FDTR_OK = 0,
  FDTR_ERR_USAGE = 1,          /* null handle, bad argument */
  FDTR_ERR_CONFIG = 2,
  FDTR_ERR_DIMENSION = 3,
  FDTR_ERR_EVALUATION = 4,     /* evaluator failed or returned NaN/Inf */
  FDTR_ERR_PROTOCOL = 5,       /* malformed external-evaluator reply */
  FDTR_ERR_REMOTE = 6,         /* external evaluator sent an error reply */
  FDTR_ERR_TIMEOUT = 7,
  FDTR_ERR_PROCESS_EXITED = 8,
  FDTR_ERR_IO = 9,
  FDTR_ERR_BUFFER = 10,        /* output buffer too small */
  FDTR_ERR_INTERNAL = 11
} fdtr_status;

FDTR_API const char* fdtr_version(void);
FDTR_API const char* fdtr_status_name(fdtr_status status);
/* Message of the last failed call on this thread ("" if none). */
FDTR_API const char* fdtr_last_error(void);
/* Frees strings returned through char** out-parameters. */
FDTR_API void fdtr_string_free(char* s);

/* ---- problems --------------------------------------------------------- */

typedef struct fdtr_problem fdtr_problem;

typedef struct fdtr_problem_options {
  const char* name;            /* "antenna", "quadratic" or "cmd:<command>" */
  double noise_amplitude_db;   /* antenna only; 0 disables noise */
  double noise_cell_fraction;
  uint64_t noise_seed;
  const double* lower;         /* optional box, bounds_dim entries each */
  const double* upper;
  size_t bounds_dim;           /* 0 selects the antenna fixture box */
  double sweep_lo_ghz;
  double sweep_hi_ghz;
  size_t sweep_points;
  double band_lo_ghz;
  double band_hi_ghz;
  double timeout_s;            /* external evaluators */
  size_t dimension;            /* external evaluators; 0 means bounds_dim or 6 */
} fdtr_problem_options;

FDTR_API void fdtr_problem_options_default(fdtr_problem_options* opts);
FDTR_API fdtr_status fdtr_problem_create(const fdtr_problem_options* opts,
                                         fdtr_problem** out);
FDTR_API void fdtr_problem_destroy(fdtr_problem* problem);
FDTR_API size_t fdtr_problem_dimension(const fdtr_problem* problem);
FDTR_API size_t fdtr_problem_samples(const fdtr_problem* problem);
/* Raw model response (no caching). r_db must hold fdtr_problem_samples(). */
FDTR_API fdtr_status fdtr_problem_evaluate(fdtr_problem* problem, const double* x,
                                           size_t dim, double* r_db, size_t cap);

/* Resolves "x1".."x10" or "v1,v2,...". *dim receives the length even when
 * cap is too small (FDTR_ERR_BUFFER). */
FDTR_API fdtr_status fdtr_design_parse(const char* text, double* x, size_t cap,
                                       size_t* dim);

/* ---- optimisation ----------------------------------------------------- */

typedef struct fdtr_trust_options {
  double alpha1;
  double alpha2;
  double rho_low;
  double rho_high;
  double delta0;
  double term_eps;
  uint64_t max_evals;      /* 0 selects 200 * (D + 1) */
  int normalize_box;       /* measure the radius in the unit box */
  int parallel_probes;
  const char* scheme;      /* "fraction:F", "sqrteps:E", "custom:f1,...,fD" */
} fdtr_trust_options;

typedef struct fdtr_trace_row {
  size_t iter;
  int accepted;
  double rho;
  double delta;
  double step_norm;
  double objective_db;
  size_t cum_evals;
} fdtr_trace_row;

typedef struct fdtr_run fdtr_run;

FDTR_API void fdtr_trust_options_default(fdtr_trust_options* opts);
/* When the evaluator fails mid-run the error status is returned and *out
 * still receives the partial run. */
FDTR_API fdtr_status fdtr_optimize(fdtr_problem* problem, const double* x0,
                                   size_t dim, const fdtr_trust_options* opts,
                                   fdtr_run** out);
FDTR_API void fdtr_run_destroy(fdtr_run* run);
FDTR_API double fdtr_run_initial_objective(const fdtr_run* run);
FDTR_API double fdtr_run_best_objective(const fdtr_run* run);
FDTR_API size_t fdtr_run_evaluations(const fdtr_run* run);
FDTR_API size_t fdtr_run_jacobian_builds(const fdtr_run* run);
FDTR_API size_t fdtr_run_trials(const fdtr_run* run);
FDTR_API const char* fdtr_run_termination(const fdtr_run* run);
FDTR_API const char* fdtr_run_error(const fdtr_run* run);
/* Copies the best design; returns D (nothing copied if cap < D). */
FDTR_API size_t fdtr_run_best_design(const fdtr_run* run, double* x, size_t cap);
FDTR_API fdtr_status fdtr_run_trace_row(const fdtr_run* run, size_t index,
                                        fdtr_trace_row* row);
/* trace.csv, convergence.csv, final_response.csv and result.json in dir.
 * label names the response column (run_<label>_db). */
FDTR_API fdtr_status fdtr_run_write(const fdtr_run* run, const fdtr_problem* problem,
                                    const char* dir, const char* label);

/* ---- sweeps and reports ----------------------------------------------- */

typedef struct fdtr_sweep fdtr_sweep;

/* jobs == 0 keeps the plan's value. */
FDTR_API fdtr_status fdtr_sweep_run(const char* plan_path, size_t jobs,
                                    fdtr_sweep** out);
FDTR_API void fdtr_sweep_destroy(fdtr_sweep* sweep);
FDTR_API size_t fdtr_sweep_cells(const fdtr_sweep* sweep);
FDTR_API size_t fdtr_sweep_failed_cells(const fdtr_sweep* sweep);
FDTR_API fdtr_status fdtr_sweep_write(const fdtr_sweep* sweep, const char* dir);
/* format: "markdown" or "csv"; free *text with fdtr_string_free. */
FDTR_API fdtr_status fdtr_sweep_render(const fdtr_sweep* sweep, const char* format,
                                       char** text);
/* Re-renders the table of a sweep output directory. */
FDTR_API fdtr_status fdtr_report(const char* dir, const char* format, char** text);

/* ---- tools ------------------------------------------------------------ */

/* function: "sin", "cos" or "exp"; steps: "log:LO:HI:N" or a comma list.
 * Writes step,residual,abs_residual CSV to out_path. */
FDTR_API fdtr_status fdtr_fd_curve(const char* function, double point,
                                   const char* steps, const char* out_path);

/* Serves the line protocol on stdin/stdout for a built-in problem until end
 * of input. Returns the process exit status. */
FDTR_API int fdtr_serve_mock_stdio(const fdtr_problem_options* opts);

#ifdef __cplusplus
}
#endif

#endif /* FDTR_H */
