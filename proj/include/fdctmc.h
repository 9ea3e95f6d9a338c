/* C interface to the fdctmc timeout-analysis library.
 *
 * All entry points return fdc_status; results travel through opaque handles.
 * Reports carry a human-readable rendering, an ordered key/value block, and
 * typed getters. Handles must be released with the matching _free call.
 * fdc_last_error() describes the most recent failure on the calling thread.
 */
#ifndef FDCTMC_H
#define FDCTMC_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fdc_status {
  FDC_OK = 0,
  FDC_ERR_USAGE = 1,      /* bad arguments / flags */
  FDC_ERR_MODEL = 2,      /* parse or validation failure */
  FDC_ERR_INFEASIBLE = 3, /* parameters out of range (mesh, caps, underflow) */
  FDC_ERR_INTERNAL = 4
} fdc_status;

typedef struct fdc_model fdc_model;
typedef struct fdc_report fdc_report;

/* Optional knobs; fdc_options_init fills the documented defaults. Negative
 * values mean "unset" for the override fields. */
typedef struct fdc_options {
  double epsilon;        /* target error, default 0.1 */
  double theta;          /* kernel truncation, default 1e-9 */
  double delta;          /* mesh step override, default unset */
  double dmax;           /* delay upper bound / override, default unset */
  double dmin;           /* delay lower bound (PO verbs), default unset */
  double kappa;          /* rounding grid override; 0 disables rounding */
  double vmax;           /* value-bound override, default unset */
  int use_theoretical_vmax; /* 0: constant-1/lambda heuristic (default) */
  double x;              /* threshold for threshold/verify */
  long long runs;        /* simulation runs, default 100000 */
  unsigned long long seed;  /* default 1 */
  long long max_steps;   /* per-run step cap, default 1000000 */
  long long action_cap;  /* default 1000000 */
  long long strategy_cap; /* default 10000000 */
} fdc_options;

void fdc_options_init(fdc_options* opts);

fdc_status fdc_model_parse(const char* text, fdc_model** out);
void fdc_model_free(fdc_model* model);

/* Canonical round-trippable rendering of the model file. */
fdc_status fdc_model_serialize(const fdc_model* model, fdc_report** out);

/* Diagnostics, one kv entry per finding; empty list means valid. */
fdc_status fdc_validate(const fdc_model* model, int for_synthesis, fdc_report** out);

/* Expected total cost and first-hit goal probabilities under fixed delays. */
fdc_status fdc_analyze(const fdc_model* model, const char* delays_text, const fdc_options* opts,
                       fdc_report** out);

/* Model constants and every discretization parameter, with provenance. */
fdc_status fdc_params(const fdc_model* model, const fdc_options* opts, fdc_report** out);

fdc_status fdc_synth(const fdc_model* model, const fdc_options* opts, fdc_report** out);

/* Observation classes come from the model file's obs lines. */
fdc_status fdc_synth_po(const fdc_model* model, const fdc_options* opts, fdc_report** out);

fdc_status fdc_threshold(const fdc_model* model, const fdc_options* opts, fdc_report** out);

fdc_status fdc_verify(const fdc_model* model, const char* delays_text, const fdc_options* opts,
                      fdc_report** out);

fdc_status fdc_simulate(const fdc_model* model, const char* delays_text, const fdc_options* opts,
                        fdc_report** out);

/* Builds the SAT reduction model from DIMACS text; the generated model file
 * is available under the "model" string key. */
fdc_status fdc_gen_sat(const char* dimacs_text, fdc_report** out);

const char* fdc_report_text(const fdc_report* report);
const char* fdc_report_kv(const fdc_report* report);
/* Returns 1 and stores the value when the key holds a number. */
int fdc_report_get(const fdc_report* report, const char* key, double* out);
/* Returns NULL when the key is absent. */
const char* fdc_report_get_str(const fdc_report* report, const char* key);
void fdc_report_free(fdc_report* report);

const char* fdc_last_error(void);
const char* fdc_version(void);

#ifdef __cplusplus
}
#endif

#endif
