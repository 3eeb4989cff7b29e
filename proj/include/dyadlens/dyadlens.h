/* dyadlens C API: opaque handles, status codes, UTF-8 JSON strings.
 *
 * Every function that can fail returns dl_status; on failure the thread-local
 * message from dl_last_error() describes the problem. Strings returned through
 * char** out parameters are heap-allocated and must be released with
 * dl_string_free(). Handles are released with their matching *_free().
 */

#ifndef DYADLENS_H
#define DYADLENS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DL_API __declspec(dllexport)
#else
#define DL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dl_status {
    DL_OK = 0,
    DL_ERR_IO = 1,       /* file could not be read or written */
    DL_ERR_PARSE = 2,    /* input is not syntactically valid */
    DL_ERR_SCHEMA = 3,   /* input parses but violates the expected shape */
    DL_ERR_DATA = 4,     /* data is well-formed but unusable for the request */
    DL_ERR_ARG = 5,      /* bad argument from the caller */
    DL_ERR_NO_MATCH = 6, /* lookup found nothing */
    DL_ERR_INTERNAL = 7
} dl_status;

typedef struct dl_session dl_session;       /* one recorded or synthetic dyad */
typedef struct dl_series dl_series;         /* a windowed metric series */
typedef struct dl_table dl_table;           /* scenario/action table */
typedef struct dl_forecaster dl_forecaster; /* trained metric forecaster */

DL_API const char* dl_version(void);

/* Message for the most recent failing call on this thread ("" after
 * success). The pointer stays valid until the next API call on the
 * same thread; do not free it. */
DL_API const char* dl_last_error(void);

DL_API void dl_string_free(char* s);

/* ---- sessions ---------------------------------------------------------- */

DL_API dl_status dl_session_open(const char* path, dl_session** out);
DL_API dl_status dl_session_parse(const char* text, dl_session** out);
DL_API dl_status dl_session_save(const dl_session* s, const char* path);
DL_API void dl_session_free(dl_session* s);

/* Session header as a JSON object (ids, duration, rates, screen). */
DL_API dl_status dl_session_meta_json(const dl_session* s, char** out_json);

/* Data-quality report: {"fatal": bool, "issues": [...]}. */
DL_API dl_status dl_session_validate_json(const dl_session* s, char** out_json);

/* Generates a synthetic dyad. config_json keys mirror the generator
 * parameters (seed, mode, duration_s, calibration_s, shared_focus_p,
 * coupling_kappa, me_base, noise_sd, gaze_jitter, ...); unknown keys are
 * rejected. out_truth_json (optional, may be NULL) receives the planted
 * ground truth. */
DL_API dl_status dl_simulate(const char* config_json, dl_session** out,
                             char** out_truth_json);

/* ---- metric series ----------------------------------------------------- */

/* Joint visual attention per window over the task segment. window_ms <= 0
 * selects the default (30000). */
DL_API dl_status dl_jva_series(const dl_session* s, int64_t window_ms,
                               dl_series** out);

/* Per-second mental effort for participant 0 (A) or 1 (B). */
DL_API dl_status dl_me_series(const dl_session* s, int participant,
                              dl_series** out);

/* Joint mental effort per window over the task segment. method is "crqa"
 * or "cosine"; NULL/"" selects crqa. window_ms <= 0 selects 10000. */
DL_API dl_status dl_jme_series(const dl_session* s, int64_t window_ms,
                               const char* method, dl_series** out);

DL_API size_t dl_series_len(const dl_series* s);
DL_API const char* dl_series_name(const dl_series* s);
DL_API int64_t dl_series_window_ms(const dl_series* s);
/* Arrays of dl_series_len() elements, owned by the series handle. */
DL_API const int64_t* dl_series_starts(const dl_series* s);
DL_API const double* dl_series_values(const dl_series* s);
DL_API dl_status dl_series_csv(const dl_series* s, char** out_csv);
DL_API void dl_series_free(dl_series* s);

/* ---- session analyses -------------------------------------------------- */

/* Effort/attention episode classification on a shared window grid:
 * {"window_ms":..,"episodes":[{"start_ms":..,"type":"HH"},...],
 *  "proportions":{"HH":..,"HL":..,"LH":..,"LL":..}}. */
DL_API dl_status dl_episodes_json(const dl_session* s, int64_t window_ms,
                                  const char* jme_method, char** out_json);

/* Lagged effort->attention analysis for one session:
 * {"eta2_xy":..,"eta2_yx":..,"significance":..,"effect_size":..,
 *  "lag":..,"quadrant":1..4}. max_lag <= 0 selects 10. */
DL_API dl_status dl_causality_json(const dl_session* s, int max_lag,
                                   const char* jme_method, char** out_json);

/* ---- scenario table and feedback --------------------------------------- */

/* Loads a scenario table from CSV; NULL/"" path selects the built-in table. */
DL_API dl_status dl_table_load(const char* path, dl_table** out);
DL_API void dl_table_free(dl_table* t);

/* Structural audit: duplicate-pattern groups, action coverage. */
DL_API dl_status dl_table_audit_json(const dl_table* t, char** out_json);

/* Matches one discrete state, e.g. {"jva":"H","jme":"L","me_a":"AVG",
 * "me_b":"H"}; returns {"actions":[...],"row_id":..,"fallback":bool}.
 * DL_ERR_NO_MATCH when nothing applies. */
DL_API dl_status dl_table_match_json(const dl_table* t, const char* state_json,
                                     char** out_json);

/* Runs the feedback engines over a session and returns one JSON event per
 * line. options_json (NULL/"" for defaults) accepts: window_ms, jme_method,
 * cooldown_ms, persistence_ms, joint_in_trigger, reactive, proactive.
 * forecaster may be NULL unless proactive is requested. */
DL_API dl_status dl_feedback_run(const dl_session* s, const dl_table* t,
                                 const char* options_json,
                                 const dl_forecaster* forecaster,
                                 char** out_jsonl);

/* ---- forecasting -------------------------------------------------------- */

/* Fits the ridge forecaster on full-session metric frames from the given
 * sessions. config_json (NULL/"" for defaults) accepts: lags,
 * horizon_windows, ridge_lambda, window_ms. */
DL_API dl_status dl_forecaster_fit(const dl_session* const* sessions, size_t n,
                                   const char* config_json,
                                   dl_forecaster** out);
DL_API dl_status dl_forecaster_from_json(const char* text, dl_forecaster** out);
DL_API dl_status dl_forecaster_to_json(const dl_forecaster* f, char** out_json);

/* Held-out accuracy against the persistence baseline:
 * {"per_metric":{...},"overall":{"mae":..,"mae_persistence":..,"skill":..}}. */
DL_API dl_status dl_forecaster_eval_json(const dl_forecaster* f,
                                         const dl_session* const* sessions,
                                         size_t n, char** out_json);
DL_API void dl_forecaster_free(dl_forecaster* f);

/* ---- statistics --------------------------------------------------------- */

/* CDF of the F distribution at x with df1, df2 degrees of freedom. */
DL_API dl_status dl_f_cdf(double x, double df1, double df2, double* out);

/* kind: "anova" (classical one-way), "welch", or "levene" (median-centred).
 * groups_json: [[...],[...],...]. Returns {"f":..,"df1":..,"df2":..,"p":..}. */
DL_API dl_status dl_anova_json(const char* kind, const char* groups_json,
                               char** out_json);

/* Bonferroni adjustment of n p-values over m comparisons (m <= 0 means
 * m = n). out must hold n doubles. */
DL_API dl_status dl_bonferroni(const double* p, size_t n, int m, double* out);

#ifdef __cplusplus
}
#endif

#endif /* DYADLENS_H */
