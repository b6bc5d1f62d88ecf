#ifndef SCAMSIM_H
#define SCAMSIM_H

/* C interface to the scamsim library. Strings returned through `char**`
 * out-parameters are owned by the caller and released with scamsim_free().
 * Every function reports failure through its status; the message of the most
 * recent failure on the calling thread is available from scamsim_last_error(). */

#include <stdint.h>

#if defined(_WIN32)
#  if defined(SCAMSIM_BUILDING_LIBRARY)
#    define SCAMSIM_API __declspec(dllexport)
#  else
#    define SCAMSIM_API __declspec(dllimport)
#  endif
#else
#  define SCAMSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scamsim_status {
  SCAMSIM_OK = 0,
  SCAMSIM_INVALID_ARGUMENT = 1,
  SCAMSIM_PARSE_ERROR = 2,
  SCAMSIM_IO_ERROR = 3,
  SCAMSIM_OUT_OF_ORDER_EVENT = 10,
  SCAMSIM_SESSION_NOT_ACTIVE = 11,
  SCAMSIM_DUPLICATE_ADVICE = 12,
  SCAMSIM_NON_MONOTONE_TIMESTAMP = 13,
  SCAMSIM_SESSION_INCOMPLETE = 14,
  SCAMSIM_SESSION_NOT_FOUND = 15,
  SCAMSIM_ADVICE_FOR_NON_TARGET = 20,
  SCAMSIM_PHASE_MISMATCH = 21,
  SCAMSIM_MISSING_SLOT_BINDING = 22,
  SCAMSIM_UNKNOWN_SLOT = 23,
  SCAMSIM_MISSING_TEMPLATE = 24,
  SCAMSIM_PROVIDER_ERROR = 25,
  SCAMSIM_EMPTY_COMPLETION = 26,
  SCAMSIM_REFUSAL_DETECTED = 27,
  SCAMSIM_UNPARSEABLE_VERDICT = 28,
  SCAMSIM_NO_ITEM_FOR_STEP = 30,
  SCAMSIM_ALREADY_SOLVED = 31,
  SCAMSIM_INDEX_OUT_OF_RANGE = 32,
  SCAMSIM_OPTION_ALREADY_TRIED = 33,
  SCAMSIM_MISSING_ITEM = 40,
  SCAMSIM_OUT_OF_SCALE = 41,
  SCAMSIM_RANK_DEFICIENT = 50,
  SCAMSIM_TOO_FEW_ROWS = 51,
  SCAMSIM_DEGENERATE_FACTOR = 52,
  SCAMSIM_LEVERAGE_ONE = 53,
  SCAMSIM_OUT_OF_RANGE_P = 54,
  SCAMSIM_NO_OVERLAP = 55,
  SCAMSIM_ZERO_MARGIN = 56,
  SCAMSIM_EMPTY_SAMPLE = 57,
  SCAMSIM_NO_CONVERGENCE = 58,
  SCAMSIM_DUPLICATE_PARTICIPANT = 60,
  SCAMSIM_PACK_INVALID = 61,
  SCAMSIM_GATE_CLOSED = 62,
  SCAMSIM_TEXT_EMPTY = 63,
  SCAMSIM_TEXT_TOO_LONG = 64,
  SCAMSIM_UNAUTHORIZED = 65,
  SCAMSIM_VERSION_CONFLICT = 66,
  SCAMSIM_DWELL_NOT_MET = 67,
  SCAMSIM_INVALID_INVITE = 68,
  SCAMSIM_INTERNAL = 99
} scamsim_status;

typedef struct scamsim_platform scamsim_platform;

SCAMSIM_API const char* scamsim_version(void);
SCAMSIM_API const char* scamsim_status_name(scamsim_status status);
/* Message of the last failed call on this thread; "" when none. */
SCAMSIM_API const char* scamsim_last_error(void);
SCAMSIM_API void scamsim_free(char* text);

/* config_json: see PlatformConfig keys in the README. NULL means defaults.
 * use_env != 0 overlays SCAMSIM_* environment variables afterwards. */
SCAMSIM_API scamsim_status scamsim_platform_open(const char* config_json, int use_env, scamsim_platform** out);
SCAMSIM_API void scamsim_platform_close(scamsim_platform* platform);

/* Routes one request. `path` may carry a query string. body_json and bearer
 * may be NULL. The HTTP-style status goes to *http_status and the response
 * body (JSON, or CSV for table exports) to *out_body. Returns SCAMSIM_OK
 * whenever a response was produced, including error responses. */
SCAMSIM_API scamsim_status scamsim_platform_call(scamsim_platform* platform, const char* method, const char* path,
                                                 const char* body_json, const char* bearer, int* http_status,
                                                 char** out_body);

/* Blocks serving HTTP. static_dir may be NULL. */
SCAMSIM_API scamsim_status scamsim_serve(const char* config_json, int use_env, const char* host, int port,
                                         const char* static_dir);

/* Writes the validation report as JSON. Returns SCAMSIM_PACK_INVALID when the
 * pack fails; the report is still written. cadence may be NULL. */
SCAMSIM_API scamsim_status scamsim_pack_validate(const char* pack_dir, const char* cadence, char** out_json);

/* Runs headless sessions; writes a JSON summary. */
SCAMSIM_API scamsim_status scamsim_run_headless(const char* options_json, char** out_json);

/* Participant table from a store ("memory" is empty). format: "csv" | "json". */
SCAMSIM_API scamsim_status scamsim_export(const char* store, const char* pack_dir, int include_excluded,
                                          const char* format, char** out_text);

/* ANCOVA report over a CSV table. models_json may be NULL for the default
 * models. as_text != 0 renders a plain-text report instead of JSON. */
SCAMSIM_API scamsim_status scamsim_analyze(const char* table_csv_path, const char* models_json, int as_text,
                                           char** out);

/* Krippendorff alpha over a label file; codebook_path may be NULL. */
SCAMSIM_API scamsim_status scamsim_irr(const char* labels_path, const char* codebook_path, char** out_json);

SCAMSIM_API scamsim_status scamsim_power_n_per_group(int k_groups, double cohens_f, double alpha, double power,
                                                     int* out_n);

#ifdef __cplusplus
}
#endif

#endif /* SCAMSIM_H */
