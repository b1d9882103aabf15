/* C interface to the viral-timeline branching-process library.
 *
 * All functions are thread-safe as long as each vtl_model handle is used by
 * one thread at a time. Strings returned through out-parameters are owned by
 * the caller and released with vtl_string_free.
 */
#ifndef VIRALTL_H
#define VIRALTL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vtl_status {
  VTL_OK = 0,
  VTL_CONFIG_ERROR = 2,  /* invalid model or command configuration */
  VTL_REGIME_ERROR = 3,  /* parameters outside the solver's regime */
  VTL_INTERNAL_ERROR = 4
} vtl_status;

typedef struct vtl_model vtl_model;

const char* vtl_version(void);
void vtl_string_free(char* text);

/* Parse a JSON model block (single- or two-provider, same schema as the
 * "model" key of a run configuration). Returns NULL on failure, in which
 * case *error (when non-NULL) receives a message. */
vtl_model* vtl_model_create(const char* model_json, char** error);
void vtl_model_free(vtl_model* model);
int vtl_model_is_two_cp(const vtl_model* model);

/* Run one command ("spectral", "extinct", "shares", "nonviral", "simulate",
 * "optimize", "nash", "sweep") against a model. options_json may be NULL for
 * an empty options block; convention may be NULL or "paper-k"/"recipient".
 * On success *report_json receives the JSON report. */
vtl_status vtl_model_run(const vtl_model* model, const char* command,
                         const char* options_json, uint64_t seed, const char* convention,
                         char** report_json, char** error);

/* Execute a complete configuration document:
 * {"model": ..., "command": ..., "options": {...}, "seed": ..., "convention": ...}. */
vtl_status vtl_run_config(const char* config_json, char** report_json, char** error);

/* Machine-readable kind of the last error on this thread ("bad-config",
 * "not-viral", ...); empty string when the last call succeeded. */
const char* vtl_last_error_kind(void);

#ifdef __cplusplus
}
#endif

#endif
