#ifndef BLM_H
#define BLM_H

#include <stdbool.h>
#include <stdint.h>

typedef enum BlmStatus {
  BLM_STATUS_OK = 0,
  BLM_STATUS_NULL_ARGUMENT = 1,
  BLM_STATUS_INVALID_UTF8 = 2,
  BLM_STATUS_PARSE_ERROR = 3,
  BLM_STATUS_SCHEMA_ERROR = 4,
  BLM_STATUS_CONTRACT_ERROR = 5,
  BLM_STATUS_FLOW_ERROR = 6,
  BLM_STATUS_INTEGRATION_ERROR = 7,
  /**
   * The call completed but reported integration violations.
   */
  BLM_STATUS_VIOLATIONS = 8,
  BLM_STATUS_UNKNOWN_SERVICE = 9,
  BLM_STATUS_PANIC = 10,
} BlmStatus;

/**
 * Loaded contract.
 */
typedef struct BlmContract BlmContract;

/**
 * Parsed logic model.
 */
typedef struct BlmModel BlmModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses model source text into `*out`.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BlmStatus blm_model_parse(const char *source, struct BlmModel **out);

/**
 * Reads a BLPS document into `*out`.
 *
 * # Safety
 * `xml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BlmStatus blm_model_from_blps(const char *xml, struct BlmModel **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void blm_model_free(struct BlmModel *model);

/**
 * Canonical source text of the model.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum BlmStatus blm_model_print(const struct BlmModel *model, char **out);

/**
 * Number of services in the model, or -1 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
int64_t blm_model_service_count(const struct BlmModel *model);

/**
 * Loads contract text into `*out`.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BlmStatus blm_contract_load(const char *source, struct BlmContract **out);

/**
 * # Safety
 * `contract` must be null or a handle not yet freed.
 */
void blm_contract_free(struct BlmContract *contract);

/**
 * Flow productions, concrete or abstract.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum BlmStatus blm_flow(const struct BlmModel *model, bool abstract_view, char **out);

/**
 * Evaluates the model and writes a BLPS document for `service`, or an
 * integrated document named `service` holding every service when the model
 * has none by that name. A null `contract` means the default contract.
 *
 * # Safety
 * `model` must be a live handle, `contract` null or live, `service` a
 * NUL-terminated string, `out` a valid pointer.
 */
enum BlmStatus blm_eval(const struct BlmModel *model,
                        const struct BlmContract *contract,
                        const char *service,
                        char **out);

/**
 * Integrates `source` and `target` through `binding`
 * (`service.INDEX->target(var, var:param)`). On success `*out_blps` holds
 * the integrated document named `name`. When the binding breaks the
 * contract the status is `Violations` and `*out_violations` lists them one
 * per line; `out_violations` may be null.
 *
 * # Safety
 * Handles must be live or null where documented, strings NUL-terminated,
 * `out_blps` a valid pointer.
 */
enum BlmStatus blm_integrate(const struct BlmModel *source,
                             const struct BlmModel *target,
                             const char *binding,
                             const struct BlmContract *contract,
                             const char *name,
                             char **out_blps,
                             char **out_violations);

/**
 * Compares `old` against `updated` under `contract` (null for the default). `*changed`
 * becomes 1 when any property set moved, 0 otherwise.
 *
 * # Safety
 * Handles must be live, `contract` null or live, `changed` a valid pointer.
 */
enum BlmStatus blm_impact(const struct BlmModel *old,
                          const struct BlmModel *updated,
                          const struct BlmContract *contract,
                          int32_t *changed);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void blm_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *blm_last_error(void);

/**
 * Library version, statically allocated.
 */
const char *blm_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLM_H */
