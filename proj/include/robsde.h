/* robsde: Monte Carlo pricing and hedging under drift ambiguity.
 *
 * C interface of the shared library. All entry points return a status
 * code; result objects are opaque handles owned by the caller and
 * released with the matching _free function. String views returned by
 * accessors stay valid until the owning handle is freed.
 */

#ifndef ROBSDE_H
#define ROBSDE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ROBSDE_API __declspec(dllexport)
#else
#define ROBSDE_API __attribute__((visibility("default")))
#endif

typedef enum rbsde_status {
    RBSDE_OK = 0,
    RBSDE_ERR_INVALID_ARGUMENT = 1,
    RBSDE_ERR_CONFIG = 2,
    RBSDE_ERR_NUMERIC = 3,
    RBSDE_ERR_SINGULAR_VOLATILITY = 4,
    RBSDE_ERR_BOUND_VIOLATION = 5,
    RBSDE_ERR_IO = 6,
    RBSDE_ERR_INTERNAL = 7
} rbsde_status;

typedef struct rbsde_artifact rbsde_artifact;
typedef struct rbsde_report rbsde_report;

/* Library version string, e.g. "0.1.0". */
ROBSDE_API const char* rbsde_version(void);

/* Message of the last error raised on this thread; empty string if none. */
ROBSDE_API const char* rbsde_last_error(void);

/* Runs one experiment from a JSON config document. out_dir overrides the
 * config's output directory when non-NULL; seed_override replaces the
 * ensemble seed when non-NULL. On success *out receives an artifact
 * handle. */
ROBSDE_API rbsde_status rbsde_run_config_json(const char* config_json,
                                              const char* out_dir,
                                              const uint64_t* seed_override,
                                              rbsde_artifact** out);

/* Same, reading the config from a file. */
ROBSDE_API rbsde_status rbsde_run_config_file(const char* config_path,
                                              const char* out_dir,
                                              const uint64_t* seed_override,
                                              rbsde_artifact** out);

ROBSDE_API const char* rbsde_artifact_output_dir(const rbsde_artifact* artifact);
ROBSDE_API const char* rbsde_artifact_csv_path(const rbsde_artifact* artifact);
ROBSDE_API const char* rbsde_artifact_summary_json(const rbsde_artifact* artifact);
ROBSDE_API void rbsde_artifact_free(rbsde_artifact* artifact);

/* Runs the full validation suite with the given seed. A report handle is
 * produced even when checks fail; the status is RBSDE_OK as long as the
 * suite itself could run. */
ROBSDE_API rbsde_status rbsde_validate(uint64_t seed, rbsde_report** out);

ROBSDE_API const char* rbsde_report_json(const rbsde_report* report);
ROBSDE_API int rbsde_report_check_count(const rbsde_report* report);
ROBSDE_API int rbsde_report_failed_count(const rbsde_report* report);
/* 1 when every check passed, else 0. */
ROBSDE_API int rbsde_report_all_passed(const rbsde_report* report);
ROBSDE_API const char* rbsde_report_check_name(const rbsde_report* report, int index);
ROBSDE_API int rbsde_report_check_passed(const rbsde_report* report, int index);
ROBSDE_API void rbsde_report_free(rbsde_report* report);

#ifdef __cplusplus
}
#endif

#endif /* ROBSDE_H */
