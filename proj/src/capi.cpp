#include "robsde.h"

#include "errors.hpp"
#include "experiment.hpp"
#include "validation.hpp"
#include "version.hpp"

#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

struct rbsde_artifact {
    rbsde::RunArtifact inner;
};

struct rbsde_report {
    rbsde::ValidationReport inner;
    std::string json_bytes;
};

namespace {

thread_local std::string g_last_error;

rbsde_status status_from(rbsde::ErrorCode code) {
    using rbsde::ErrorCode;
    switch (code) {
        case ErrorCode::invalid_argument: return RBSDE_ERR_INVALID_ARGUMENT;
        case ErrorCode::config: return RBSDE_ERR_CONFIG;
        case ErrorCode::numeric_blowup: return RBSDE_ERR_NUMERIC;
        case ErrorCode::singular_volatility: return RBSDE_ERR_SINGULAR_VOLATILITY;
        case ErrorCode::bound_violation: return RBSDE_ERR_BOUND_VIOLATION;
        case ErrorCode::io: return RBSDE_ERR_IO;
        case ErrorCode::internal: return RBSDE_ERR_INTERNAL;
    }
    return RBSDE_ERR_INTERNAL;
}

template <typename Fn>
rbsde_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const rbsde::Error& e) {
        g_last_error = e.what();
        return status_from(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RBSDE_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return RBSDE_ERR_INTERNAL;
    }
}

rbsde_status run_impl(const std::string& config_json, const char* out_dir,
                      const uint64_t* seed_override, rbsde_artifact** out) {
    if (out == nullptr) {
        g_last_error = "output handle must not be NULL";
        return RBSDE_ERR_INVALID_ARGUMENT;
    }
    *out = nullptr;
    return guarded([&]() -> rbsde_status {
        rbsde::ExperimentConfig config = rbsde::parse_experiment_config(config_json);
        std::optional<std::string> dir;
        if (out_dir != nullptr) dir = std::string(out_dir);
        std::optional<std::uint64_t> seed;
        if (seed_override != nullptr) seed = *seed_override;
        rbsde::RunArtifact artifact = rbsde::run_experiment(config, dir, seed);
        *out = new rbsde_artifact{std::move(artifact)};
        return RBSDE_OK;
    });
}

} // namespace

extern "C" {

const char* rbsde_version(void) { return rbsde::kVersion; }

const char* rbsde_last_error(void) { return g_last_error.c_str(); }

rbsde_status rbsde_run_config_json(const char* config_json, const char* out_dir,
                                   const uint64_t* seed_override,
                                   rbsde_artifact** out) {
    if (config_json == nullptr) {
        g_last_error = "config_json must not be NULL";
        return RBSDE_ERR_INVALID_ARGUMENT;
    }
    return run_impl(config_json, out_dir, seed_override, out);
}

rbsde_status rbsde_run_config_file(const char* config_path, const char* out_dir,
                                   const uint64_t* seed_override,
                                   rbsde_artifact** out) {
    if (config_path == nullptr) {
        g_last_error = "config_path must not be NULL";
        return RBSDE_ERR_INVALID_ARGUMENT;
    }
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
        g_last_error = std::string("cannot read config file ") + config_path;
        return RBSDE_ERR_IO;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return run_impl(ss.str(), out_dir, seed_override, out);
}

const char* rbsde_artifact_output_dir(const rbsde_artifact* artifact) {
    return artifact ? artifact->inner.output_dir.c_str() : "";
}

const char* rbsde_artifact_csv_path(const rbsde_artifact* artifact) {
    return artifact ? artifact->inner.csv_path.c_str() : "";
}

const char* rbsde_artifact_summary_json(const rbsde_artifact* artifact) {
    return artifact ? artifact->inner.summary_json.c_str() : "";
}

void rbsde_artifact_free(rbsde_artifact* artifact) { delete artifact; }

rbsde_status rbsde_validate(uint64_t seed, rbsde_report** out) {
    if (out == nullptr) {
        g_last_error = "output handle must not be NULL";
        return RBSDE_ERR_INVALID_ARGUMENT;
    }
    *out = nullptr;
    return guarded([&]() -> rbsde_status {
        rbsde::ValidationReport report = rbsde::validate_suite(seed);
        auto* handle = new rbsde_report{std::move(report), {}};
        handle->json_bytes = handle->inner.to_bytes();
        *out = handle;
        return RBSDE_OK;
    });
}

const char* rbsde_report_json(const rbsde_report* report) {
    return report ? report->json_bytes.c_str() : "";
}

int rbsde_report_check_count(const rbsde_report* report) {
    return report ? static_cast<int>(report->inner.checks.size()) : 0;
}

int rbsde_report_failed_count(const rbsde_report* report) {
    if (!report) return 0;
    int failed = 0;
    for (const auto& c : report->inner.checks) {
        if (!c.passed) ++failed;
    }
    return failed;
}

int rbsde_report_all_passed(const rbsde_report* report) {
    return report && report->inner.all_passed ? 1 : 0;
}

const char* rbsde_report_check_name(const rbsde_report* report, int index) {
    if (!report || index < 0 ||
        index >= static_cast<int>(report->inner.checks.size())) {
        return "";
    }
    return report->inner.checks[static_cast<std::size_t>(index)].name.c_str();
}

int rbsde_report_check_passed(const rbsde_report* report, int index) {
    if (!report || index < 0 ||
        index >= static_cast<int>(report->inner.checks.size())) {
        return 0;
    }
    return report->inner.checks[static_cast<std::size_t>(index)].passed ? 1 : 0;
}

void rbsde_report_free(rbsde_report* report) { delete report; }

} // extern "C"
