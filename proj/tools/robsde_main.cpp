// Command-line front end. Links the C API only.

#include <robsde.h>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

namespace {

int exit_code_for(rbsde_status status) {
    switch (status) {
        case RBSDE_OK:
            return 0;
        case RBSDE_ERR_CONFIG:
        case RBSDE_ERR_INVALID_ARGUMENT:
        case RBSDE_ERR_IO:
            return 1;
        default:
            return 2; // numeric failures
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"robsde: robust BSDE Monte Carlo solver and superhedger"};
    app.set_version_flag("--version", std::string(rbsde_version()));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;

    CLI::App* run = app.add_subcommand("run", "Run one experiment from a JSON config");
    run->add_option("--config", config_path, "Path to the experiment config")
        ->required();
    run->add_option("--out", out_dir, "Output directory override");
    run->add_option("--seed", seed, "Ensemble seed override")
        ->each([&](const std::string&) { seed_given = true; });

    CLI::App* validate =
        app.add_subcommand("validate", "Run the oracle/property validation suite");
    validate->add_option("--seed", seed, "Suite seed (default 0)")
        ->each([&](const std::string&) { seed_given = true; });
    std::string report_path;
    validate->add_option("--out", report_path, "Write the report JSON to this file");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        rbsde_artifact* artifact = nullptr;
        const uint64_t* seed_ptr = seed_given ? &seed : nullptr;
        rbsde_status status = rbsde_run_config_file(
            config_path.c_str(), out_dir.empty() ? nullptr : out_dir.c_str(),
            seed_ptr, &artifact);
        if (status != RBSDE_OK) {
            std::fprintf(stderr, "error: %s\n", rbsde_last_error());
            rbsde_artifact_free(artifact);
            return exit_code_for(status);
        }
        std::printf("%s", rbsde_artifact_summary_json(artifact));
        std::printf("artifacts: %s\n", rbsde_artifact_output_dir(artifact));
        rbsde_artifact_free(artifact);
        return 0;
    }

    // validate
    rbsde_report* report = nullptr;
    rbsde_status status = rbsde_validate(seed_given ? seed : 0, &report);
    if (status != RBSDE_OK) {
        std::fprintf(stderr, "error: %s\n", rbsde_last_error());
        rbsde_report_free(report);
        return exit_code_for(status);
    }
    const int count = rbsde_report_check_count(report);
    for (int i = 0; i < count; ++i) {
        std::printf("[%s] %s\n", rbsde_report_check_passed(report, i) ? "PASS" : "FAIL",
                    rbsde_report_check_name(report, i));
    }
    const int failed = rbsde_report_failed_count(report);
    std::printf("%d/%d checks passed\n", count - failed, count);
    if (!report_path.empty()) {
        std::FILE* f = std::fopen(report_path.c_str(), "wb");
        if (f == nullptr) {
            std::fprintf(stderr, "error: cannot write %s\n", report_path.c_str());
            rbsde_report_free(report);
            return 1;
        }
        std::fputs(rbsde_report_json(report), f);
        std::fclose(f);
    } else {
        std::printf("%s", rbsde_report_json(report));
    }
    const bool all_passed = rbsde_report_all_passed(report) == 1;
    rbsde_report_free(report);
    return all_passed ? 0 : 2;
}
