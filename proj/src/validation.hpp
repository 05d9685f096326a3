#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace rbsde {

struct CheckResult {
    std::string name;
    bool passed = false;
    nlohmann::ordered_json details;
};

struct ValidationReport {
    std::uint64_t seed = 0;
    std::vector<CheckResult> checks;
    bool all_passed = false;

    nlohmann::ordered_json to_json() const;
    std::string to_bytes() const; // canonical serialization, byte-comparable
};

/// Runs the full oracle/property suite at desk scale (1e5 paths, 50 steps
/// unless a check states otherwise). Deterministic in the seed: two runs
/// with the same seed serialize to identical bytes.
ValidationReport validate_suite(std::uint64_t seed);

} // namespace rbsde
