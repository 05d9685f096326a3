// Acceptance suite: runs the full validation suite through the public C
// API at desk scale and prints one line per criterion. The determinism
// criterion additionally requires two runs of the suite with the same
// seed to serialize to identical bytes, so the suite is executed twice.

#include <robsde.h>

#include <cstdio>
#include <cstring>
#include <string>

int main(int argc, char** argv) {
    uint64_t seed = 0;
    if (argc > 1) seed = std::strtoull(argv[1], nullptr, 10);

    std::printf("acceptance suite (seed %llu)\n",
                static_cast<unsigned long long>(seed));

    rbsde_report* first = nullptr;
    if (rbsde_validate(seed, &first) != RBSDE_OK) {
        std::fprintf(stderr, "suite failed to run: %s\n", rbsde_last_error());
        return 2;
    }
    rbsde_report* second = nullptr;
    if (rbsde_validate(seed, &second) != RBSDE_OK) {
        std::fprintf(stderr, "suite replay failed to run: %s\n", rbsde_last_error());
        rbsde_report_free(first);
        return 2;
    }
    const bool report_bytes_identical =
        std::strcmp(rbsde_report_json(first), rbsde_report_json(second)) == 0;

    int failed = 0;
    const int count = rbsde_report_check_count(first);
    if (count < 12) {
        std::fprintf(stderr, "expected at least 12 checks, got %d\n", count);
        rbsde_report_free(first);
        rbsde_report_free(second);
        return 1;
    }
    for (int i = 0; i < count; ++i) {
        const std::string name = rbsde_report_check_name(first, i);
        bool ok = rbsde_report_check_passed(first, i) == 1;
        if (name == "determinism") ok = ok && report_bytes_identical;
        std::printf("criterion %2d %-28s %s\n", i + 1, name.c_str(),
                    ok ? "PASS" : "FAIL");
        if (!ok) ++failed;
    }

    std::printf("report bytes identical across runs: %s\n",
                report_bytes_identical ? "yes" : "NO");
    std::printf("%d/%d criteria passed\n", count - failed, count);

    rbsde_report_free(first);
    rbsde_report_free(second);
    return failed == 0 ? 0 : 1;
}
