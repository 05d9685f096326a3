#include "errors.hpp"
#include "experiment.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rbsde;
namespace fs = std::filesystem;

namespace {

std::string price_config(const std::string& out_dir, std::size_t paths = 4000,
                         std::uint64_t seed = 7) {
    Json j;
    j["experiment"] = "price";
    j["label"] = "unit";
    j["grid"] = Json{{"horizon", 1.0}, {"steps", 10}};
    j["ensemble"] = Json{{"paths", paths}, {"dimension", 1}, {"seed", seed}};
    j["market"] = Json{{"x0", Json::array({100.0})},
                       {"mu", Json::array({0.06})},
                       {"sigma", Json::array({Json::array({0.2})})}};
    j["payoff"] = Json{{"type", "call"}, {"strike", 100.0}};
    j["bounds"] =
        Json{{"lower", Json{{"form", "constant"}, {"value", Json::array({0.1})}}},
             {"upper", Json{{"form", "constant"}, {"value", Json::array({0.3})}}}};
    j["output_dir"] = out_dir;
    return j.dump();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name)
        : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

} // namespace

TEST_CASE("config echo round-trips exactly") {
    ExperimentConfig c = parse_experiment_config(price_config("out/x"));
    const std::string emitted = emit_experiment_config(c);
    ExperimentConfig reparsed = parse_experiment_config(emitted);
    CHECK(emit_experiment_config(reparsed) == emitted);
}

TEST_CASE("validation lists every problem at once") {
    Json j;
    j["experiment"] = "price";
    j["grid"] = Json{{"horizon", -1.0}, {"steps", 10}};
    j["ensemble"] = Json{{"paths", 100}, {"dimension", 1}}; // seed missing
    // market, payoff, bounds all missing
    try {
        parse_experiment_config(j.dump());
        FAIL("expected config error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::config);
        const std::string msg = e.what();
        CHECK(msg.find("ensemble.seed") != std::string::npos);
        CHECK(msg.find("grid.horizon") != std::string::npos);
        CHECK(msg.find("market") != std::string::npos);
        CHECK(msg.find("payoff") != std::string::npos);
        CHECK(msg.find("bounds") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_experiment_config("not json at all"), Error);
    CHECK_THROWS_AS(parse_experiment_config("{\"experiment\":\"bogus\"}"), Error);
}

TEST_CASE("price experiment writes deterministic artifacts") {
    Scratch scratch("rbsde-test-exp");
    const std::string out_a = (scratch.dir / "a").string();
    ExperimentConfig config = parse_experiment_config(price_config(out_a));
    RunArtifact artifact = run_experiment(config, std::nullopt, std::nullopt);

    CHECK(fs::exists(artifact.csv_path));
    CHECK(fs::exists(artifact.diagnostics_path));
    CHECK(fs::exists(artifact.config_echo_path));

    const std::string csv = slurp(artifact.csv_path);
    CHECK(csv.rfind("run_id,price,std_error,occupancy_h,occupancy_g,residual_rms\n",
                    0) == 0);
    CHECK(csv.find("unit,") != std::string::npos);
    // 17-significant-digit serialization in play.
    CHECK(format_csv_number(0.1) == "0.10000000000000001");
    CHECK(format_csv_number(1.0) == "1");

    // Re-running the echoed config reproduces the CSV byte for byte.
    ExperimentConfig echoed = parse_experiment_config(slurp(artifact.config_echo_path));
    RunArtifact again =
        run_experiment(echoed, (scratch.dir / "b").string(), std::nullopt);
    CHECK(slurp(again.csv_path) == csv);

    // Seed override changes the echo and the results.
    RunArtifact other = run_experiment(config, (scratch.dir / "c").string(),
                                       std::uint64_t{12345});
    CHECK(slurp(other.csv_path) != csv);
    CHECK(slurp(other.config_echo_path).find("12345") != std::string::npos);
}

TEST_CASE("no artifacts are written when the run cannot start") {
    Scratch scratch("rbsde-test-exp-fail");
    const std::string out = (scratch.dir / "never").string();
    // Flipped bounds pass parsing but fail (H) validation inside the solve.
    Json j = Json::parse(price_config(out));
    j["bounds"]["lower"]["value"] = Json::array({0.5});
    j["bounds"]["upper"]["value"] = Json::array({0.1});
    ExperimentConfig config = parse_experiment_config(j.dump());
    CHECK_THROWS_AS(run_experiment(config, std::nullopt, std::nullopt), Error);
    CHECK_FALSE(fs::exists(out));
    CHECK_FALSE(fs::exists(out + ".partial"));
}

TEST_CASE("existing non-empty output directories are refused") {
    Scratch scratch("rbsde-test-exp-clobber");
    const fs::path out = scratch.dir / "occupied";
    fs::create_directories(out);
    std::ofstream(out / "keep.txt") << "do not clobber\n";
    ExperimentConfig config = parse_experiment_config(price_config(out.string()));
    CHECK_THROWS_WITH_AS(run_experiment(config, std::nullopt, std::nullopt),
                         doctest::Contains("already exists"), Error);
    CHECK(slurp(out / "keep.txt") == "do not clobber\n");
}

TEST_CASE("converge experiment emits one row per step count") {
    Scratch scratch("rbsde-test-exp-conv");
    Json j = Json::parse(price_config((scratch.dir / "conv").string(), 2000));
    j["experiment"] = "converge";
    j["steps_list"] = Json::array({5, 10});
    ExperimentConfig config = parse_experiment_config(j.dump());
    RunArtifact artifact = run_experiment(config, std::nullopt, std::nullopt);
    const std::string csv = slurp(artifact.csv_path);
    CHECK(csv.find("unit_N5,") != std::string::npos);
    CHECK(csv.find("unit_N10,") != std::string::npos);
}

TEST_CASE("compare experiment reports the ordering") {
    Scratch scratch("rbsde-test-exp-cmp");
    Json j = Json::parse(price_config((scratch.dir / "cmp").string(), 4000));
    j["experiment"] = "compare";
    j["payoff"] = Json{{"type", "call"}, {"strike", 100.0}, {"shift", 1.0}};
    j["payoff_b"] = Json{{"type", "call"}, {"strike", 100.0}};
    ExperimentConfig config = parse_experiment_config(j.dump());
    RunArtifact artifact = run_experiment(config, std::nullopt, std::nullopt);
    const std::string csv = slurp(artifact.csv_path);
    CHECK(csv.rfind("run_id,y0_a,y0_b,", 0) == 0);
    CHECK(csv.find(",1\n") != std::string::npos); // pass column
}
