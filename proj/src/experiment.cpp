#include "experiment.hpp"

#include "errors.hpp"
#include "validation.hpp"
#include "version.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace rbsde {

namespace fs = std::filesystem;

std::string format_csv_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v,
                             std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

const std::set<std::string> kKinds = {"price", "robust-solve", "validate",
                                      "converge", "compare"};

class ConfigErrors {
public:
    void add(const std::string& msg) { messages_.push_back(msg); }
    void check() const {
        if (messages_.empty()) return;
        std::string joined = "config invalid:";
        for (const auto& m : messages_) joined += "\n  - " + m;
        fail(ErrorCode::config, joined);
    }
    bool empty() const { return messages_.empty(); }

private:
    std::vector<std::string> messages_;
};

template <typename T>
T get_or(const Json& j, const std::string& key, T fallback) {
    if (j.contains(key)) return j.at(key).get<T>();
    return fallback;
}

PayoffConfig parse_payoff(const Json& j, ConfigErrors& errors,
                          const std::string& where) {
    PayoffConfig p;
    if (!j.is_object()) {
        errors.add(where + ": must be an object");
        return p;
    }
    p.type = get_or<std::string>(j, "type", "call");
    if (p.type != "call" && p.type != "put" && p.type != "digital" &&
        p.type != "forward") {
        errors.add(where + ".type: unknown payoff '" + p.type + "'");
    }
    p.strike = get_or<double>(j, "strike", 0.0);
    p.scale = get_or<double>(j, "scale", 1.0);
    p.shift = get_or<double>(j, "shift", 0.0);
    if ((p.type == "call" || p.type == "put" || p.type == "digital") &&
        !j.contains("strike")) {
        errors.add(where + ".strike: required for payoff '" + p.type + "'");
    }
    return p;
}

GeneratorConfig parse_generator(const Json& j, ConfigErrors& errors,
                                const std::string& where) {
    GeneratorConfig g;
    if (!j.is_object()) {
        errors.add(where + ": must be an object");
        return g;
    }
    g.type = get_or<std::string>(j, "type", "zero");
    if (g.type == "linear") {
        g.alpha = get_or<double>(j, "alpha", 0.0);
        g.phi = get_or<double>(j, "phi", 0.0);
        g.gamma = get_or<std::vector<double>>(j, "gamma", {});
    } else if (g.type == "sin") {
        g.a = get_or<double>(j, "a", 0.0);
        g.b = get_or<double>(j, "b", 0.0);
    } else if (g.type != "zero") {
        errors.add(where + ".type: unknown generator '" + g.type + "'");
    }
    return g;
}

BoundFieldConfig parse_bound_field(const Json& j, ConfigErrors& errors,
                                   const std::string& where) {
    BoundFieldConfig b;
    if (!j.is_object()) {
        errors.add(where + ": must be an object");
        return b;
    }
    b.form = get_or<std::string>(j, "form", "constant");
    if (b.form == "constant") {
        if (!j.contains("value")) {
            errors.add(where + ".value: required for constant form");
        } else {
            b.value = j.at("value").get<std::vector<double>>();
        }
    } else if (b.form == "affine") {
        if (!j.contains("intercept") || !j.contains("slope")) {
            errors.add(where + ": affine form needs intercept and slope");
        } else {
            b.intercept = j.at("intercept").get<std::vector<double>>();
            b.slope = j.at("slope").get<std::vector<double>>();
        }
        b.bound = get_or<double>(j, "bound", 0.0);
        if (b.bound <= 0.0) {
            errors.add(where + ".bound: affine form needs a positive declared bound");
        }
    } else {
        errors.add(where + ".form: unknown form '" + b.form + "'");
    }
    return b;
}

Json emit_payoff(const PayoffConfig& p) {
    Json j;
    j["type"] = p.type;
    j["strike"] = p.strike;
    j["scale"] = p.scale;
    j["shift"] = p.shift;
    return j;
}

Json emit_generator(const GeneratorConfig& g) {
    Json j;
    j["type"] = g.type;
    if (g.type == "linear") {
        j["alpha"] = g.alpha;
        j["gamma"] = g.gamma;
        j["phi"] = g.phi;
    } else if (g.type == "sin") {
        j["a"] = g.a;
        j["b"] = g.b;
    }
    return j;
}

Json emit_bound_field(const BoundFieldConfig& b) {
    Json j;
    j["form"] = b.form;
    if (b.form == "constant") {
        j["value"] = b.value;
    } else {
        j["intercept"] = b.intercept;
        j["slope"] = b.slope;
        j["bound"] = b.bound;
    }
    return j;
}

bool needs_market(const std::string& kind) {
    return kind == "price" || kind == "robust-solve" || kind == "converge" ||
           kind == "compare";
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(ErrorCode::io, "short write to " + path.string());
}

double occupancy_lower_fraction(const RobustSolution& sol) {
    const auto& z = sol.classical.z;
    std::size_t positive = 0, total = z.paths() * z.steps() * z.dim();
    for (std::size_t m = 0; m < z.paths(); ++m)
        for (std::size_t i = 0; i < z.steps(); ++i)
            for (std::size_t k = 0; k < z.dim(); ++k)
                if (z.at(m, i, k) > 0.0) ++positive;
    return total == 0 ? 0.0
                      : static_cast<double>(positive) / static_cast<double>(total);
}

Json sweeps_to_json(const BsdeSolution& sol) {
    Json y_res = Json::array(), z_res = Json::array();
    bool any_deficient = false;
    for (const auto& s : sol.sweeps) {
        y_res.push_back(s.y_residual_rms);
        z_res.push_back(s.z_residual_rms);
        any_deficient = any_deficient || s.rank_deficient;
    }
    Json j;
    j["y_residual_rms"] = std::move(y_res);
    j["z_residual_rms"] = std::move(z_res);
    j["rank_deficient"] = any_deficient;
    if (!sol.gamma_history.empty()) {
        j["gamma_history"] = sol.gamma_history;
        j["iterations"] = sol.iterations;
        j["converged"] = sol.converged;
    }
    return j;
}

Json emart_to_json(const EMartReport& report) {
    Json members = Json::array();
    for (const auto& m : report.members) {
        Json row;
        row["label"] = m.label;
        row["is_selected"] = m.is_selected;
        row["zero_within_tol"] = m.zero_within_tol;
        row["supermartingale_ok"] = m.supermartingale_ok;
        Json cps = Json::array();
        for (const auto& c : m.checkpoints) {
            Json cp;
            cp["index"] = c.index;
            cp["time"] = c.time;
            cp["mean"] = c.mean;
            cp["se_mean"] = c.se_mean;
            cp["rms"] = c.rms;
            cp["noise_scale"] = c.noise_scale;
            cps.push_back(std::move(cp));
        }
        row["checkpoints"] = std::move(cps);
        members.push_back(std::move(row));
    }
    Json j;
    j["members"] = std::move(members);
    j["selected_zero"] = report.selected_zero;
    j["all_supermartingale"] = report.all_supermartingale;
    j["pass"] = report.pass;
    return j;
}

struct ExperimentOutput {
    std::string csv;
    Json diagnostics;
    Json summary;
    // Failed *checks* still produce artifacts (the report is the
    // product); the error is raised only after everything is written.
    std::string check_failure;
};

std::string hedge_csv_row(const std::string& run_id, const HedgeResult& h) {
    return run_id + "," + format_csv_number(h.price) + "," +
           format_csv_number(h.price_se) + "," +
           format_csv_number(h.occupancy_lower) + "," +
           format_csv_number(h.occupancy_upper) + "," +
           format_csv_number(h.residual_rms) + "\n";
}

constexpr const char* kHedgeCsvHeader =
    "run_id,price,std_error,occupancy_h,occupancy_g,residual_rms\n";

ExperimentOutput run_price(const ExperimentConfig& config) {
    TimeGrid grid(config.horizon, config.steps);
    BrownianEnsemble bm = simulate_brownian(grid, config.paths, config.dim, config.seed);
    MarketSpec market = build_market(config);
    IntervalBounds bounds{build_bound_field(config.lower, config.dim, "h"),
                          build_bound_field(config.upper, config.dim, "g")};
    RobustOptions options;
    options.solve.basis_degree = config.basis_degree;
    options.run_verification = false;
    HedgeResult hedge = superhedge_price(market, bounds, bm, options);

    ExperimentOutput out;
    out.csv = std::string(kHedgeCsvHeader) + hedge_csv_row(config.label, hedge);
    out.diagnostics["solver"] = sweeps_to_json(hedge.robust.classical);
    out.diagnostics["discrepancy"] = {
        {"cells_sampled", hedge.discrepancy.cells_sampled},
        {"cells_differing", hedge.discrepancy.cells_differing},
        {"mean_abs_gap", hedge.discrepancy.mean_abs_gap},
        {"max_abs_gap", hedge.discrepancy.max_abs_gap},
        {"solver_uses", hedge.discrepancy.solver_uses}};
    out.diagnostics["payoff_std"] = hedge.payoff_std;
    out.diagnostics["residual_max"] = hedge.residual_max;
    out.summary["price"] = hedge.price;
    out.summary["std_error"] = hedge.price_se;
    return out;
}

ExperimentOutput run_robust_solve(const ExperimentConfig& config) {
    TimeGrid grid(config.horizon, config.steps);
    BrownianEnsemble bm = simulate_brownian(grid, config.paths, config.dim, config.seed);
    MarketSpec market = build_market(config);
    RobustProblem problem;
    problem.generator = build_generator(config.generator, config.dim);
    problem.terminal = market.payoff;
    problem.bounds = IntervalBounds{build_bound_field(config.lower, config.dim, "h"),
                                    build_bound_field(config.upper, config.dim, "g")};
    problem.state_spec = market.to_ito_spec();

    RobustOptions options;
    options.solve.basis_degree = config.basis_degree;
    options.use_picard = config.method == "picard";
    options.verification_seed = config.seed;
    RobustSolution sol = solve_robust(problem, bm, options);

    // Triplet-identity residual: xi - Y_0 + sum fhat dt - sum Zhat . dShat.
    double residual_sq = 0.0;
    for (std::size_t m = 0; m < config.paths; ++m) {
        double acc = sol.classical.y.at(m, config.steps) - sol.classical.y0;
        for (std::size_t i = 0; i < config.steps; ++i) {
            const double t = grid.time(i), dt = grid.dt(i);
            acc += robust_generator(problem.generator, problem.bounds, t,
                                    sol.state.states.vec(m, i),
                                    sol.classical.y.at(m, i + 1),
                                    sol.classical.z.vec(m, i)) *
                   dt;
            for (std::size_t k = 0; k < config.dim; ++k) {
                acc -= sol.classical.z.at(m, i, k) *
                       (sol.theta_hat.at(m, i, k) * dt + bm.dw.at(m, i, k));
            }
        }
        residual_sq += acc * acc;
    }
    const double residual_rms =
        std::sqrt(residual_sq / static_cast<double>(config.paths));

    double occ_lower = occupancy_lower_fraction(sol);
    ExperimentOutput out;
    out.csv = std::string(kHedgeCsvHeader) + config.label + "," +
              format_csv_number(sol.classical.y0) + "," +
              format_csv_number(sol.classical.y0_se) + "," +
              format_csv_number(occ_lower) + "," +
              format_csv_number(1.0 - occ_lower) + "," +
              format_csv_number(residual_rms) + "\n";
    out.diagnostics["solver"] = sweeps_to_json(sol.classical);
    out.diagnostics["e_martingale"] = emart_to_json(sol.emartingale);
    out.diagnostics["bounds_points_checked"] = sol.bounds_report.points_checked;
    out.summary["price"] = sol.classical.y0;
    out.summary["std_error"] = sol.classical.y0_se;
    out.summary["e_martingale_pass"] = sol.emartingale.pass;
    if (!sol.emartingale.pass) {
        out.check_failure = "robust-solve: sublinear-martingale verification failed";
    }
    return out;
}

ExperimentOutput run_converge(const ExperimentConfig& config) {
    MarketSpec market = build_market(config);
    IntervalBounds bounds{build_bound_field(config.lower, config.dim, "h"),
                          build_bound_field(config.upper, config.dim, "g")};
    RobustOptions options;
    options.solve.basis_degree = config.basis_degree;
    options.run_verification = false;

    ExperimentOutput out;
    out.csv = kHedgeCsvHeader;
    Json residuals = Json::array();
    for (std::size_t n : config.steps_list) {
        TimeGrid grid(config.horizon, n);
        BrownianEnsemble bm =
            simulate_brownian(grid, config.paths, config.dim, config.seed);
        HedgeResult hedge = superhedge_price(market, bounds, bm, options);
        out.csv += hedge_csv_row(config.label + "_N" + std::to_string(n), hedge);
        residuals.push_back(Json{{"steps", n}, {"residual_rms", hedge.residual_rms}});
    }
    out.diagnostics["refinement"] = std::move(residuals);
    out.summary["runs"] = config.steps_list.size();
    return out;
}

ExperimentOutput run_compare(const ExperimentConfig& config) {
    TimeGrid grid(config.horizon, config.steps);
    BrownianEnsemble bm = simulate_brownian(grid, config.paths, config.dim, config.seed);
    MarketSpec market = build_market(config);
    IntervalBounds bounds{build_bound_field(config.lower, config.dim, "h"),
                          build_bound_field(config.upper, config.dim, "g")};

    RobustProblem a, b;
    a.generator = build_generator(config.generator, config.dim);
    a.terminal = build_payoff(config.payoff);
    a.bounds = bounds;
    a.state_spec = market.to_ito_spec();
    b = a;
    b.generator = build_generator(config.generator_b, config.dim);
    b.terminal = build_payoff(config.payoff_b);

    RobustOptions options;
    options.solve.basis_degree = config.basis_degree;
    options.verification_seed = config.seed;
    CompareReport report = compare_solutions(a, b, bm, options);

    ExperimentOutput out;
    out.csv = "run_id,y0_a,y0_b,se_a,se_b,violation_fraction,pass\n";
    out.csv += config.label + "," + format_csv_number(report.y0_a) + "," +
               format_csv_number(report.y0_b) + "," + format_csv_number(report.se_a) +
               "," + format_csv_number(report.se_b) + "," +
               format_csv_number(report.cell_violation_fraction) + "," +
               (report.pass ? "1" : "0") + "\n";
    out.diagnostics["terminal_order_violations"] = report.terminal_order_violations;
    out.diagnostics["generator_order_violations"] = report.generator_order_violations;
    out.diagnostics["cells_checked"] = report.cells_checked;
    out.diagnostics["cell_violations"] = report.cell_violations;
    out.summary["pass"] = report.pass;
    if (!report.pass) out.check_failure = "compare: comparison-theorem check failed";
    return out;
}

ExperimentOutput run_validate(const ExperimentConfig& config) {
    ValidationReport report = validate_suite(config.seed);
    ExperimentOutput out;
    out.csv = "check,passed\n";
    for (const auto& c : report.checks) {
        out.csv += c.name + std::string(",") + (c.passed ? "1" : "0") + "\n";
    }
    out.diagnostics = report.to_json();
    out.summary["all_passed"] = report.all_passed;
    out.summary["checks"] = report.checks.size();
    if (!report.all_passed) out.check_failure = "validate: one or more checks failed";
    return out;
}

} // namespace

PayoffFn build_payoff(const PayoffConfig& payoff) {
    const double strike = payoff.strike, scale = payoff.scale, shift = payoff.shift;
    if (payoff.type == "call") {
        return terminal_state_payoff([strike, scale, shift](const Vector& x) {
            return scale * std::max(x(0) - strike, 0.0) + shift;
        });
    }
    if (payoff.type == "put") {
        return terminal_state_payoff([strike, scale, shift](const Vector& x) {
            return scale * std::max(strike - x(0), 0.0) + shift;
        });
    }
    if (payoff.type == "digital") {
        return terminal_state_payoff([strike, scale, shift](const Vector& x) {
            return (x(0) > strike ? scale : 0.0) + shift;
        });
    }
    if (payoff.type == "forward") {
        return terminal_state_payoff(
            [scale, shift](const Vector& x) { return scale * x(0) + shift; });
    }
    fail(ErrorCode::config, "unknown payoff type '" + payoff.type + "'");
}

GeneratorSpec build_generator(const GeneratorConfig& generator, std::size_t dim) {
    if (generator.type == "zero") return GeneratorSpec::zero();
    if (generator.type == "linear") {
        require(generator.gamma.empty() || generator.gamma.size() == dim,
                ErrorCode::config, "generator.gamma: dimension mismatch");
        Vector gamma = Vector::Zero(static_cast<Eigen::Index>(dim));
        for (std::size_t k = 0; k < generator.gamma.size(); ++k)
            gamma(static_cast<Eigen::Index>(k)) = generator.gamma[k];
        GeneratorSpec gen;
        gen.lipschitz = std::max(std::fabs(generator.alpha),
                                 gamma.lpNorm<Eigen::Infinity>());
        gen.f = [alpha = generator.alpha, phi = generator.phi, gamma](
                    double, const Vector&, double y, const Vector& z) {
            return phi + alpha * y + z.dot(gamma);
        };
        return gen;
    }
    if (generator.type == "sin") {
        GeneratorSpec gen;
        gen.lipschitz = std::max(std::fabs(generator.a),
                                 std::fabs(generator.b) *
                                     std::sqrt(static_cast<double>(dim)));
        gen.f = [a = generator.a, b = generator.b](double, const Vector&, double y,
                                                   const Vector& z) {
            return a * std::sin(y) + b * z.sum();
        };
        return gen;
    }
    fail(ErrorCode::config, "unknown generator type '" + generator.type + "'");
}

VectorField build_bound_field(const BoundFieldConfig& field, std::size_t dim,
                              const std::string& name) {
    auto to_vec = [dim](const std::vector<double>& v) {
        Vector out(static_cast<Eigen::Index>(dim));
        for (std::size_t k = 0; k < dim; ++k) out(static_cast<Eigen::Index>(k)) = v[k];
        return out;
    };
    if (field.form == "constant") {
        require(field.value.size() == dim, ErrorCode::config,
                "bounds '" + name + "': value dimension mismatch");
        return VectorField::constant(to_vec(field.value), name);
    }
    require(field.intercept.size() == dim && field.slope.size() == dim,
            ErrorCode::config, "bounds '" + name + "': affine dimension mismatch");
    return VectorField::affine(to_vec(field.intercept), to_vec(field.slope),
                               field.bound, name);
}

MarketSpec build_market(const ExperimentConfig& config) {
    const std::size_t d = config.dim;
    MarketSpec market;
    market.x0.resize(static_cast<Eigen::Index>(d));
    Vector mu(static_cast<Eigen::Index>(d));
    Matrix sigma(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
        market.x0(static_cast<Eigen::Index>(i)) = config.x0[i];
        mu(static_cast<Eigen::Index>(i)) = config.mu[i];
        for (std::size_t j = 0; j < d; ++j)
            sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                config.sigma[i][j];
    }
    market.mu_rel = VectorField::constant(mu, "mu");
    market.sigma_rel = MatrixField::constant(sigma, "sigma");
    market.payoff = build_payoff(config.payoff);
    return market;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
    }
    ConfigErrors errors;
    ExperimentConfig c;

    if (!j.is_object()) {
        errors.add("top level: must be a JSON object");
        errors.check();
    }
    c.experiment = get_or<std::string>(j, "experiment", "");
    if (!kKinds.count(c.experiment)) {
        errors.add("experiment: must be one of price, robust-solve, validate, "
                   "converge, compare (got '" + c.experiment + "')");
    }
    c.label = get_or<std::string>(j, "label", "run");
    c.output_dir = get_or<std::string>(j, "output_dir", "out");

    if (j.contains("grid") && j.at("grid").is_object()) {
        const Json& g = j.at("grid");
        c.horizon = get_or<double>(g, "horizon", 1.0);
        c.steps = get_or<std::size_t>(g, "steps", 50);
        if (!(c.horizon > 0.0)) errors.add("grid.horizon: must be positive");
        if (c.steps < 1) errors.add("grid.steps: must be at least 1");
    } else if (c.experiment != "validate") {
        errors.add("grid: required object with horizon and steps");
    }

    if (j.contains("ensemble") && j.at("ensemble").is_object()) {
        const Json& e = j.at("ensemble");
        c.paths = get_or<std::size_t>(e, "paths", 100000);
        c.dim = get_or<std::size_t>(e, "dimension", 1);
        if (e.contains("seed")) {
            c.seed = e.at("seed").get<std::uint64_t>();
            c.seed_set = true;
        } else {
            errors.add("ensemble.seed: required (reproducibility contract)");
        }
        if (c.paths < 1) errors.add("ensemble.paths: must be at least 1");
        if (c.dim < 1) errors.add("ensemble.dimension: must be at least 1");
    } else {
        errors.add("ensemble: required object with paths, dimension, seed");
    }

    c.basis_degree = get_or<unsigned>(j, "basis_degree", 3);
    if (c.basis_degree < 1 || c.basis_degree > 8)
        errors.add("basis_degree: must be between 1 and 8");
    c.method = get_or<std::string>(j, "method", "lsmc");
    if (c.method != "lsmc" && c.method != "picard")
        errors.add("method: must be lsmc or picard");

    if (needs_market(c.experiment)) {
        if (j.contains("market") && j.at("market").is_object()) {
            const Json& mk = j.at("market");
            c.x0 = get_or<std::vector<double>>(mk, "x0", {});
            c.mu = get_or<std::vector<double>>(mk, "mu", {});
            if (mk.contains("sigma")) {
                c.sigma = mk.at("sigma").get<std::vector<std::vector<double>>>();
            }
            if (c.x0.size() != c.dim) errors.add("market.x0: need one entry per dimension");
            if (c.mu.size() != c.dim) errors.add("market.mu: need one entry per dimension");
            if (c.sigma.size() != c.dim) {
                errors.add("market.sigma: need a dim x dim matrix");
            } else {
                for (const auto& row : c.sigma)
                    if (row.size() != c.dim) {
                        errors.add("market.sigma: need a dim x dim matrix");
                        break;
                    }
            }
        } else {
            errors.add("market: required object with x0, mu, sigma");
        }
        if (j.contains("payoff")) {
            c.payoff = parse_payoff(j.at("payoff"), errors, "payoff");
        } else {
            errors.add("payoff: required object");
        }
        if (j.contains("bounds") && j.at("bounds").is_object()) {
            const Json& b = j.at("bounds");
            if (b.contains("lower"))
                c.lower = parse_bound_field(b.at("lower"), errors, "bounds.lower");
            else
                errors.add("bounds.lower: required");
            if (b.contains("upper"))
                c.upper = parse_bound_field(b.at("upper"), errors, "bounds.upper");
            else
                errors.add("bounds.upper: required");
        } else {
            errors.add("bounds: required object with lower and upper");
        }
    }

    if (c.experiment == "robust-solve" || c.experiment == "compare") {
        if (j.contains("generator"))
            c.generator = parse_generator(j.at("generator"), errors, "generator");
    }
    if (c.experiment == "compare") {
        if (j.contains("payoff_b"))
            c.payoff_b = parse_payoff(j.at("payoff_b"), errors, "payoff_b");
        else
            errors.add("payoff_b: required for compare");
        if (j.contains("generator_b"))
            c.generator_b = parse_generator(j.at("generator_b"), errors, "generator_b");
    }
    if (c.experiment == "converge") {
        c.steps_list = get_or<std::vector<std::size_t>>(j, "steps_list", {});
        if (c.steps_list.empty()) errors.add("steps_list: required for converge");
        for (std::size_t n : c.steps_list)
            if (n < 1) errors.add("steps_list: entries must be at least 1");
    }

    errors.check();
    return c;
}

std::string emit_experiment_config(const ExperimentConfig& c) {
    Json j;
    j["experiment"] = c.experiment;
    j["label"] = c.label;
    if (c.experiment != "validate") {
        j["grid"] = Json{{"horizon", c.horizon}, {"steps", c.steps}};
    }
    j["ensemble"] = Json{{"paths", c.paths}, {"dimension", c.dim}, {"seed", c.seed}};
    j["basis_degree"] = c.basis_degree;
    if (c.experiment == "robust-solve") j["method"] = c.method;
    if (needs_market(c.experiment)) {
        j["market"] = Json{{"x0", c.x0}, {"mu", c.mu}, {"sigma", c.sigma}};
        j["payoff"] = emit_payoff(c.payoff);
        j["bounds"] =
            Json{{"lower", emit_bound_field(c.lower)}, {"upper", emit_bound_field(c.upper)}};
    }
    if (c.experiment == "robust-solve" || c.experiment == "compare") {
        j["generator"] = emit_generator(c.generator);
    }
    if (c.experiment == "compare") {
        j["payoff_b"] = emit_payoff(c.payoff_b);
        j["generator_b"] = emit_generator(c.generator_b);
    }
    if (c.experiment == "converge") j["steps_list"] = c.steps_list;
    j["output_dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

RunArtifact run_experiment(const ExperimentConfig& config,
                           const std::optional<std::string>& out_override,
                           const std::optional<std::uint64_t>& seed_override) {
    ExperimentConfig resolved = config;
    if (seed_override) {
        resolved.seed = *seed_override;
        resolved.seed_set = true;
    }
    if (out_override) resolved.output_dir = *out_override;

    // Re-parse the canonical form so overrides go through the same
    // validation as a fresh config.
    resolved = parse_experiment_config(emit_experiment_config(resolved));

    ExperimentOutput output;
    if (resolved.experiment == "price") {
        output = run_price(resolved);
    } else if (resolved.experiment == "robust-solve") {
        output = run_robust_solve(resolved);
    } else if (resolved.experiment == "converge") {
        output = run_converge(resolved);
    } else if (resolved.experiment == "compare") {
        output = run_compare(resolved);
    } else if (resolved.experiment == "validate") {
        output = run_validate(resolved);
    } else {
        fail(ErrorCode::config, "unknown experiment kind");
    }

    Json stamp;
    stamp["version"] = kVersion;
    stamp["seed"] = resolved.seed;
    output.diagnostics["stamp"] = stamp;
    output.summary["experiment"] = resolved.experiment;
    output.summary["label"] = resolved.label;
    output.summary["version"] = kVersion;
    output.summary["seed"] = resolved.seed;

    const fs::path out_dir(resolved.output_dir);
    const fs::path tmp_dir(resolved.output_dir + ".partial");
    std::error_code ec;
    fs::remove_all(tmp_dir, ec);
    if (out_dir.has_parent_path()) fs::create_directories(out_dir.parent_path(), ec);
    if (!fs::create_directories(tmp_dir)) {
        fail(ErrorCode::io, "cannot create output directory " + tmp_dir.string());
    }
    write_text_file(tmp_dir / "results.csv", output.csv);
    write_text_file(tmp_dir / "diagnostics.json", output.diagnostics.dump(2) + "\n");
    write_text_file(tmp_dir / "config_echo.json", emit_experiment_config(resolved));
    write_text_file(tmp_dir / "summary.json", output.summary.dump(2) + "\n");

    if (fs::exists(out_dir)) {
        if (!fs::is_directory(out_dir) || !fs::is_empty(out_dir)) {
            fs::remove_all(tmp_dir, ec);
            fail(ErrorCode::io,
                 "output directory " + out_dir.string() + " already exists");
        }
        fs::remove(out_dir);
    }
    fs::rename(tmp_dir, out_dir);

    if (!output.check_failure.empty()) {
        fail(ErrorCode::numeric_blowup, output.check_failure);
    }

    RunArtifact artifact;
    artifact.output_dir = out_dir.string();
    artifact.csv_path = (out_dir / "results.csv").string();
    artifact.diagnostics_path = (out_dir / "diagnostics.json").string();
    artifact.config_echo_path = (out_dir / "config_echo.json").string();
    artifact.summary_json = output.summary.dump(2) + "\n";
    return artifact;
}

} // namespace rbsde
