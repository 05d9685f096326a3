#include "validation.hpp"

#include "errors.hpp"
#include "experiment.hpp"
#include "hedging.hpp"
#include "rng.hpp"
#include "version.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rbsde {

namespace fs = std::filesystem;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Closed-form European call, zero rate (the numeraire is 1 throughout).
double bs_call(double s0, double strike, double sigma, double horizon) {
    const double sd = sigma * std::sqrt(horizon);
    const double d1 = (std::log(s0 / strike) + 0.5 * sigma * sigma * horizon) / sd;
    const double d2 = d1 - sd;
    return s0 * normal_cdf(d1) - strike * normal_cdf(d2);
}

PayoffFn call_payoff(double strike) {
    return terminal_state_payoff(
        [strike](const Vector& x) { return std::max(x(0) - strike, 0.0); });
}

MarketSpec gbm_market(double s0, double mu, double sigma, PayoffFn payoff) {
    MarketSpec market;
    market.x0 = Vector::Constant(1, s0);
    market.mu_rel = VectorField::constant(Vector::Constant(1, mu), "mu");
    market.sigma_rel = MatrixField::constant(Matrix::Constant(1, 1, sigma), "sigma");
    market.payoff = std::move(payoff);
    return market;
}

ItoSpec brownian_state(std::size_t dim) {
    ItoSpec spec;
    spec.x0 = Vector::Zero(static_cast<Eigen::Index>(dim));
    spec.mu = VectorField::zero(dim);
    spec.sigma = MatrixField::identity(dim);
    return spec;
}

// ---------------------------------------------------------------------
// 1. Box supremum against a dumb grid search.

CheckResult check_box_sup_oracle(std::uint64_t seed) {
    rng::Stream rnd(seed);
    const std::size_t instances = 1000;
    const std::size_t grid_points = 1001;

    double max_value_err = 0.0;
    std::size_t argmax_mismatches = 0, consistency_failures = 0;

    for (std::size_t inst = 0; inst < instances; ++inst) {
        const std::size_t d = (inst < 700) ? 1 : 2;
        Vector h(static_cast<Eigen::Index>(d)), g(static_cast<Eigen::Index>(d)),
            z(static_cast<Eigen::Index>(d));
        for (std::size_t k = 0; k < d; ++k) {
            h(static_cast<Eigen::Index>(k)) = rnd.next_uniform(-1.0, 1.0);
            g(static_cast<Eigen::Index>(k)) =
                h(static_cast<Eigen::Index>(k)) + rnd.next_uniform(0.01, 1.0);
            z(static_cast<Eigen::Index>(k)) = rnd.next_uniform(-2.0, 2.0);
        }
        const double f0 = rnd.next_uniform(-1.0, 1.0);

        GeneratorSpec gen{[f0](double, const Vector&, double, const Vector&) {
                              return f0;
                          },
                          0.0, true};
        IntervalBounds bounds = IntervalBounds::constant(h, g);
        const Vector x = Vector::Zero(static_cast<Eigen::Index>(d));
        const double closed = robust_generator(gen, bounds, 0.5, x, 0.7, z);
        const Vector theta_hat = worst_case_theta(bounds, 0.5, x, z);

        // Exhaustive grid over the box, endpoints pinned exactly.
        auto grid_value = [&](std::size_t k, std::size_t j) {
            const double lo = h(static_cast<Eigen::Index>(k));
            const double hi = g(static_cast<Eigen::Index>(k));
            if (j == grid_points - 1) return hi;
            return lo + static_cast<double>(j) * (hi - lo) /
                            static_cast<double>(grid_points - 1);
        };
        double best = -std::numeric_limits<double>::infinity();
        Vector best_theta(static_cast<Eigen::Index>(d));
        if (d == 1) {
            for (std::size_t j = 0; j < grid_points; ++j) {
                const double th = grid_value(0, j);
                const double v = f0 - th * z(0);
                if (v > best) {
                    best = v;
                    best_theta(0) = th;
                }
            }
        } else {
            for (std::size_t j0 = 0; j0 < grid_points; ++j0) {
                const double th0 = grid_value(0, j0);
                const double base = f0 - th0 * z(0);
                for (std::size_t j1 = 0; j1 < grid_points; ++j1) {
                    const double th1 = grid_value(1, j1);
                    const double v = base - th1 * z(1);
                    if (v > best) {
                        best = v;
                        best_theta(0) = th0;
                        best_theta(1) = th1;
                    }
                }
            }
        }

        max_value_err = std::max(max_value_err, std::fabs(closed - best));
        for (std::size_t k = 0; k < d; ++k) {
            if (std::fabs(best_theta(static_cast<Eigen::Index>(k)) -
                          theta_hat(static_cast<Eigen::Index>(k))) > 1e-12) {
                ++argmax_mismatches;
                break;
            }
        }
        const double via_selector = f0 - theta_hat.dot(z);
        if (std::fabs(via_selector - closed) > 1e-12) ++consistency_failures;
    }

    CheckResult r;
    r.name = "box_sup_oracle";
    r.passed = max_value_err <= 1e-10 && argmax_mismatches == 0 &&
               consistency_failures == 0;
    r.details = {{"instances", instances},
                 {"max_value_error", max_value_err},
                 {"argmax_mismatches", argmax_mismatches},
                 {"selector_consistency_failures", consistency_failures}};
    return r;
}

// ---------------------------------------------------------------------
// 2. Density pasting identity at a stopping time.

CheckResult check_pasting_identity(std::uint64_t seed) {
    const std::size_t M = 20000, N = 50;
    TimeGrid grid(1.0, N);

    double worst = 0.0;
    Json configs = Json::array();

    auto run_config = [&](const std::string& label, std::size_t d,
                          const VectorField& f1, const VectorField& f2,
                          const std::vector<std::size_t>& tau) {
        BrownianEnsemble bm = simulate_brownian(grid, M, d, rng::derive_seed(seed, 7));
        PathEnsemble state = simulate_ito(brownian_state(d), bm);
        CellArray th1 = eval_field_on_paths(f1, state, grid);
        CellArray th2 = eval_field_on_paths(f2, state, grid);
        CellArray pasted = paste_thetas(th1, th2, tau);
        DensityPaths l1 = girsanov_density(th1, bm);
        DensityPaths l2 = girsanov_density(th2, bm);
        DensityPaths lp = girsanov_density(pasted, bm);
        double err = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            const std::size_t t = tau[m];
            const double lhs = lp.log_lambda.at(m, N);
            const double rhs = l1.log_lambda.at(m, t) + l2.log_lambda.at(m, N) -
                               l2.log_lambda.at(m, t);
            err = std::max(err, std::fabs(lhs - rhs));
        }
        worst = std::max(worst, err);
        configs.push_back(Json{{"label", label}, {"max_abs_log_error", err}});
    };

    std::vector<std::size_t> mid(M, N / 2);
    run_config("constant-halfway", 1,
               VectorField::constant(Vector::Constant(1, 0.2), "theta1"),
               VectorField::constant(Vector::Constant(1, 0.4), "theta2"), mid);

    rng::Stream rnd(rng::derive_seed(seed, 8));
    std::vector<std::size_t> random_tau(M);
    for (std::size_t m = 0; m < M; ++m) random_tau[m] = rnd.next_index(N + 1);
    Vector a(2), b(2);
    a << 0.3, -0.1;
    b << -0.2, 0.4;
    run_config("d2-random-tau", 2, VectorField::constant(a, "theta1"),
               VectorField::constant(b, "theta2"), random_tau);

    VectorField state_dep(
        1,
        [](double, const Vector& x) -> Vector {
            return Vector::Constant(1, 0.1 + 0.2 * std::tanh(x(0)));
        },
        0.5, false, "theta1");
    std::vector<std::size_t> at_end(M, N);
    run_config("state-dependent-tau-at-T", 1, state_dep,
               VectorField::constant(Vector::Constant(1, -0.3), "theta2"), at_end);

    CheckResult r;
    r.name = "pasting_identity";
    r.passed = worst <= 1e-10;
    r.details = {{"configs", configs}, {"max_abs_log_error", worst}};
    return r;
}

// ---------------------------------------------------------------------
// 3. Collapsed interval reproduces the closed-form call price.

CheckResult check_black_scholes_collapse(std::uint64_t seed) {
    TimeGrid grid(1.0, 50);
    BrownianEnsemble bm = simulate_brownian(grid, 100000, 1, rng::derive_seed(seed, 3));
    MarketSpec market = gbm_market(100.0, 0.06, 0.2, call_payoff(100.0));
    IntervalBounds bounds = IntervalBounds::constant(Vector::Constant(1, 0.3),
                                                     Vector::Constant(1, 0.3));
    RobustOptions options;
    options.run_verification = false;
    HedgeResult hedge = superhedge_price(market, bounds, bm, options);

    const double oracle = bs_call(100.0, 100.0, 0.2, 1.0);
    const double rel_err = std::fabs(hedge.price - oracle) / oracle;

    CheckResult r;
    r.name = "black_scholes_collapse";
    r.passed = rel_err <= 0.01;
    r.details = {{"price", hedge.price},
                 {"oracle", oracle},
                 {"relative_error", rel_err},
                 {"std_error", hedge.price_se}};
    return r;
}

// ---------------------------------------------------------------------
// 4. Linear BSDE against the adjoint closed form.

CheckResult check_linear_oracle(std::uint64_t seed) {
    TimeGrid grid(1.0, 50);
    BrownianEnsemble bm = simulate_brownian(grid, 100000, 1, rng::derive_seed(seed, 4));
    PathEnsemble state = simulate_ito(brownian_state(1), bm);
    VectorField mu_hat = VectorField::zero(1);
    MatrixField sigma_hat = MatrixField::identity(1);

    Json specs = Json::array();
    bool all_ok = true;

    auto run_spec = [&](const std::string& label, const LinearSpec& lin) {
        LinearSolution closed =
            solve_linear_closed_form(lin, mu_hat, sigma_hat, state, bm);
        BsdeProblem problem{make_linear_generator(lin), lin.terminal};
        BsdeSolution lsmc = solve_bsde_lsmc(problem, state, bm);
        const double tol = std::max(0.015 * std::fabs(closed.y0),
                                    3.0 * (closed.y0_se + lsmc.y0_se));
        const bool ok = std::fabs(lsmc.y0 - closed.y0) <= tol;
        all_ok = all_ok && ok;
        specs.push_back(Json{{"label", label},
                             {"closed_form_y0", closed.y0},
                             {"lsmc_y0", lsmc.y0},
                             {"tolerance", tol},
                             {"passed", ok}});
    };

    LinearSpec det;
    det.alpha = ScalarField::constant(0.1, "alpha");
    det.gamma = VectorField::zero(1);
    det.phi = ScalarField::constant(0.0, "phi");
    det.terminal = terminal_state_payoff([](const Vector&) { return 1.0; });
    run_spec("deterministic", det);

    LinearSpec stoch;
    stoch.alpha = ScalarField::constant(0.05, "alpha");
    stoch.gamma = VectorField(
        1,
        [](double, const Vector& x) -> Vector {
            return Vector::Constant(1, 0.3 * std::tanh(x(0)));
        },
        0.3, false, "gamma");
    stoch.phi = ScalarField::constant(0.0, "phi");
    stoch.terminal = terminal_state_payoff([](const Vector& x) { return x(0) + 2.0; });
    run_spec("stochastic-gamma", stoch);

    LinearSpec phi_driven;
    phi_driven.alpha = ScalarField::constant(0.0, "alpha");
    phi_driven.gamma = VectorField::constant(Vector::Constant(1, 0.2), "gamma");
    phi_driven.phi = ScalarField(
        [](double, const Vector& x) { return std::cos(x(0)); }, 1.0, false, "phi");
    phi_driven.terminal =
        terminal_state_payoff([](const Vector& x) { return x(0) * x(0); });
    run_spec("phi-driven", phi_driven);

    CheckResult r;
    r.name = "linear_oracle_agreement";
    r.passed = all_ok;
    r.details = {{"specs", specs}};
    return r;
}

// ---------------------------------------------------------------------
// 5. Picard contraction diagnostics.

CheckResult check_picard_contraction(std::uint64_t seed) {
    TimeGrid grid(1.0, 50);
    BrownianEnsemble bm = simulate_brownian(grid, 100000, 1, rng::derive_seed(seed, 5));
    PathEnsemble state = simulate_ito(brownian_state(1), bm);

    BsdeProblem problem;
    problem.generator =
        GeneratorSpec{[](double, const Vector&, double y, const Vector& z) {
                          return 0.3 * std::sin(y) + 0.2 * z(0);
                      },
                      0.3, true};
    problem.terminal = terminal_state_payoff([](const Vector& x) {
        return std::cos(x(0));
    });

    PicardOptions options;
    options.beta = picard_beta(problem.generator.lipschitz, 0.0, grid.horizon());
    BsdeSolution sol = solve_bsde_picard(problem, state, bm, options);

    bool ratios_ok = true;
    Json ratios = Json::array();
    const auto& h = sol.gamma_history;
    for (std::size_t k = 1; k < h.size(); ++k) {
        if (h[k - 1] <= options.tolerance) break;
        const double ratio = h[k] / h[k - 1];
        ratios.push_back(ratio);
        // By the fourth iterate every successive ratio must contract.
        if (k >= 3 && ratio > 0.9) ratios_ok = false;
    }

    CheckResult r;
    r.name = "picard_contraction";
    r.passed = sol.converged && sol.iterations <= 20 && ratios_ok;
    r.details = {{"iterations", sol.iterations},
                 {"converged", sol.converged},
                 {"beta", options.beta},
                 {"gamma_history", sol.gamma_history},
                 {"ratios", ratios}};
    return r;
}

// ---------------------------------------------------------------------
// 6. Comparison theorem on coupled pairs.

CheckResult check_comparison_theorem(std::uint64_t seed) {
    TimeGrid grid(1.0, 50);
    BrownianEnsemble bm = simulate_brownian(grid, 100000, 1, rng::derive_seed(seed, 6));
    MarketSpec market = gbm_market(100.0, 0.04, 0.2, call_payoff(100.0));
    IntervalBounds bounds = IntervalBounds::constant(Vector::Constant(1, 0.1),
                                                     Vector::Constant(1, 0.3));
    RobustOptions options;
    options.verification_seed = rng::derive_seed(seed, 66);

    Json pairs = Json::array();
    bool all_ok = true;
    auto run_pair = [&](const std::string& label, const RobustProblem& a,
                        const RobustProblem& b) {
        CompareReport rep = compare_solutions(a, b, bm, options);
        all_ok = all_ok && rep.pass;
        pairs.push_back(Json{{"label", label},
                             {"y0_a", rep.y0_a},
                             {"y0_b", rep.y0_b},
                             {"violation_fraction", rep.cell_violation_fraction},
                             {"pass", rep.pass}});
    };

    RobustProblem base;
    base.generator = GeneratorSpec::zero();
    base.terminal = call_payoff(100.0);
    base.bounds = bounds;
    base.state_spec = market.to_ito_spec();

    RobustProblem shifted = base;
    shifted.terminal = terminal_state_payoff(
        [](const Vector& x) { return std::max(x(0) - 100.0, 0.0) + 1.0; });
    run_pair("shifted-terminal", shifted, base);

    RobustProblem driven = base;
    driven.generator =
        GeneratorSpec{[](double, const Vector&, double y, const Vector&) {
                          return 0.05 * (1.0 + std::sin(y));
                      },
                      0.05, true};
    run_pair("larger-generator", driven, base);

    RobustProblem both = base;
    both.terminal = terminal_state_payoff(
        [](const Vector& x) { return std::max(x(0) - 100.0, 0.0) + 0.5; });
    both.generator =
        GeneratorSpec{[](double, const Vector&, double y, const Vector&) {
                          return 0.04 * (1.0 + std::cos(y));
                      },
                      0.04, true};
    run_pair("shifted-terminal-and-generator", both, base);

    CheckResult r;
    r.name = "comparison_theorem";
    r.passed = all_ok;
    r.details = {{"pairs", pairs}};
    return r;
}

// ---------------------------------------------------------------------
// 7. Sublinear-martingale property of the solved triplet.

CheckResult check_e_martingale(std::uint64_t seed) {
    TimeGrid grid(1.0, 50);
    BrownianEnsemble bm = simulate_brownian(grid, 100000, 1, rng::derive_seed(seed, 9));
    MarketSpec market = gbm_market(100.0, 0.06, 0.2, call_payoff(100.0));
    IntervalBounds bounds = IntervalBounds::constant(Vector::Constant(1, 0.1),
                                                     Vector::Constant(1, 0.3));
    RobustOptions options;
    options.verification_seed = rng::derive_seed(seed, 99);
    HedgeResult hedge = superhedge_price(market, bounds, bm, options);
    const RobustSolution& sol = hedge.robust;

    // Negative control: rebuild the triplet with the anti-bang-bang
    // selector; the integral gains positive drift under the correct
    // members and must be caught on the supermartingale side.
    const std::size_t M = bm.paths(), N = grid.steps();
    RobustSolution wrong = sol;
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t i = 0; i < N; ++i) {
            wrong.theta_hat.at(m, i, 0) =
                sol.classical.z.at(m, i, 0) > 0.0 ? 0.3 : 0.1;
        }
    }
    std::vector<ThetaMember> control_family;
    control_family.push_back(ThetaMember{"anti_selector", wrong.theta_hat, true});
    control_family.push_back(ThetaMember{"bang_bang", sol.theta_hat, false});
    std::vector<std::size_t> checkpoints = {grid.nearest_index(0.25),
                                            grid.nearest_index(0.5),
                                            grid.nearest_index(0.75)};
    EMartReport control =
        verify_e_martingale(wrong, control_family, checkpoints, bm);
    bool control_flagged = false;
    for (const auto& member : control.members) {
        if (member.label == "bang_bang" && !member.supermartingale_ok) {
            control_flagged = true;
        }
    }

    CheckResult r;
    r.name = "e_martingale";
    r.passed = sol.emartingale.pass && control_flagged;
    r.details = {{"selected_zero", sol.emartingale.selected_zero},
                 {"all_supermartingale", sol.emartingale.all_supermartingale},
                 {"members", sol.emartingale.members.size()},
                 {"negative_control_flagged", control_flagged}};
    return r;
}

// ---------------------------------------------------------------------
// 8. Martingale representation with trivial bounds.

CheckResult check_martingale_representation(std::uint64_t seed) {
    IntervalBounds trivial = IntervalBounds::constant(Vector::Zero(1), Vector::Zero(1));
    PayoffFn terminal = terminal_state_payoff([](const Vector& x) { return x(0); });
    RobustOptions options;
    options.run_verification = false;

    auto run_at = [&](std::size_t steps) {
        TimeGrid grid(1.0, steps);
        BrownianEnsemble bm =
            simulate_brownian(grid, 100000, 1, rng::derive_seed(seed, 10));
        return martingale_representation(terminal, trivial, brownian_state(1), bm,
                                         options);
    };
    RepresentationResult coarse = run_at(25);
    RepresentationResult fine = run_at(100);

    const bool x0_ok = std::fabs(coarse.x0) <= 3.0 * coarse.x0_se &&
                       std::fabs(fine.x0) <= 3.0 * fine.x0_se;
    // The claim is attainable in-span: with the bracket controls the
    // estimated Z is identically 1 and both residuals sit at rounding
    // level, which counts as having reached the refinement limit.
    const double exact_floor = 1e-10;
    const bool rms_decreases =
        fine.residual_rms < coarse.residual_rms ||
        (fine.residual_rms <= exact_floor && coarse.residual_rms <= exact_floor);

    CheckResult r;
    r.name = "martingale_representation";
    r.passed = x0_ok && rms_decreases &&
               coarse.y0_spread <= 1e-10 && fine.y0_spread <= 1e-10;
    r.details = {{"x0_n25", coarse.x0},
                 {"x0_se_n25", coarse.x0_se},
                 {"x0_n100", fine.x0},
                 {"x0_se_n100", fine.x0_se},
                 {"residual_rms_n25", coarse.residual_rms},
                 {"residual_rms_n100", fine.residual_rms}};
    return r;
}

// ---------------------------------------------------------------------
// 9. Monotonicity in the ambiguity interval.  10. Selector rule.

CheckResult check_monotonicity(std::uint64_t seed, RobustSolution* middle_out) {
    TimeGrid grid(1.0, 50);
    BrownianEnsemble bm = simulate_brownian(grid, 100000, 1, rng::derive_seed(seed, 11));
    MarketSpec market = gbm_market(100.0, 0.04, 0.2, call_payoff(100.0));
    RobustOptions options;
    options.run_verification = false;

    auto price_with = [&](double h, double g, RobustSolution* keep) {
        IntervalBounds bounds = IntervalBounds::constant(Vector::Constant(1, h),
                                                         Vector::Constant(1, g));
        HedgeResult hedge = superhedge_price(market, bounds, bm, options);
        if (keep) *keep = std::move(hedge.robust);
        return std::pair<double, double>(hedge.price, hedge.price_se);
    };

    auto [p1, se1] = price_with(0.2, 0.2, nullptr);
    auto [p2, se2] = price_with(0.1, 0.3, middle_out);
    auto [p3, se3] = price_with(0.0, 0.4, nullptr);

    const bool ordered = p1 <= p2 + 3.0 * (se1 + se2) && p2 <= p3 + 3.0 * (se2 + se3);

    CheckResult r;
    r.name = "ambiguity_monotonicity";
    r.passed = ordered;
    r.details = {{"price_point", p1}, {"price_mid", p2}, {"price_wide", p3},
                 {"se_point", se1},   {"se_mid", se2},   {"se_wide", se3}};
    return r;
}

CheckResult check_selector_rule(const RobustSolution& sol, const TimeGrid& grid) {
    const std::size_t M = sol.classical.z.paths(), N = sol.classical.z.steps();
    std::size_t mismatches = 0, cells = 0;
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t i = 0; i < N; ++i) {
            ++cells;
            const double z = sol.classical.z.at(m, i, 0);
            const double rule = z > 0.0 ? 0.1 : 0.3;
            if (sol.theta_hat.at(m, i, 0) != rule) ++mismatches;
        }
    }
    CheckResult r;
    r.name = "selector_rule_exactness";
    r.passed = mismatches == 0 && cells > 0;
    r.details = {{"cells", cells}, {"mismatches", mismatches},
                 {"grid_steps", grid.steps()}};
    return r;
}

// ---------------------------------------------------------------------
// 11. Volatility-uncertainty example.

CheckResult check_vol_uncertainty(std::uint64_t seed) {
    TimeGrid grid(1.0, 50);
    BrownianEnsemble bm = simulate_brownian(grid, 100000, 1, rng::derive_seed(seed, 12));
    RobustOptions options;
    options.run_verification = false;

    // Zero drift: the theta interval collapses to {0} whatever the sigma
    // labels, so the price is the plain sample mean.
    VolUncertaintyResult zero_drift =
        gbm_vol_uncertainty(100.0, 0.0, 0.15, 0.25, call_payoff(100.0), bm, options);
    const StateArray& states = zero_drift.hedge.robust.state.states;
    double mean_h = 0.0, sq = 0.0;
    const std::size_t M = bm.paths();
    for (std::size_t m = 0; m < M; ++m) {
        const double h = zero_drift.hedge.robust.classical.y.at(m, grid.steps());
        mean_h += h;
        sq += h * h;
    }
    mean_h /= static_cast<double>(M);
    const double se_h =
        std::sqrt(std::max(0.0, sq / static_cast<double>(M) - mean_h * mean_h) /
                  static_cast<double>(M));
    const bool zero_drift_ok =
        std::fabs(zero_drift.hedge.price - mean_h) <=
        3.0 * (zero_drift.hedge.price_se + se_h);
    (void)states;

    // Collapsed interval: classical price.
    VolUncertaintyResult collapsed =
        gbm_vol_uncertainty(100.0, 0.06, 0.2, 0.2, call_payoff(100.0), bm, options);
    const double oracle = bs_call(100.0, 100.0, 0.2, 1.0);
    const bool collapse_ok = std::fabs(collapsed.hedge.price - oracle) <= 0.01 * oracle;

    const bool selectors_ok =
        zero_drift.selector.two_point_consistency == 1.0 &&
        collapsed.selector.two_point_consistency == 1.0 &&
        zero_drift.selector.cells > 0;

    CheckResult r;
    r.name = "vol_uncertainty_example";
    r.passed = zero_drift_ok && collapse_ok && selectors_ok;
    r.details = {{"zero_drift_price", zero_drift.hedge.price},
                 {"driftless_sample_mean", mean_h},
                 {"collapsed_price", collapsed.hedge.price},
                 {"bs_oracle", oracle},
                 {"z_positive_selects", zero_drift.selector.z_positive_selects},
                 {"two_point_consistency",
                  zero_drift.selector.two_point_consistency}};
    return r;
}

// ---------------------------------------------------------------------
// 12. Determinism: echoed config reproduces the CSV byte for byte, and an
// in-process pipeline replay serializes identically.

CheckResult check_determinism(std::uint64_t seed) {
    const fs::path scratch =
        fs::temp_directory_path() / ("rbsde-check12-" + std::to_string(seed));
    std::error_code ec;
    fs::remove_all(scratch, ec);
    fs::create_directories(scratch);

    Json config;
    config["experiment"] = "price";
    config["label"] = "determinism-probe";
    config["grid"] = Json{{"horizon", 1.0}, {"steps", 25}};
    config["ensemble"] =
        Json{{"paths", 20000}, {"dimension", 1}, {"seed", seed ^ 0x5eedULL}};
    config["market"] = Json{{"x0", Json::array({100.0})},
                            {"mu", Json::array({0.06})},
                            {"sigma", Json::array({Json::array({0.2})})}};
    config["payoff"] = Json{{"type", "call"}, {"strike", 100.0}};
    config["bounds"] =
        Json{{"lower", Json{{"form", "constant"}, {"value", Json::array({0.1})}}},
             {"upper", Json{{"form", "constant"}, {"value", Json::array({0.3})}}}};
    config["output_dir"] = (scratch / "run_a").string();

    auto read_file = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    bool csv_identical = false, replay_identical = false;
    std::string detail_msg = "ok";
    try {
        ExperimentConfig parsed = parse_experiment_config(config.dump());
        RunArtifact a = run_experiment(parsed, std::nullopt, std::nullopt);

        // Re-run from the echoed config into a fresh directory.
        ExperimentConfig echoed =
            parse_experiment_config(read_file(a.config_echo_path));
        RunArtifact b = run_experiment(echoed, (scratch / "run_b").string(),
                                       std::nullopt);
        csv_identical = read_file(a.csv_path) == read_file(b.csv_path);

        // In-process replay of a solve pipeline.
        TimeGrid grid(1.0, 25);
        auto run_once = [&] {
            BrownianEnsemble bm =
                simulate_brownian(grid, 20000, 1, rng::derive_seed(seed, 13));
            MarketSpec market = gbm_market(100.0, 0.06, 0.2, call_payoff(100.0));
            IntervalBounds bounds = IntervalBounds::constant(
                Vector::Constant(1, 0.1), Vector::Constant(1, 0.3));
            RobustOptions options;
            options.verification_seed = rng::derive_seed(seed, 14);
            HedgeResult h = superhedge_price(market, bounds, bm, options);
            Json j;
            j["price"] = h.price;
            j["se"] = h.price_se;
            j["residual_rms"] = h.residual_rms;
            j["emart_pass"] = h.robust.emartingale.pass;
            Json stats = Json::array();
            for (const auto& member : h.robust.emartingale.members)
                for (const auto& cp : member.checkpoints)
                    stats.push_back(Json::array({cp.mean, cp.rms}));
            j["emart_stats"] = std::move(stats);
            return j.dump();
        };
        replay_identical = run_once() == run_once();
    } catch (const Error& e) {
        detail_msg = e.what();
    }
    fs::remove_all(scratch, ec);

    CheckResult r;
    r.name = "determinism";
    r.passed = csv_identical && replay_identical;
    r.details = {{"csv_identical", csv_identical},
                 {"replay_identical", replay_identical},
                 {"note", detail_msg}};
    return r;
}

} // namespace

nlohmann::ordered_json ValidationReport::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["seed"] = seed;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        list.push_back(nlohmann::ordered_json{
            {"name", c.name}, {"passed", c.passed}, {"details", c.details}});
    }
    j["checks"] = std::move(list);
    j["all_passed"] = all_passed;
    return j;
}

std::string ValidationReport::to_bytes() const { return to_json().dump(2) + "\n"; }

ValidationReport validate_suite(std::uint64_t seed) {
    ValidationReport report;
    report.seed = seed;

    report.checks.push_back(check_box_sup_oracle(rng::derive_seed(seed, 1)));
    report.checks.push_back(check_pasting_identity(rng::derive_seed(seed, 2)));
    report.checks.push_back(check_black_scholes_collapse(seed));
    report.checks.push_back(check_linear_oracle(seed));
    report.checks.push_back(check_picard_contraction(seed));
    report.checks.push_back(check_comparison_theorem(seed));
    report.checks.push_back(check_e_martingale(seed));
    report.checks.push_back(check_martingale_representation(seed));

    RobustSolution middle;
    TimeGrid grid(1.0, 50);
    report.checks.push_back(check_monotonicity(seed, &middle));
    report.checks.push_back(check_selector_rule(middle, grid));
    report.checks.push_back(check_vol_uncertainty(seed));
    report.checks.push_back(check_determinism(seed));

    report.all_passed = true;
    for (const auto& c : report.checks) report.all_passed = report.all_passed && c.passed;
    return report;
}

} // namespace rbsde
