#include "robust.hpp"

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>

namespace rbsde {

namespace {

Eigen::MatrixXd slice_features(const StateArray& states, std::size_t node) {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(states.paths()),
                      static_cast<Eigen::Index>(states.dim()));
    for (std::size_t m = 0; m < states.paths(); ++m) {
        for (std::size_t k = 0; k < states.dim(); ++k) {
            f(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
                states.at(m, node, k);
        }
    }
    return f;
}

// (H)(3): Lipschitz declaration spot-checked on random cells and random
// (y, z) pairs; f(., 0, 0) and xi sampled for square integrability.
void check_standing_assumptions(const RobustProblem& problem,
                                const PathEnsemble& state, const TimeGrid& grid,
                                std::uint64_t seed) {
    rng::Stream rnd(rng::derive_seed(seed, 0x68636865636bULL));
    const std::size_t M = state.paths(), N = grid.steps(), d = state.dim();
    const double K = problem.generator.lipschitz;

    double xi_sq = 0.0, f0_sq = 0.0;
    const std::size_t samples = std::min<std::size_t>(M, 256);
    for (std::size_t s = 0; s < samples; ++s) {
        double xi = problem.terminal(state.states, s * (M / samples));
        xi_sq += xi * xi;
    }
    require(std::isfinite(xi_sq), ErrorCode::invalid_argument,
            "(H)(3): terminal value fails the square-integrability sample check");

    Vector zero = Vector::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t s = 0; s < 128; ++s) {
        const std::size_t m = rnd.next_index(M), i = rnd.next_index(N);
        const double t = grid.time(i);
        Vector x = state.states.vec(m, i);
        double f0 = problem.generator(t, x, 0.0, zero);
        f0_sq += f0 * f0;

        double y1 = rnd.next_uniform(-2.0, 2.0), y2 = rnd.next_uniform(-2.0, 2.0);
        Vector z1(static_cast<Eigen::Index>(d)), z2(static_cast<Eigen::Index>(d));
        for (std::size_t k = 0; k < d; ++k) {
            z1(static_cast<Eigen::Index>(k)) = rnd.next_uniform(-2.0, 2.0);
            z2(static_cast<Eigen::Index>(k)) = rnd.next_uniform(-2.0, 2.0);
        }
        double lhs = std::fabs(problem.generator(t, x, y1, z1) -
                               problem.generator(t, x, y2, z2));
        double rhs = K * (std::fabs(y1 - y2) + (z1 - z2).norm());
        if (!(lhs <= rhs * (1.0 + 1e-9) + 1e-9)) {
            fail(ErrorCode::invalid_argument,
                 "(H)(3): generator violates its declared Lipschitz constant " +
                     std::to_string(K));
        }
    }
    require(std::isfinite(f0_sq), ErrorCode::invalid_argument,
            "(H)(3): f(., 0, 0) fails the square-integrability sample check");
}

double theta_family_bound(const IntervalBounds& bounds) {
    double b = 0.0;
    if (bounds.lower.bound()) b = std::max(b, *bounds.lower.bound());
    if (bounds.upper.bound()) b = std::max(b, *bounds.upper.bound());
    return b;
}

} // namespace

ThetaMember theta_member_from_field(std::string label, const VectorField& field,
                                    const PathEnsemble& state, const TimeGrid& grid) {
    return ThetaMember{std::move(label), eval_field_on_paths(field, state, grid), false};
}

RobustSolution solve_robust(const RobustProblem& problem, const BrownianEnsemble& bm,
                            const RobustOptions& options) {
    const TimeGrid& grid = bm.grid;
    RobustSolution sol;
    sol.state = simulate_ito(problem.state_spec, bm);

    sol.bounds_report = validate_bounds(problem.bounds, sol.state, grid);
    if (!sol.bounds_report.clean()) {
        const auto& v = sol.bounds_report.violations.front();
        fail(ErrorCode::bound_violation,
             "(H): interval bounds invalid (" + v.what + " at path " +
                 std::to_string(v.path) + ", step " + std::to_string(v.step) + "), " +
                 std::to_string(sol.bounds_report.violations.size()) + " violation(s)");
    }
    check_standing_assumptions(problem, sol.state, grid, options.verification_seed);

    // Transformed generator: the box supremum has the closed bang-bang form.
    BsdeProblem classical;
    classical.terminal = problem.terminal;
    classical.generator.lipschitz =
        problem.generator.lipschitz + theta_family_bound(problem.bounds);
    classical.generator.f = [gen = problem.generator, bounds = problem.bounds](
                                double t, const Vector& x, double y, const Vector& z) {
        return robust_generator(gen, bounds, t, x, y, z);
    };

    if (options.use_picard) {
        PicardOptions popts = options.picard;
        if (popts.beta == 0.0) {
            popts.beta = picard_beta(problem.generator.lipschitz,
                                     theta_family_bound(problem.bounds),
                                     grid.horizon());
        }
        popts.solve = options.solve;
        sol.classical = solve_bsde_picard(classical, sol.state, bm, popts);
    } else {
        sol.classical = solve_bsde_lsmc(classical, sol.state, bm, options.solve);
    }

    const std::size_t M = bm.paths(), N = grid.steps(), d = bm.dim();
    sol.theta_hat = CellArray(M, N, d);
    sol.zhat = CellArray(M, N, d);
    sol.s_hat = PathEnsemble{problem.state_spec, StateArray(M, N + 1, d)};

    const bool sigma_const = problem.state_spec.sigma.is_constant();
    Matrix sigma_cached;
    if (sigma_const) sigma_cached = problem.state_spec.sigma(0.0, problem.state_spec.x0);

    parallel_for(M, [&](std::size_t mb, std::size_t me) {
        for (std::size_t m = mb; m < me; ++m) {
            Vector s = problem.state_spec.x0;
            for (std::size_t k = 0; k < d; ++k) sol.s_hat.states.at(m, 0, k) = s(k);
            for (std::size_t i = 0; i < N; ++i) {
                const double t = grid.time(i), dt = grid.dt(i);
                Vector x = sol.state.states.vec(m, i);
                Vector z = sol.classical.z.vec(m, i);
                Vector theta = worst_case_theta(problem.bounds, t, x, z);
                Matrix sig_x = sigma_const ? sigma_cached : problem.state_spec.sigma(t, x);
                Vector zh = sig_x.transpose().partialPivLu().solve(z);
                for (std::size_t k = 0; k < d; ++k) {
                    sol.theta_hat.at(m, i, k) = theta(k);
                    sol.zhat.at(m, i, k) = zh(k);
                }
                // Worst-case driver on the same noise, with its own states.
                Matrix sig_s = sigma_const ? sigma_cached : problem.state_spec.sigma(t, s);
                if (!sigma_const)
                    check_invertible(sig_s, problem.state_spec.condition_cap, m, i);
                s = s + sig_s * (theta * dt + bm.dw.vec(m, i));
                for (std::size_t k = 0; k < d; ++k)
                    sol.s_hat.states.at(m, i + 1, k) = s(k);
            }
        }
    });

    if (options.run_verification) {
        std::vector<ThetaMember> family;
        family.push_back(ThetaMember{"theta_hat", sol.theta_hat, true});
        family.push_back(
            theta_member_from_field("lower", problem.bounds.lower, sol.state, grid));
        family.push_back(
            theta_member_from_field("upper", problem.bounds.upper, sol.state, grid));
        auto mix_field = [&](double u, std::string label) {
            VectorField f(
                problem.bounds.dim(),
                [lo = problem.bounds.lower, hi = problem.bounds.upper, u](
                    double t, const Vector& x) -> Vector {
                    Vector h = lo(t, x), g = hi(t, x);
                    return h + u * (g - h);
                },
                std::nullopt, false, label);
            return theta_member_from_field(std::move(label), f, sol.state, grid);
        };
        family.push_back(mix_field(0.5, "midpoint"));
        rng::Stream rnd(rng::derive_seed(options.verification_seed, 0x656d617274ULL));
        for (unsigned r = 0; r < options.random_members; ++r) {
            family.push_back(
                mix_field(rnd.next_uniform(), "random_" + std::to_string(r)));
        }

        std::vector<std::size_t> checkpoints;
        for (double f : options.checkpoint_fractions) {
            std::size_t i = grid.nearest_index(f * grid.horizon());
            if (i == 0 || i >= N) continue;
            checkpoints.push_back(i);
        }
        sol.emartingale = verify_e_martingale(sol, family, checkpoints, bm,
                                              options.solve.basis_degree);
    }
    return sol;
}

SublinearEstimate sublinear_expectation(const Eigen::VectorXd& terminal_values,
                                        std::size_t t_index,
                                        const std::vector<ThetaMember>& family,
                                        const PathEnsemble& state,
                                        const BrownianEnsemble& bm,
                                        unsigned basis_degree) {
    require(!family.empty(), ErrorCode::invalid_argument,
            "sublinear expectation: family must not be empty");
    const std::size_t M = state.paths(), N = bm.grid.steps();
    require(static_cast<std::size_t>(terminal_values.size()) == M,
            ErrorCode::invalid_argument,
            "sublinear expectation: one terminal value per path required");
    require(t_index < N + 1, ErrorCode::invalid_argument,
            "sublinear expectation: time index off the grid");

    SublinearEstimate est;
    est.member_values.resize(static_cast<Eigen::Index>(M),
                             static_cast<Eigen::Index>(family.size()));
    Eigen::MatrixXd features;
    if (t_index > 0) features = slice_features(state.states, t_index);

    for (std::size_t k = 0; k < family.size(); ++k) {
        est.member_labels.push_back(family[k].label);
        DensityPaths dens = girsanov_density(family[k].values, bm);
        Eigen::VectorXd target(static_cast<Eigen::Index>(M));
        for (std::size_t m = 0; m < M; ++m) {
            const double ratio =
                std::exp(dens.log_lambda.at(m, N) - dens.log_lambda.at(m, t_index));
            target(static_cast<Eigen::Index>(m)) = ratio * terminal_values(
                                                               static_cast<Eigen::Index>(m));
        }
        if (t_index == 0) {
            est.member_values.col(static_cast<Eigen::Index>(k)).setConstant(
                target.mean());
        } else {
            FitResult fit = conditional_expectation(features, target, basis_degree);
            est.member_values.col(static_cast<Eigen::Index>(k)) = fit.fitted;
        }
    }

    est.values.resize(static_cast<Eigen::Index>(M));
    est.argmax.resize(M, 0);
    for (std::size_t m = 0; m < M; ++m) {
        Eigen::Index which = 0;
        est.values(static_cast<Eigen::Index>(m)) =
            est.member_values.row(static_cast<Eigen::Index>(m)).maxCoeff(&which);
        est.argmax[m] = static_cast<int>(which);
    }
    return est;
}

EMartReport verify_e_martingale(const RobustSolution& sol,
                                const std::vector<ThetaMember>& family,
                                const std::vector<std::size_t>& checkpoint_indices,
                                const BrownianEnsemble& bm, unsigned basis_degree) {
    const TimeGrid& grid = bm.grid;
    const std::size_t M = bm.paths(), N = grid.steps(), d = bm.dim();

    // Increments of int Zhat . dS_hat written in the driver's own units:
    // Z . (theta_hat dt + dW) per cell, which telescopes exactly against
    // the transformed generator.
    CellArray incr(M, N, 1);
    parallel_for(M, [&](std::size_t mb, std::size_t me) {
        for (std::size_t m = mb; m < me; ++m) {
            for (std::size_t i = 0; i < N; ++i) {
                const double dt = grid.dt(i);
                double v = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    v += sol.classical.z.at(m, i, k) *
                         (sol.theta_hat.at(m, i, k) * dt + bm.dw.at(m, i, k));
                }
                incr.at(m, i, 0) = v;
            }
        }
    });

    EMartReport report;
    report.selected_zero = true;
    report.all_supermartingale = true;
    bool saw_selected = false;

    for (const ThetaMember& member : family) {
        // Pricing measure of the driver with market price of risk theta:
        // Girsanov parameter is -theta.
        CellArray neg(M, N, d);
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t k = 0; k < d; ++k)
                    neg.at(m, i, k) = -member.values.at(m, i, k);
        DensityPaths dens = girsanov_density(neg, bm);

        EMartMemberReport row;
        row.label = member.label;
        row.is_selected = member.is_selected;
        row.zero_within_tol = true;
        row.supermartingale_ok = true;

        for (std::size_t idx : checkpoint_indices) {
            Eigen::VectorXd tail(static_cast<Eigen::Index>(M));
            Eigen::VectorXd target(static_cast<Eigen::Index>(M));
            for (std::size_t m = 0; m < M; ++m) {
                double s = 0.0;
                for (std::size_t i = idx; i < N; ++i) s += incr.at(m, i, 0);
                tail(static_cast<Eigen::Index>(m)) = s;
                const double w =
                    std::exp(dens.log_lambda.at(m, N) - dens.log_lambda.at(m, idx));
                target(static_cast<Eigen::Index>(m)) = w * s;
            }

            Eigen::MatrixXd features = slice_features(sol.state.states, idx);
            PolynomialBasis basis(features, basis_degree);
            FitResult fit = fit_least_squares(basis.design_matrix(features), target);

            EMartCheckpointStat stat;
            stat.index = idx;
            stat.time = grid.time(idx);
            stat.mean = fit.fitted.mean();
            const double target_sd = std::sqrt(
                (target.array() - target.mean()).square().sum() /
                static_cast<double>(M > 1 ? M - 1 : 1));
            stat.se_mean = target_sd / std::sqrt(static_cast<double>(M));
            stat.rms = std::sqrt(fit.fitted.squaredNorm() / static_cast<double>(M));
            stat.noise_scale =
                fit.residual_rms *
                std::sqrt(static_cast<double>(basis.size()) / static_cast<double>(M));

            const double zero_tol =
                3.0 * stat.noise_scale + 3.0 * stat.se_mean + 1e-12;
            if (!(std::fabs(stat.mean) <= 3.0 * stat.se_mean + 1e-12) ||
                !(stat.rms <= zero_tol)) {
                row.zero_within_tol = false;
            }
            if (!(stat.mean <= 3.0 * stat.se_mean + 1e-12)) {
                row.supermartingale_ok = false;
            }
            row.checkpoints.push_back(stat);
        }

        if (member.is_selected) {
            saw_selected = true;
            report.selected_zero = report.selected_zero && row.zero_within_tol;
        }
        report.all_supermartingale =
            report.all_supermartingale && row.supermartingale_ok;
        report.members.push_back(std::move(row));
    }

    require(saw_selected, ErrorCode::invalid_argument,
            "verification: family must include the selected worst-case process");
    report.pass = report.selected_zero && report.all_supermartingale;
    return report;
}

RepresentationResult martingale_representation(const PayoffFn& terminal,
                                               const IntervalBounds& bounds,
                                               const ItoSpec& state_spec,
                                               const BrownianEnsemble& bm,
                                               const RobustOptions& options) {
    RobustProblem problem;
    problem.generator = GeneratorSpec::zero();
    problem.terminal = terminal;
    problem.bounds = bounds;
    problem.state_spec = state_spec;

    RepresentationResult result;
    result.solution = solve_robust(problem, bm, options);

    const TimeGrid& grid = bm.grid;
    const std::size_t M = bm.paths(), N = grid.steps(), d = bm.dim();
    const RobustSolution& sol = result.solution;

    result.x0 = sol.classical.y0;
    result.x0_se = sol.classical.y0_se;
    double y0_min = sol.classical.y.at(0, 0), y0_max = y0_min;
    for (std::size_t m = 1; m < M; ++m) {
        y0_min = std::min(y0_min, sol.classical.y.at(m, 0));
        y0_max = std::max(y0_max, sol.classical.y.at(m, 0));
    }
    result.y0_spread = y0_max - y0_min;

    result.residuals.resize(M);
    double sq = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        double integral = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double dt = grid.dt(i);
            for (std::size_t k = 0; k < d; ++k) {
                integral += sol.classical.z.at(m, i, k) *
                            (sol.theta_hat.at(m, i, k) * dt + bm.dw.at(m, i, k));
            }
        }
        double r = sol.classical.y.at(m, N) - result.x0 - integral;
        result.residuals[m] = r;
        sq += r * r;
    }
    result.residual_rms = std::sqrt(sq / static_cast<double>(M));
    return result;
}

CompareReport compare_solutions(const RobustProblem& problem_a,
                                const RobustProblem& problem_b,
                                const BrownianEnsemble& bm,
                                const RobustOptions& options,
                                double violation_fraction_cap) {
    const TimeGrid& grid = bm.grid;
    RobustOptions opts = options;
    opts.run_verification = false;

    RobustSolution a = solve_robust(problem_a, bm, opts);
    RobustSolution b = solve_robust(problem_b, bm, opts);
    const std::size_t M = bm.paths(), N = grid.steps(), d = bm.dim();

    CompareReport report;
    report.y0_a = a.classical.y0;
    report.y0_b = b.classical.y0;
    report.se_a = a.classical.y0_se;
    report.se_b = b.classical.y0_se;

    // Preconditions are sampled, and reported rather than thrown.
    for (std::size_t m = 0; m < M; ++m) {
        if (problem_a.terminal(a.state.states, m) <
            problem_b.terminal(a.state.states, m) - 1e-12) {
            ++report.terminal_order_violations;
        }
    }
    rng::Stream rnd(rng::derive_seed(options.verification_seed, 0x636d70ULL));
    for (std::size_t s = 0; s < 256; ++s) {
        const std::size_t m = rnd.next_index(M), i = rnd.next_index(N);
        const double t = grid.time(i);
        Vector x = a.state.states.vec(m, i);
        double y = rnd.next_uniform(-2.0, 2.0);
        Vector z(static_cast<Eigen::Index>(d));
        for (std::size_t k = 0; k < d; ++k)
            z(static_cast<Eigen::Index>(k)) = rnd.next_uniform(-2.0, 2.0);
        if (problem_a.generator(t, x, y, z) < problem_b.generator(t, x, y, z) - 1e-12) {
            ++report.generator_order_violations;
        }
    }
    report.preconditions_ok = report.terminal_order_violations == 0 &&
                              report.generator_order_violations == 0;

    report.y0_ordered =
        report.y0_a >= report.y0_b - 3.0 * (report.se_a + report.se_b);

    // Cellwise ordering with a per-slice tolerance from the regression
    // noise of both solves.
    for (std::size_t i = 1; i < N; ++i) {
        const auto& da = a.classical.sweeps[i];
        const auto& db = b.classical.sweeps[i];
        const double se_a =
            da.y_residual_rms *
            std::sqrt(static_cast<double>(da.basis_size) / static_cast<double>(M));
        const double se_b =
            db.y_residual_rms *
            std::sqrt(static_cast<double>(db.basis_size) / static_cast<double>(M));
        const double tol = 3.0 * (se_a + se_b) + 1e-9;
        for (std::size_t m = 0; m < M; ++m) {
            ++report.cells_checked;
            if (a.classical.y.at(m, i) < b.classical.y.at(m, i) - tol) {
                ++report.cell_violations;
            }
        }
    }
    report.cell_violation_fraction =
        report.cells_checked == 0
            ? 0.0
            : static_cast<double>(report.cell_violations) /
                  static_cast<double>(report.cells_checked);
    report.pass = report.preconditions_ok && report.y0_ordered &&
                  report.cell_violation_fraction <= violation_fraction_cap;
    return report;
}

} // namespace rbsde
