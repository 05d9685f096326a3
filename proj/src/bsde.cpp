#include "bsde.hpp"

#include "errors.hpp"
#include "parallel.hpp"

#include <cmath>
#include <utility>

namespace rbsde {

PayoffFn terminal_state_payoff(std::function<double(const Vector&)> fn) {
    return [fn = std::move(fn)](const StateArray& states, std::size_t m) {
        return fn(states.vec(m, states.nodes() - 1));
    };
}

namespace {

using DriverFn = std::function<double(std::size_t m, std::size_t i, double y_next,
                                      const Vector& z)>;

Eigen::MatrixXd slice_features(const StateArray& states, std::size_t node) {
    const std::size_t M = states.paths(), d = states.dim();
    Eigen::MatrixXd f(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(d));
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t k = 0; k < d; ++k) {
            f(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
                states.at(m, node, k);
        }
    }
    return f;
}

Eigen::MatrixXd parallel_design(const PolynomialBasis& basis,
                                const Eigen::MatrixXd& features) {
    Eigen::MatrixXd design(features.rows(), static_cast<Eigen::Index>(basis.size()));
    parallel_for(static_cast<std::size_t>(features.rows()),
                 [&](std::size_t b, std::size_t e) {
                     for (std::size_t m = b; m < e; ++m) {
                         Eigen::Index mi = static_cast<Eigen::Index>(m);
                         basis.eval_row(features.row(mi).transpose(), design.row(mi));
                     }
                 });
    return design;
}

BsdeSolution backward_sweep(const PathEnsemble& state, const BrownianEnsemble& bm,
                            const PayoffFn& terminal, const DriverFn& driver,
                            const SolveOptions& opts) {
    const TimeGrid& grid = bm.grid;
    const std::size_t M = state.paths(), N = grid.steps(), d = state.dim();
    require(M == bm.paths() && d == bm.dim(), ErrorCode::invalid_argument,
            "bsde: state ensemble and Brownian ensemble shapes disagree");

    BsdeSolution sol;
    sol.y = NodeArray(M, N + 1);
    sol.z = CellArray(M, N, d);
    sol.sweeps.resize(N);

    // Terminal slice is the payoff itself, never regressed.
    for (std::size_t m = 0; m < M; ++m) {
        double xi = terminal(state.states, m);
        require(std::isfinite(xi), ErrorCode::numeric_blowup,
                "bsde: non-finite terminal value at path " + std::to_string(m));
        sol.y.at(m, N) = xi;
    }

    // Fit of the value function at the next node, used to center the Z
    // regression and to build its quadratic control variates.
    Eigen::MatrixXd terminal_features = slice_features(state.states, N);
    PolynomialBasis next_basis(terminal_features, opts.basis_degree);
    Eigen::VectorXd next_coeffs;
    {
        Eigen::VectorXd y_terminal(static_cast<Eigen::Index>(M));
        for (std::size_t m = 0; m < M; ++m)
            y_terminal(static_cast<Eigen::Index>(m)) = sol.y.at(m, N);
        next_coeffs =
            fit_least_squares(parallel_design(next_basis, terminal_features), y_terminal)
                .coefficients;
        terminal_features.resize(0, 0);
    }

    const bool sigma_const = state.spec.sigma.is_constant();
    Matrix sigma_cached;
    if (sigma_const) sigma_cached = state.spec.sigma(0.0, state.spec.x0);

    // Because every fit carries an intercept, fitted means equal target
    // means, so Y_0 is exactly the sample mean of xi plus every driver
    // and control-variate term accumulated along the path; that
    // functional provides the honest standard error.
    std::vector<double> driver_sum(M, 0.0);
    for (std::size_t i = N; i-- > 0;) {
        const double t = grid.time(i), dt = grid.dt(i);
        Eigen::MatrixXd features = slice_features(state.states, i);
        PolynomialBasis basis(features, opts.basis_degree);
        Eigen::MatrixXd design = parallel_design(basis, features);
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
        const auto B = static_cast<std::size_t>(design.cols());

        // Centering value and dY/dW sensitivities from the next-node fit,
        // both F_i-measurable, so they shift no conditional expectation.
        Eigen::VectorXd center = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(M));
        Eigen::MatrixXd zeta; // (path, brownian component)
        if (opts.z_control_variates) {
            zeta.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(d));
            parallel_for(M, [&](std::size_t mb, std::size_t me) {
                Eigen::RowVectorXd row(static_cast<Eigen::Index>(next_basis.size()));
                Eigen::MatrixXd grad(static_cast<Eigen::Index>(next_basis.size()),
                                     static_cast<Eigen::Index>(d));
                for (std::size_t m = mb; m < me; ++m) {
                    Eigen::Index mi = static_cast<Eigen::Index>(m);
                    Vector x = state.states.vec(m, i);
                    next_basis.eval_row(x, row);
                    center(mi) = row.dot(next_coeffs);
                    next_basis.eval_grad(x, grad);
                    Vector dydx = grad.transpose() * next_coeffs;
                    Matrix sig = sigma_const ? sigma_cached : state.spec.sigma(t, x);
                    zeta.row(mi) = (sig.transpose() * dydx).transpose();
                }
            });
        }

        // Z regression, one component at a time on the shared factorization.
        Eigen::MatrixXd z_targets(static_cast<Eigen::Index>(M),
                                  static_cast<Eigen::Index>(d));
        parallel_for(M, [&](std::size_t mb, std::size_t me) {
            for (std::size_t m = mb; m < me; ++m) {
                Eigen::Index mi = static_cast<Eigen::Index>(m);
                const double dy = sol.y.at(m, i + 1) - center(mi);
                for (std::size_t k = 0; k < d; ++k) {
                    double num = dy * bm.dw.at(m, i, k);
                    if (opts.z_control_variates) {
                        for (std::size_t l = 0; l < d; ++l) {
                            double bracket = bm.dw.at(m, i, l) * bm.dw.at(m, i, k) -
                                             (l == k ? dt : 0.0);
                            num -= zeta(mi, static_cast<Eigen::Index>(l)) * bracket;
                        }
                    }
                    z_targets(mi, static_cast<Eigen::Index>(k)) = num / dt;
                }
            }
        });

        const bool deficient = cod.rank() < design.cols();
        double z_res_sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            Eigen::VectorXd coeffs = cod.solve(z_targets.col(static_cast<Eigen::Index>(k)));
            Eigen::VectorXd fitted = design * coeffs;
            z_res_sq += (z_targets.col(static_cast<Eigen::Index>(k)) - fitted)
                            .squaredNorm() /
                        static_cast<double>(M);
            for (std::size_t m = 0; m < M; ++m)
                sol.z.at(m, i, k) = fitted(static_cast<Eigen::Index>(m));
        }

        // Explicit driver coupling: f evaluated at the next-node value and
        // the freshly fitted Z. The martingale term Z . dW is subtracted
        // as a control variate: its conditional mean is zero, so the
        // estimand is untouched while the per-sweep fit noise drops an
        // order in dt.
        Eigen::VectorXd y_targets(static_cast<Eigen::Index>(M));
        parallel_for(M, [&](std::size_t mb, std::size_t me) {
            for (std::size_t m = mb; m < me; ++m) {
                const double y_next = sol.y.at(m, i + 1);
                double adjust = driver(m, i, y_next, sol.z.vec(m, i)) * dt;
                if (opts.z_control_variates) {
                    for (std::size_t k = 0; k < d; ++k) {
                        adjust -= sol.z.at(m, i, k) * bm.dw.at(m, i, k);
                    }
                }
                driver_sum[m] += adjust;
                y_targets(static_cast<Eigen::Index>(m)) = y_next + adjust;
            }
        });
        Eigen::VectorXd y_coeffs = cod.solve(y_targets);
        Eigen::VectorXd y_fitted = design * y_coeffs;
        const double y_res_rms =
            std::sqrt((y_targets - y_fitted).squaredNorm() / static_cast<double>(M));
        for (std::size_t m = 0; m < M; ++m) {
            double v = y_fitted(static_cast<Eigen::Index>(m));
            if (!(std::fabs(v) <= opts.blowup_cap)) {
                fail(ErrorCode::numeric_blowup,
                     "bsde: |Y| exceeded cap " + std::to_string(opts.blowup_cap) +
                         " at step " + std::to_string(i));
            }
            sol.y.at(m, i) = v;
        }

        sol.sweeps[i] = SweepDiagnostics{y_res_rms,
                                         std::sqrt(z_res_sq / static_cast<double>(d)),
                                         B, deficient};

        next_basis = std::move(basis);
        next_coeffs = std::move(y_coeffs);
    }

    sol.y0 = sol.y.at(0, 0);
    double sum = 0.0;
    for (std::size_t m = 0; m < M; ++m) sum += sol.y.at(m, N) + driver_sum[m];
    const double mean = sum / static_cast<double>(M);
    double var = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        const double dev = sol.y.at(m, N) + driver_sum[m] - mean;
        var += dev * dev;
    }
    var /= static_cast<double>(M > 1 ? M - 1 : 1);
    sol.y0_se = std::sqrt(var / static_cast<double>(M));
    return sol;
}

} // namespace

BsdeSolution solve_bsde_lsmc(const BsdeProblem& problem, const PathEnsemble& state,
                             const BrownianEnsemble& bm, const SolveOptions& options) {
    const TimeGrid& grid = bm.grid;
    DriverFn driver = [&](std::size_t m, std::size_t i, double y_next,
                          const Vector& z) {
        return problem.generator(grid.time(i), state.states.vec(m, i), y_next, z);
    };
    return backward_sweep(state, bm, problem.terminal, driver, options);
}

double picard_beta(double lipschitz, double drift_bound, double horizon,
                   double bdg_constant) {
    const double kc = lipschitz + drift_bound;
    return 16.0 * kc * kc * (bdg_constant * bdg_constant + 2.0) * (horizon + 1.0);
}

double picard_gamma_norm(const BsdeSolution& a, const BsdeSolution& b, double beta,
                         const TimeGrid& grid) {
    require(a.y.same_shape(b.y) && a.z.same_shape(b.z), ErrorCode::invalid_argument,
            "gamma norm: solutions have different shapes");
    const std::size_t M = a.y.paths(), N = grid.steps(), d = a.z.dim();
    require(a.y.nodes() == N + 1, ErrorCode::invalid_argument,
            "gamma norm: solutions do not match the grid");

    std::vector<double> weight(N + 1);
    for (std::size_t i = 0; i <= N; ++i) weight[i] = std::exp(beta * grid.time(i));

    double sup_term = 0.0, int_term = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        double sup = 0.0;
        for (std::size_t i = 0; i <= N; ++i) {
            double dy = a.y.at(m, i) - b.y.at(m, i);
            sup = std::max(sup, weight[i] * dy * dy);
        }
        sup_term += sup;
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double dz2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                double dz = a.z.at(m, i, k) - b.z.at(m, i, k);
                dz2 += dz * dz;
            }
            acc += weight[i] * dz2 * grid.dt(i);
        }
        int_term += acc;
    }
    const double inv_m = 1.0 / static_cast<double>(M);
    return std::sqrt(sup_term * inv_m + int_term * inv_m);
}

BsdeSolution solve_bsde_picard(const BsdeProblem& problem, const PathEnsemble& state,
                               const BrownianEnsemble& bm,
                               const PicardOptions& options) {
    const TimeGrid& grid = bm.grid;
    const std::size_t M = state.paths(), N = grid.steps(), d = state.dim();

    BsdeSolution prev;
    prev.y = NodeArray(M, N + 1, 0.0);
    prev.z = CellArray(M, N, d, 0.0);

    std::vector<double> history;
    bool converged = false;
    unsigned iter = 0;
    while (iter < options.max_iterations) {
        ++iter;
        // Driver frozen at the previous iterate's own-time values.
        DriverFn frozen = [&](std::size_t m, std::size_t i, double, const Vector&) {
            return problem.generator(grid.time(i), state.states.vec(m, i),
                                     prev.y.at(m, i), prev.z.vec(m, i));
        };
        BsdeSolution cur = backward_sweep(state, bm, problem.terminal, frozen,
                                          options.solve);
        double gamma = picard_gamma_norm(cur, prev, options.beta, grid);
        history.push_back(gamma);
        prev = std::move(cur);
        if (gamma < options.tolerance) {
            converged = true;
            break;
        }
    }

    prev.gamma_history = std::move(history);
    prev.iterations = iter;
    prev.converged = converged;
    return prev;
}

} // namespace rbsde
