#include "linear_bsde.hpp"

#include "errors.hpp"
#include "parallel.hpp"

#include <cmath>

namespace rbsde {

GeneratorSpec make_linear_generator(const LinearSpec& lin) {
    require(lin.alpha.bound().has_value() && lin.gamma.bound().has_value(),
            ErrorCode::invalid_argument,
            "linear generator: alpha and gamma need declared bounds");
    GeneratorSpec gen;
    gen.lipschitz = std::max(*lin.alpha.bound(), *lin.gamma.bound());
    gen.f = [alpha = lin.alpha, gamma = lin.gamma, phi = lin.phi](
                double t, const Vector& x, double y, const Vector& z) {
        return phi(t, x) + y * alpha(t, x) + z.dot(gamma(t, x));
    };
    return gen;
}

NodeArray adjoint_process(const LinearSpec& lin, const VectorField& mu_hat,
                          const MatrixField& sigma_hat, const PathEnsemble& state,
                          const BrownianEnsemble& bm) {
    const TimeGrid& grid = bm.grid;
    const std::size_t M = state.paths(), N = grid.steps();
    require(M == bm.paths() && state.dim() == bm.dim(), ErrorCode::invalid_argument,
            "adjoint: ensemble shapes disagree");

    NodeArray gamma(M, N + 1, 1.0);
    parallel_for(M, [&](std::size_t mb, std::size_t me) {
        for (std::size_t m = mb; m < me; ++m) {
            double log_g = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double t = grid.time(i), dt = grid.dt(i);
                Vector x = state.states.vec(m, i);
                Matrix sig = sigma_hat(t, x);
                check_invertible(sig, state.spec.condition_cap, m, i);
                Vector v = sig.partialPivLu().solve(lin.gamma(t, x) - mu_hat(t, x));
                const double a = lin.alpha(t, x);
                log_g += (a - 0.5 * v.squaredNorm()) * dt + v.dot(bm.dw.vec(m, i));
                gamma.at(m, i + 1) = std::exp(log_g);
            }
        }
    });
    return gamma;
}

LinearSolution solve_linear_closed_form(const LinearSpec& lin, const VectorField& mu_hat,
                                        const MatrixField& sigma_hat,
                                        const PathEnsemble& state,
                                        const BrownianEnsemble& bm,
                                        unsigned basis_degree) {
    const TimeGrid& grid = bm.grid;
    const std::size_t M = state.paths(), N = grid.steps();

    LinearSolution sol;
    sol.gamma = adjoint_process(lin, mu_hat, sigma_hat, state, bm);
    sol.y = NodeArray(M, N + 1);
    sol.residual_rms.assign(N + 1, 0.0);

    // phi Gamma dt, accumulated as a suffix sum from T backwards.
    std::vector<double> suffix(M, 0.0), xi_gamma(M);
    for (std::size_t m = 0; m < M; ++m) {
        double xi = lin.terminal(state.states, m);
        require(std::isfinite(xi), ErrorCode::numeric_blowup,
                "linear closed form: non-finite terminal value");
        xi_gamma[m] = xi * sol.gamma.at(m, N);
        sol.y.at(m, N) = xi;
    }

    for (std::size_t i = N; i-- > 0;) {
        const double t = grid.time(i), dt = grid.dt(i);
        parallel_for(M, [&](std::size_t mb, std::size_t me) {
            for (std::size_t m = mb; m < me; ++m) {
                Vector x = state.states.vec(m, i);
                suffix[m] += lin.phi(t, x) * sol.gamma.at(m, i) * dt;
            }
        });

        Eigen::VectorXd target(static_cast<Eigen::Index>(M));
        for (std::size_t m = 0; m < M; ++m) {
            target(static_cast<Eigen::Index>(m)) =
                (xi_gamma[m] + suffix[m]) / sol.gamma.at(m, i);
        }

        if (i == 0) {
            const double mean = target.mean();
            for (std::size_t m = 0; m < M; ++m) sol.y.at(m, 0) = mean;
            sol.y0 = mean;
            double var = (target.array() - mean).square().sum() /
                         static_cast<double>(M > 1 ? M - 1 : 1);
            sol.y0_se = std::sqrt(var / static_cast<double>(M));
        } else {
            Eigen::MatrixXd features(static_cast<Eigen::Index>(M),
                                     static_cast<Eigen::Index>(state.dim()));
            for (std::size_t m = 0; m < M; ++m) {
                for (std::size_t k = 0; k < state.dim(); ++k) {
                    features(static_cast<Eigen::Index>(m),
                             static_cast<Eigen::Index>(k)) = state.states.at(m, i, k);
                }
            }
            FitResult fit = conditional_expectation(features, target, basis_degree);
            for (std::size_t m = 0; m < M; ++m) {
                sol.y.at(m, i) = fit.fitted(static_cast<Eigen::Index>(m));
            }
            sol.residual_rms[i] = fit.residual_rms;
        }
    }
    return sol;
}

} // namespace rbsde
