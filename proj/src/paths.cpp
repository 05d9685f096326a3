#include "paths.hpp"

#include "errors.hpp"
#include "parallel.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <string>

namespace rbsde {

namespace {

// Worker threads stash the first failure here; rethrown on the caller
// thread so error reporting does not depend on the schedule either (the
// lowest path index wins).
struct FirstError {
    std::atomic<std::size_t> path{SIZE_MAX};
    ErrorCode code = ErrorCode::internal;
    std::string message;
    std::mutex mu;

    void record(std::size_t m, const Error& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (m < path.load()) {
            path.store(m);
            code = e.code();
            message = e.what();
        }
    }
    void rethrow_if_set() {
        if (path.load() != SIZE_MAX) throw Error(code, message);
    }
};

} // namespace

PathEnsemble simulate_ito(const ItoSpec& spec, const BrownianEnsemble& bm) {
    spec.check_consistent();
    require(spec.dim() == bm.dim(), ErrorCode::invalid_argument,
            "simulate_ito: spec dimension disagrees with Brownian ensemble");

    const TimeGrid& grid = bm.grid;
    const std::size_t M = bm.paths(), N = grid.steps(), d = spec.dim();
    PathEnsemble out{spec, StateArray(M, N + 1, d)};

    // Constant coefficients only need one invertibility check.
    const bool sigma_const = spec.sigma.is_constant();
    if (sigma_const) {
        check_invertible(spec.sigma(0.0, spec.x0), spec.condition_cap, 0, 0);
    }

    FirstError err;
    parallel_for(M, [&](std::size_t mb, std::size_t me) {
        Vector x(d), drift(d);
        for (std::size_t m = mb; m < me; ++m) {
            try {
                x = spec.x0;
                for (Eigen::Index k = 0; k < x.size(); ++k)
                    out.states.at(m, 0, static_cast<std::size_t>(k)) = x(k);
                for (std::size_t i = 0; i < N; ++i) {
                    const double t = grid.time(i), dt = grid.dt(i);
                    drift = spec.mu(t, x);
                    Matrix sig = spec.sigma(t, x);
                    if (!sigma_const) check_invertible(sig, spec.condition_cap, m, i);
                    x = x + drift * dt + sig * bm.dw.vec(m, i);
                    if (!x.allFinite()) {
                        fail(ErrorCode::numeric_blowup,
                             "simulate_ito: non-finite state at path " +
                                 std::to_string(m) + ", step " + std::to_string(i + 1));
                    }
                    for (Eigen::Index k = 0; k < x.size(); ++k)
                        out.states.at(m, i + 1, static_cast<std::size_t>(k)) = x(k);
                }
            } catch (const Error& e) {
                err.record(m, e);
                return;
            }
        }
    });
    err.rethrow_if_set();
    return out;
}

DensityPaths girsanov_density(const CellArray& theta, const BrownianEnsemble& bm,
                              std::optional<double> bound) {
    require(theta.paths() == bm.paths() && theta.steps() == bm.grid.steps() &&
                theta.dim() == bm.dim(),
            ErrorCode::invalid_argument, "girsanov: theta shape disagrees with ensemble");

    const std::size_t M = theta.paths(), N = theta.steps(), d = theta.dim();
    DensityPaths out{NodeArray(M, N + 1, 1.0), NodeArray(M, N + 1, 0.0)};

    FirstError err;
    parallel_for(M, [&](std::size_t mb, std::size_t me) {
        for (std::size_t m = mb; m < me; ++m) {
            try {
                double log_sum = 0.0;
                for (std::size_t i = 0; i < N; ++i) {
                    const double dt = bm.grid.dt(i);
                    double dot = 0.0, norm2 = 0.0;
                    for (std::size_t k = 0; k < d; ++k) {
                        const double th = theta.at(m, i, k);
                        if (bound && !(std::fabs(th) <= *bound + 1e-12)) {
                            fail(ErrorCode::bound_violation,
                                 "girsanov: |theta| exceeds declared bound at path " +
                                     std::to_string(m) + ", step " + std::to_string(i));
                        }
                        dot += th * bm.dw.at(m, i, k);
                        norm2 += th * th;
                    }
                    log_sum += dot - 0.5 * norm2 * dt;
                    out.log_lambda.at(m, i + 1) = log_sum;
                    out.lambda.at(m, i + 1) = std::exp(log_sum);
                }
            } catch (const Error& e) {
                err.record(m, e);
                return;
            }
        }
    });
    err.rethrow_if_set();
    return out;
}

CellArray eval_field_on_paths(const VectorField& field, const PathEnsemble& paths,
                              const TimeGrid& grid) {
    const std::size_t M = paths.paths(), N = grid.steps(), d = field.dim();
    CellArray out(M, N, d);
    FirstError err;
    parallel_for(M, [&](std::size_t mb, std::size_t me) {
        for (std::size_t m = mb; m < me; ++m) {
            try {
                for (std::size_t i = 0; i < N; ++i) {
                    Vector v = field(grid.time(i), paths.states.vec(m, i));
                    for (std::size_t k = 0; k < d; ++k) out.at(m, i, k) = v(k);
                }
            } catch (const Error& e) {
                err.record(m, e);
                return;
            }
        }
    });
    err.rethrow_if_set();
    return out;
}

} // namespace rbsde
