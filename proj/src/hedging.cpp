#include "hedging.hpp"

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>

namespace rbsde {

ItoSpec MarketSpec::to_ito_spec() const {
    ItoSpec spec;
    spec.x0 = x0;
    spec.condition_cap = condition_cap;
    spec.mu = VectorField(
        dim(),
        [mu = mu_rel](double t, const Vector& x) -> Vector {
            return x.cwiseProduct(mu(t, x));
        },
        std::nullopt, false, "market drift");
    spec.sigma = MatrixField(
        dim(),
        [sig = sigma_rel](double t, const Vector& x) -> Matrix {
            return x.asDiagonal() * sig(t, x);
        },
        std::nullopt, false, "market volatility");
    return spec;
}

HedgingGeneratorForms robust_generator_hedging(const Vector& z, const Vector& h,
                                               const Vector& g) {
    require(z.size() == h.size() && z.size() == g.size(), ErrorCode::invalid_argument,
            "hedging generator: dimension mismatch");
    HedgingGeneratorForms forms;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        require(h(k) <= g(k), ErrorCode::bound_violation,
                "hedging generator: h > g");
        const double zp = std::max(z(k), 0.0), zm = std::max(-z(k), 0.0);
        forms.sup_form += -h(k) * zp + g(k) * zm;
        forms.displayed_form += -(h(k) * zm + g(k) * zp);
    }
    return forms;
}

HedgeResult superhedge_price(const MarketSpec& market, const IntervalBounds& bounds,
                             const BrownianEnsemble& bm,
                             const RobustOptions& options) {
    RobustProblem problem;
    problem.generator = GeneratorSpec::zero();
    problem.terminal = market.payoff;
    problem.bounds = bounds;
    problem.state_spec = market.to_ito_spec();

    HedgeResult result;
    result.robust = solve_robust(problem, bm, options);
    const RobustSolution& sol = result.robust;

    const TimeGrid& grid = bm.grid;
    const std::size_t M = bm.paths(), N = grid.steps(), d = bm.dim();
    result.price = sol.classical.y0;
    result.price_se = sol.classical.y0_se;

    // Hedge ratio against the worst-case driver's own path; with it the
    // discrete replication identity telescopes exactly up to regression
    // residuals.
    result.strategy = CellArray(M, N, d);
    result.residuals.resize(M);
    std::size_t z_positive = 0;
    parallel_for(M, [&](std::size_t mb, std::size_t me) {
        for (std::size_t m = mb; m < me; ++m) {
            double integral = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double t = grid.time(i);
                Vector s = sol.s_hat.states.vec(m, i);
                Matrix sig = problem.state_spec.sigma(t, s);
                Vector z = sol.classical.z.vec(m, i);
                Vector phi = sig.transpose().partialPivLu().solve(z);
                for (std::size_t k = 0; k < d; ++k)
                    result.strategy.at(m, i, k) = phi(k);
                Vector ds = sol.s_hat.states.vec(m, i + 1) - s;
                integral += phi.dot(ds);
            }
            result.residuals[m] =
                sol.classical.y.at(m, N) - result.price - integral;
        }
    });

    double sq = 0.0, payoff_sum = 0.0, payoff_sq = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        sq += result.residuals[m] * result.residuals[m];
        result.residual_max = std::max(result.residual_max,
                                       std::fabs(result.residuals[m]));
        const double h = sol.classical.y.at(m, N);
        payoff_sum += h;
        payoff_sq += h * h;
    }
    result.residual_rms = std::sqrt(sq / static_cast<double>(M));
    const double payoff_mean = payoff_sum / static_cast<double>(M);
    result.payoff_std =
        std::sqrt(std::max(0.0, payoff_sq / static_cast<double>(M) -
                                    payoff_mean * payoff_mean));

    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t k = 0; k < d; ++k)
                if (sol.classical.z.at(m, i, k) > 0.0) ++z_positive;
    const double cells = static_cast<double>(M * N * d);
    result.occupancy_lower = static_cast<double>(z_positive) / cells;
    result.occupancy_upper = 1.0 - result.occupancy_lower;

    // Discrepancy between the supremum form the solver uses and the
    // displayed indicator form, sampled on solved cells.
    rng::Stream rnd(rng::derive_seed(options.verification_seed, 0x64697363ULL));
    GeneratorDiscrepancyReport& disc = result.discrepancy;
    for (std::size_t s = 0; s < 512; ++s) {
        const std::size_t m = rnd.next_index(M), i = rnd.next_index(N);
        Vector x = sol.state.states.vec(m, i);
        Vector h, g;
        bounds.eval(grid.time(i), x, h, g);
        HedgingGeneratorForms forms =
            robust_generator_hedging(sol.classical.z.vec(m, i), h, g);
        const double gap = std::fabs(forms.sup_form - forms.displayed_form);
        ++disc.cells_sampled;
        if (gap > 1e-14) ++disc.cells_differing;
        disc.mean_abs_gap += gap;
        disc.max_abs_gap = std::max(disc.max_abs_gap, gap);
    }
    if (disc.cells_sampled > 0)
        disc.mean_abs_gap /= static_cast<double>(disc.cells_sampled);
    return result;
}

VolUncertaintyResult gbm_vol_uncertainty(double s0, double mu, double sigma1,
                                         double sigma2, const PayoffFn& payoff,
                                         const BrownianEnsemble& bm,
                                         const RobustOptions& options) {
    require(sigma1 > 0.0 && sigma2 > 0.0, ErrorCode::invalid_argument,
            "vol uncertainty: sigma bounds must be positive");
    require(bm.dim() == 1, ErrorCode::invalid_argument,
            "vol uncertainty: one-dimensional markets only");
    require(s0 > 0.0, ErrorCode::invalid_argument,
            "vol uncertainty: initial price must be positive");

    const double sig_min = std::min(sigma1, sigma2);
    const double sig_max = std::max(sigma1, sigma2);

    VolUncertaintyResult result;
    if (mu >= 0.0) {
        result.theta_lower = mu / sig_max;
        result.theta_upper = mu / sig_min;
    } else {
        result.theta_lower = mu / sig_min;
        result.theta_upper = mu / sig_max;
    }

    MarketSpec market;
    market.x0 = Vector::Constant(1, s0);
    market.mu_rel = VectorField::constant(Vector::Constant(1, mu), "mu");
    // Reference dynamics for scenario generation use the first label.
    market.sigma_rel =
        MatrixField::constant(Matrix::Constant(1, 1, sigma1), "sigma_ref");
    market.payoff = payoff;

    IntervalBounds bounds = IntervalBounds::constant(
        Vector::Constant(1, result.theta_lower), Vector::Constant(1, result.theta_upper));
    result.hedge = superhedge_price(market, bounds, bm, options);

    // Which sigma vertex the optimizer picks per sign of Z, decided by the
    // two-point comparison of (mu / sigma) z, not by a fixed label.
    const RobustSolution& sol = result.hedge.robust;
    VolSelectorReport& sel = result.selector;
    sel.degenerate_drift = mu == 0.0;
    const std::size_t M = bm.paths(), N = bm.grid.steps();
    std::size_t consistent = 0;
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t i = 0; i < N; ++i) {
            const double z = sol.classical.z.at(m, i, 0);
            ++sel.cells;
            if (z > 0.0) ++sel.z_positive_cells;
            const double v1 = (mu / sigma1) * z, v2 = (mu / sigma2) * z;
            const double sigma_pick = v1 <= v2 ? sigma1 : sigma2;
            const double theta_pick = mu / sigma_pick;
            if (std::fabs(theta_pick - sol.theta_hat.at(m, i, 0)) <= 1e-12 ||
                sel.degenerate_drift) {
                ++consistent;
            }
        }
    }
    sel.two_point_consistency =
        sel.cells == 0 ? 1.0
                       : static_cast<double>(consistent) / static_cast<double>(sel.cells);
    if (sel.degenerate_drift) {
        sel.z_positive_selects = sel.z_negative_selects = "indifferent";
    } else if (mu > 0.0) {
        // argmin over sigma of (mu / sigma) z
        sel.z_positive_selects = "sigma_max";
        sel.z_negative_selects = "sigma_min";
    } else {
        sel.z_positive_selects = "sigma_min";
        sel.z_negative_selects = "sigma_max";
    }
    return result;
}

ResidualStats replication_error(const HedgeResult& result) {
    return ResidualStats{result.residual_rms, result.residual_max,
                         result.payoff_std};
}

std::vector<std::pair<std::size_t, double>> refinement_study(
    const MarketSpec& market, const IntervalBounds& bounds, double horizon,
    const std::vector<std::size_t>& step_counts, std::size_t paths,
    std::uint64_t seed, const RobustOptions& options) {
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t n : step_counts) {
        TimeGrid grid(horizon, n);
        BrownianEnsemble bm = simulate_brownian(grid, paths, market.dim(), seed);
        RobustOptions opts = options;
        opts.run_verification = false;
        HedgeResult r = superhedge_price(market, bounds, bm, opts);
        out.emplace_back(n, r.residual_rms);
    }
    return out;
}

} // namespace rbsde
