#include "ambiguity.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rbsde {

IntervalBounds IntervalBounds::constant(const Vector& h, const Vector& g) {
    require(h.size() == g.size(), ErrorCode::invalid_argument,
            "bounds: h/g dimension mismatch");
    return IntervalBounds{VectorField::constant(h, "h"), VectorField::constant(g, "g")};
}

void IntervalBounds::eval(double t, const Vector& x, Vector& h, Vector& g) const {
    h = lower(t, x);
    g = upper(t, x);
    for (Eigen::Index k = 0; k < h.size(); ++k) {
        if (!(h(k) <= g(k))) {
            fail(ErrorCode::bound_violation,
                 "invalid bounds: h > g in component " + std::to_string(k) +
                     " at t = " + std::to_string(t));
        }
    }
}

GeneratorSpec GeneratorSpec::zero() {
    return GeneratorSpec{
        [](double, const Vector&, double, const Vector&) { return 0.0; }, 0.0, true};
}

double robust_generator(const GeneratorSpec& gen, const IntervalBounds& bounds,
                        double t, const Vector& x, double y, const Vector& z) {
    Vector h, g;
    bounds.eval(t, x, h, g);
    double sup = gen(t, x, y, z);
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        sup += -h(k) * std::max(z(k), 0.0) + g(k) * std::max(-z(k), 0.0);
    }
    return sup;
}

Vector worst_case_theta(const Vector& h, const Vector& g, const Vector& z) {
    Vector theta(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        theta(k) = z(k) > 0.0 ? h(k) : g(k);
    }
    return theta;
}

Vector worst_case_theta(const IntervalBounds& bounds, double t, const Vector& x,
                        const Vector& z) {
    Vector h, g;
    bounds.eval(t, x, h, g);
    return worst_case_theta(h, g, z);
}

CellArray paste_thetas(const CellArray& theta1, const CellArray& theta2,
                       const std::vector<std::size_t>& tau_index) {
    require(theta1.same_shape(theta2), ErrorCode::invalid_argument,
            "paste: theta processes have different shapes");
    require(tau_index.size() == theta1.paths(), ErrorCode::invalid_argument,
            "paste: one stopping index per path required");
    const std::size_t N = theta1.steps();
    for (std::size_t m = 0; m < tau_index.size(); ++m) {
        require(tau_index[m] <= N, ErrorCode::invalid_argument,
                "paste: stopping index off the grid at path " + std::to_string(m));
    }

    CellArray out(theta1.paths(), N, theta1.dim());
    for (std::size_t m = 0; m < theta1.paths(); ++m) {
        const std::size_t tau = tau_index[m];
        for (std::size_t i = 0; i < N; ++i) {
            const CellArray& src = (i < tau) ? theta1 : theta2;
            for (std::size_t k = 0; k < theta1.dim(); ++k) {
                out.at(m, i, k) = src.at(m, i, k);
            }
        }
    }
    return out;
}

BoundsReport validate_bounds(const IntervalBounds& bounds, const PathEnsemble& paths,
                             const TimeGrid& grid, std::size_t max_paths) {
    BoundsReport report;
    const std::size_t M = std::min(paths.paths(), max_paths);
    const std::size_t N = grid.steps();
    const double cap_h = bounds.lower.bound().value_or(
        std::numeric_limits<double>::infinity());
    const double cap_g = bounds.upper.bound().value_or(
        std::numeric_limits<double>::infinity());
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t i = 0; i < N; ++i) {
            Vector x = paths.states.vec(m, i);
            Vector h, g;
            try {
                h = bounds.lower(grid.time(i), x);
                g = bounds.upper(grid.time(i), x);
            } catch (const Error& e) {
                report.violations.push_back({m, i, 0, 0.0, 0.0, e.what()});
                continue;
            }
            ++report.points_checked;
            for (Eigen::Index k = 0; k < h.size(); ++k) {
                if (!(h(k) <= g(k))) {
                    report.violations.push_back(
                        {m, i, static_cast<std::size_t>(k), h(k), g(k),
                         "h > g"});
                } else if (std::fabs(h(k)) > cap_h + 1e-12 ||
                           std::fabs(g(k)) > cap_g + 1e-12) {
                    report.violations.push_back(
                        {m, i, static_cast<std::size_t>(k), h(k), g(k),
                         "declared bound exceeded"});
                }
            }
        }
    }
    return report;
}

} // namespace rbsde
