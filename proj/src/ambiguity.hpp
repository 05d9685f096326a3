#pragma once

#include "arrays.hpp"
#include "coefficients.hpp"
#include "paths.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace rbsde {

/// Componentwise interval [h, g] for the market price of risk. Box sets
/// are closed under predictable mixing and pasting, so the structural
/// assumptions on the ambiguity family hold by construction; what remains
/// checkable is h <= g and the declared bounds, which validate_bounds and
/// every evaluation enforce.
struct IntervalBounds {
    VectorField lower; // h
    VectorField upper; // g

    std::size_t dim() const { return lower.dim(); }

    static IntervalBounds constant(const Vector& h, const Vector& g);

    /// Evaluates (h, g) at a point and rejects h > g.
    void eval(double t, const Vector& x, Vector& h, Vector& g) const;
};

/// Driver f with its declared Lipschitz constant in (y, z).
struct GeneratorSpec {
    using Fn = std::function<double(double t, const Vector& x, double y,
                                    const Vector& z)>;
    Fn f;
    double lipschitz = 0.0;
    bool zero_square_integrable = true; // declared for f(., 0, 0)

    static GeneratorSpec zero();

    double operator()(double t, const Vector& x, double y, const Vector& z) const {
        return f(t, x, y, z);
    }
};

/// sup over theta in [h, g] of (f(t,y,z) - theta . z):
/// f(t,y,z) + sum_k (-h_k z_k^+ + g_k z_k^-), the exact maximum of a
/// linear function over a box.
double robust_generator(const GeneratorSpec& gen, const IntervalBounds& bounds,
                        double t, const Vector& x, double y, const Vector& z);

/// Componentwise box vertex attaining the supremum: theta_k = h_k when
/// z_k > 0, else g_k (ties at z_k = 0 take g_k).
Vector worst_case_theta(const IntervalBounds& bounds, double t, const Vector& x,
                        const Vector& z);

/// Same rule applied directly to evaluated bound values.
Vector worst_case_theta(const Vector& h, const Vector& g, const Vector& z);

/// theta_t = theta1_t for t < tau, theta2_t from tau on; tau is a grid
/// index per path (0..N).
CellArray paste_thetas(const CellArray& theta1, const CellArray& theta2,
                       const std::vector<std::size_t>& tau_index);

struct BoundsViolation {
    std::size_t path = 0, step = 0, component = 0;
    double lower = 0.0, upper = 0.0;
    std::string what;
};

struct BoundsReport {
    std::size_t points_checked = 0;
    std::vector<BoundsViolation> violations;
    bool clean() const { return violations.empty(); }
};

/// Evaluates the bounds over sampled ensemble cells and reports any point
/// with h > g or a declared-bound breach. Report-valued, never throws for
/// violations.
BoundsReport validate_bounds(const IntervalBounds& bounds, const PathEnsemble& paths,
                             const TimeGrid& grid, std::size_t max_paths = 256);

} // namespace rbsde
