#pragma once

#include "arrays.hpp"
#include "brownian.hpp"
#include "coefficients.hpp"
#include "time_grid.hpp"

#include <optional>

namespace rbsde {

/// Euler-Maruyama states of an Ito process on the ensemble's grid.
/// X[m][0] = x0 for every path.
struct PathEnsemble {
    ItoSpec spec;
    StateArray states; // (path, node, component)

    std::size_t paths() const { return states.paths(); }
    std::size_t dim() const { return states.dim(); }
};

/// X_{i+1} = X_i + mu(t_i, X_i) dt + sigma(t_i, X_i) dW_i, summed in a
/// fixed order per path. Throws singular-volatility / numeric-blowup with
/// the (path, step) location.
PathEnsemble simulate_ito(const ItoSpec& spec, const BrownianEnsemble& bm);

/// Girsanov density path of the measure with log-density increments
/// theta . dW - |theta|^2 dt / 2. Lambda[m][0] = 1 and the stored values
/// are exp of a running log-sum, so they stay strictly positive.
struct DensityPaths {
    NodeArray lambda;  // (path, node)
    NodeArray log_lambda;

    std::size_t paths() const { return lambda.paths(); }
};

/// theta given per (path, step, component). Each |theta_k| must stay
/// within `bound` when provided.
DensityPaths girsanov_density(const CellArray& theta, const BrownianEnsemble& bm,
                              std::optional<double> bound = std::nullopt);

/// Evaluates a vector field along ensemble states into a per-cell array.
CellArray eval_field_on_paths(const VectorField& field, const PathEnsemble& paths,
                              const TimeGrid& grid);

} // namespace rbsde
