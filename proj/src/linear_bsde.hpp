#pragma once

#include "bsde.hpp"
#include "coefficients.hpp"
#include "paths.hpp"

namespace rbsde {

/// Linear driver f(s, y, z) = phi_s + y alpha_s + z . gamma_s, with the
/// coefficients read off the state ensemble. alpha and gamma must carry
/// declared bounds; phi must be square integrable on the ensemble.
struct LinearSpec {
    ScalarField alpha;
    VectorField gamma;
    ScalarField phi;
    PayoffFn terminal;
};

GeneratorSpec make_linear_generator(const LinearSpec& lin);

/// Adjoint paths Gamma with Gamma_0 = 1, grown by the log-Euler recursion
///   log G_{i+1} = log G_i + (alpha - |v|^2 / 2) dt + v . dW,
///   v = sigma_hat^{-1} (gamma - mu_hat),
/// evaluated along the state ensemble.
NodeArray adjoint_process(const LinearSpec& lin, const VectorField& mu_hat,
                          const MatrixField& sigma_hat, const PathEnsemble& state,
                          const BrownianEnsemble& bm);

struct LinearSolution {
    NodeArray y;
    NodeArray gamma;
    double y0 = 0.0;
    double y0_se = 0.0;
    std::vector<double> residual_rms; // per regression node (1..N-1)
};

/// Conditional-expectation form of the linear solution:
///   Y_t = E( xi Gamma_T / Gamma_t + sum_{s >= t} phi_s Gamma_s / Gamma_t dt | F_t ),
/// realized by regressing the Gamma_t-deflated target (the deflator is
/// F_t-measurable, and the ratio is a function of the future path from
/// X_t, which keeps the target in regression range). At t = 0 this is the
/// plain sample mean; at t = T it is the payoff identically.
LinearSolution solve_linear_closed_form(const LinearSpec& lin, const VectorField& mu_hat,
                                        const MatrixField& sigma_hat,
                                        const PathEnsemble& state,
                                        const BrownianEnsemble& bm,
                                        unsigned basis_degree = 3);

} // namespace rbsde
