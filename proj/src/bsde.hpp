#pragma once

#include "ambiguity.hpp"
#include "arrays.hpp"
#include "brownian.hpp"
#include "paths.hpp"
#include "regression.hpp"

#include <functional>
#include <vector>

namespace rbsde {

/// Terminal payoff as a functional of the whole state path.
using PayoffFn = std::function<double(const StateArray& states, std::size_t path)>;

PayoffFn terminal_state_payoff(std::function<double(const Vector&)> fn);

struct BsdeProblem {
    GeneratorSpec generator;
    PayoffFn terminal;
};

struct SweepDiagnostics {
    double y_residual_rms = 0.0;
    double z_residual_rms = 0.0;
    std::size_t basis_size = 0;
    bool rank_deficient = false;
};

struct BsdeSolution {
    NodeArray y;  // (path, node)
    CellArray z;  // (path, step, component)
    std::vector<SweepDiagnostics> sweeps; // indexed by time step
    double y0 = 0.0;     // cross-path value at t = 0 (plain-mean slice)
    double y0_se = 0.0;  // standard error of the t = 0 mean
    // Picard bookkeeping (empty for the plain backward solver).
    std::vector<double> gamma_history;
    unsigned iterations = 0;
    bool converged = true;
};

struct SolveOptions {
    unsigned basis_degree = 3;
    double blowup_cap = 1e8;
    /// Conditionally-mean-zero control variates on both regressions:
    /// the Z targets are centered at the previous fit and carry quadratic
    /// bracket terms, the Y targets subtract the fitted Z . dW martingale
    /// increment. They change the estimator's noise, never its estimand.
    bool z_control_variates = true;
};

/// Regression-based backward induction for eq(f, xi) driven by the
/// ensemble's Brownian motion:
///   Z_i = regression of Y_{i+1} dW_i / dt on features at t_i,
///   Y_i = regression of Y_{i+1} + f(t_i, X_i, Y_{i+1}, Z_i) dt,
/// with Y_N = xi exactly.
BsdeSolution solve_bsde_lsmc(const BsdeProblem& problem, const PathEnsemble& state,
                             const BrownianEnsemble& bm,
                             const SolveOptions& options = {});

struct PicardOptions {
    SolveOptions solve;
    unsigned max_iterations = 50;
    double tolerance = 1e-6;  // on the weighted norm between iterates
    double beta = 0.0;        // exponential weight; see picard_beta
};

/// Weight from the contraction estimate, with the untracked constant of
/// the maximal inequality set to c = 1. Only diagnostics depend on it.
double picard_beta(double lipschitz, double drift_bound, double horizon,
                   double bdg_constant = 1.0);

/// Picard iteration: each step solves the BSDE with the driver frozen at
/// the previous iterate, starting from (Y, Z) = (0, 0). Records the
/// weighted distance between successive iterates.
BsdeSolution solve_bsde_picard(const BsdeProblem& problem, const PathEnsemble& state,
                               const BrownianEnsemble& bm,
                               const PicardOptions& options = {});

/// Discrete analogue of the weighted norm used by the fixed-point
/// argument:
///   ( mean_m sup_i e^{beta t_i} dY^2
///     + mean_m sum_i e^{beta t_i} |dZ|^2 dt )^{1/2}.
double picard_gamma_norm(const BsdeSolution& a, const BsdeSolution& b,
                         double beta, const TimeGrid& grid);

} // namespace rbsde
