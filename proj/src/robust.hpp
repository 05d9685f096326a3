#pragma once

#include "ambiguity.hpp"
#include "bsde.hpp"
#include "linear_bsde.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rbsde {

/// Robust problem: driver family D = { dS = sigma (theta dt + dW),
/// theta in [h, g] }, a generator f and terminal payoff xi evaluated on a
/// reference ensemble simulated from state_spec (whose sigma is shared
/// with the family).
struct RobustProblem {
    GeneratorSpec generator;
    PayoffFn terminal;
    IntervalBounds bounds;
    ItoSpec state_spec;
};

/// A market-price-of-risk process evaluated on the ensemble cells. The
/// martingale measure of the driver carrying theta has Girsanov density
/// parameter -theta; members are stored as the theta itself.
struct ThetaMember {
    std::string label;
    CellArray values;
    bool is_selected = false; // marks the solved worst-case process
};

ThetaMember theta_member_from_field(std::string label, const VectorField& field,
                                    const PathEnsemble& state, const TimeGrid& grid);

struct EMartCheckpointStat {
    std::size_t index = 0;
    double time = 0.0;
    double mean = 0.0;       // cross-sectional mean of fitted E^Q(tail | F_t)
    double se_mean = 0.0;    // SE of the weighted unconditional mean
    double rms = 0.0;        // cross-sectional RMS of the fitted values
    double noise_scale = 0.0; // expected RMS under the zero hypothesis
};

struct EMartMemberReport {
    std::string label;
    bool is_selected = false;
    std::vector<EMartCheckpointStat> checkpoints;
    bool zero_within_tol = false;   // two-sided, for the selected member
    bool supermartingale_ok = false; // one-sided, for every member
};

struct EMartReport {
    std::vector<EMartMemberReport> members;
    bool selected_zero = false;
    bool all_supermartingale = false;
    bool pass = false;
};

struct RobustSolution {
    BsdeSolution classical; // (Y, Z) of the transformed equation
    PathEnsemble state;     // reference ensemble (features, payoff)
    CellArray theta_hat;    // bang-bang selection per cell
    CellArray zhat;         // sigma(t, X)^{-T} Z per cell
    PathEnsemble s_hat;     // worst-case driver paths on the same noise
    BoundsReport bounds_report;
    EMartReport emartingale;

    double price() const { return classical.y0; }
    double price_se() const { return classical.y0_se; }
};

struct RobustOptions {
    SolveOptions solve;
    bool use_picard = false;
    PicardOptions picard;
    bool run_verification = true;
    std::vector<double> checkpoint_fractions = {0.25, 0.5, 0.75};
    unsigned random_members = 4;
    std::uint64_t verification_seed = 2024;
};

/// Solves eq(f, xi, D): validates the standing assumptions, solves the
/// transformed classical equation, selects the worst-case theta cellwise
/// from the solved Z, reconstructs (Zhat, S_hat) and (optionally) attaches
/// the sublinear-martingale verification report.
RobustSolution solve_robust(const RobustProblem& problem, const BrownianEnsemble& bm,
                            const RobustOptions& options = {});

struct SublinearEstimate {
    std::vector<std::string> member_labels;
    Eigen::MatrixXd member_values; // (path, member) conditional expectations
    Eigen::VectorXd values;        // cellwise max over members
    std::vector<int> argmax;       // attaining member per path
};

/// max_k E^{Q_k}(X | F_t) over a finite family of density parameters
/// theta_k (applied with the stored sign): per member the conditional
/// expectation is the regression of (Lambda_T / Lambda_t) X on the state
/// features at t; t = 0 degenerates to the weighted sample mean.
SublinearEstimate sublinear_expectation(const Eigen::VectorXd& terminal_values,
                                        std::size_t t_index,
                                        const std::vector<ThetaMember>& family,
                                        const PathEnsemble& state,
                                        const BrownianEnsemble& bm,
                                        unsigned basis_degree = 3);

/// Checks that the stochastic integral of the solved triplet is a
/// martingale under the selected driver's measure and a supermartingale
/// under every member's measure. Family members are market prices of
/// risk; their pricing measures use the negated Girsanov parameter.
EMartReport verify_e_martingale(const RobustSolution& sol,
                                const std::vector<ThetaMember>& family,
                                const std::vector<std::size_t>& checkpoint_indices,
                                const BrownianEnsemble& bm,
                                unsigned basis_degree = 3);

struct RepresentationResult {
    double x0 = 0.0;
    double x0_se = 0.0;
    double y0_spread = 0.0; // cross-path spread of Y_0 (regression health)
    std::vector<double> residuals; // xi - x0 - integral, per path
    double residual_rms = 0.0;
    RobustSolution solution;
};

/// Robust martingale representation: xi = x0 + int Zhat . dS_hat with
/// f = 0. Residuals are the pathwise replication gaps on the grid.
RepresentationResult martingale_representation(const PayoffFn& terminal,
                                               const IntervalBounds& bounds,
                                               const ItoSpec& state_spec,
                                               const BrownianEnsemble& bm,
                                               const RobustOptions& options = {});

struct CompareReport {
    double y0_a = 0.0, y0_b = 0.0, se_a = 0.0, se_b = 0.0;
    bool y0_ordered = false;
    std::size_t cells_checked = 0;
    std::size_t cell_violations = 0;
    double cell_violation_fraction = 0.0;
    std::size_t terminal_order_violations = 0;
    std::size_t generator_order_violations = 0;
    bool preconditions_ok = false;
    bool pass = false;
};

/// Comparison harness on coupled ensembles: checks xi_a >= xi_b pathwise
/// and f_a >= f_b on sampled points, then reports cellwise and t = 0
/// ordering of the solved values. Precondition failures are reported, not
/// thrown.
CompareReport compare_solutions(const RobustProblem& problem_a,
                                const RobustProblem& problem_b,
                                const BrownianEnsemble& bm,
                                const RobustOptions& options = {},
                                double violation_fraction_cap = 1e-3);

} // namespace rbsde
