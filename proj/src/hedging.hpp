#pragma once

#include "robust.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rbsde {

/// Market with relative coefficients: dS = diag(S)(mu dt + sigma . dW),
/// numeraire identically 1. The market price of risk sigma^{-1} mu is
/// unchanged by the diag(S) factor.
struct MarketSpec {
    Vector x0;
    VectorField mu_rel;
    MatrixField sigma_rel;
    PayoffFn payoff;
    double condition_cap = 1e8;

    std::size_t dim() const { return static_cast<std::size_t>(x0.size()); }
    ItoSpec to_ito_spec() const;
};

/// Both candidate forms of the driftless hedging generator, evaluated
/// side by side: the supremum of -theta . z over the box against the
/// displayed indicator form. The solver always uses the supremum form;
/// the gap is surfaced, never silently resolved.
struct HedgingGeneratorForms {
    double sup_form = 0.0;       // -h . z^+ + g . z^-
    double displayed_form = 0.0; // -(h . z^- + g . z^+)
};

HedgingGeneratorForms robust_generator_hedging(const Vector& z, const Vector& h,
                                               const Vector& g);

struct GeneratorDiscrepancyReport {
    std::size_t cells_sampled = 0;
    std::size_t cells_differing = 0;
    double mean_abs_gap = 0.0;
    double max_abs_gap = 0.0;
    std::string solver_uses = "sup";
};

struct HedgeResult {
    double price = 0.0;
    double price_se = 0.0;
    CellArray strategy;  // phi per cell, in the driver's own units
    std::vector<double> residuals;
    double residual_rms = 0.0;
    double residual_max = 0.0;
    double payoff_std = 0.0;
    double occupancy_lower = 0.0; // fraction of cells with the lower bound active
    double occupancy_upper = 0.0;
    GeneratorDiscrepancyReport discrepancy;
    RobustSolution robust;
};

/// Superhedging price of the claim against every driver in the family:
/// solves eq(0, H, D), reports the hedge phi, the replication residuals
/// and which bound the selector occupies.
HedgeResult superhedge_price(const MarketSpec& market, const IntervalBounds& bounds,
                             const BrownianEnsemble& bm,
                             const RobustOptions& options = {});

struct VolSelectorReport {
    bool degenerate_drift = false; // mu = 0: all sigma choices equivalent
    std::size_t cells = 0;
    std::size_t z_positive_cells = 0;
    std::string z_positive_selects; // "sigma_max" / "sigma_min" (computed)
    std::string z_negative_selects;
    double two_point_consistency = 0.0; // fraction of cells where the
                                        // interval selector matches the
                                        // argmin over {sigma1, sigma2}
};

struct VolUncertaintyResult {
    HedgeResult hedge;
    double theta_lower = 0.0, theta_upper = 0.0;
    VolSelectorReport selector;
};

/// Geometric Brownian motion with volatility in [sigma1, sigma2] and a
/// fixed drift mu, mapped to the equivalent market-price-of-risk interval
/// and solved with the same machinery. The sigma vertex per cell comes
/// from the optimization, not from a hard-coded indicator.
VolUncertaintyResult gbm_vol_uncertainty(double s0, double mu, double sigma1,
                                         double sigma2, const PayoffFn& payoff,
                                         const BrownianEnsemble& bm,
                                         const RobustOptions& options = {});

struct ResidualStats {
    double rms = 0.0;
    double max_abs = 0.0;
    double payoff_std = 0.0;
};

ResidualStats replication_error(const HedgeResult& result);

/// Re-solves the same market on refined grids (same seed, fresh
/// ensembles) and reports the residual RMS per step count.
std::vector<std::pair<std::size_t, double>> refinement_study(
    const MarketSpec& market, const IntervalBounds& bounds, double horizon,
    const std::vector<std::size_t>& step_counts, std::size_t paths,
    std::uint64_t seed, const RobustOptions& options = {});

} // namespace rbsde
