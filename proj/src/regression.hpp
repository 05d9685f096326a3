#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace rbsde {

/// Multivariate monomial basis of bounded total degree over standardized
/// coordinates. Coordinates with zero cross-sectional spread are dropped
/// from the monomials (the intercept stays), so a deterministic time
/// slice degenerates cleanly to the plain sample mean.
class PolynomialBasis {
public:
    /// features: one row per sample, one column per state coordinate.
    PolynomialBasis(const Eigen::MatrixXd& features, unsigned degree);

    std::size_t size() const { return exponents_.size(); }
    unsigned degree() const { return degree_; }

    /// Design matrix row for a raw (unstandardized) point.
    void eval_row(const Eigen::VectorXd& x,
                  Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const;

    /// Gradient of each basis function w.r.t. the raw coordinates:
    /// out(j, c) = d basis_j / d x_c.
    void eval_grad(const Eigen::VectorXd& x, Eigen::Ref<Eigen::MatrixXd> out) const;

    Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& features) const;

private:
    unsigned degree_;
    Eigen::VectorXd shift_, scale_;        // standardization per raw coordinate
    std::vector<int> active_;              // raw coordinate index per active column
    std::vector<std::vector<int>> exponents_; // per basis function, per active coord
};

struct FitResult {
    Eigen::VectorXd fitted;       // one value per sample
    Eigen::VectorXd coefficients; // basis coordinates
    double residual_rms = 0.0;
    Eigen::Index rank = 0;
    bool rank_deficient = false;  // minimum-norm solution was used
};

/// Least-squares projection of targets onto the basis span. Rank-deficient
/// designs fall back to the minimum-norm solution and are flagged, not
/// rejected.
FitResult fit_least_squares(const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& targets);

/// Convenience wrapper: build basis from the features, fit, evaluate.
FitResult conditional_expectation(const Eigen::MatrixXd& features,
                                  const Eigen::VectorXd& targets, unsigned degree);

} // namespace rbsde
