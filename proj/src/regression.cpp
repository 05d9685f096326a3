#include "regression.hpp"

#include "errors.hpp"

#include <cmath>

namespace rbsde {

namespace {

void enumerate_exponents(int coords, unsigned degree,
                         std::vector<int>& current, int pos, int remaining,
                         std::vector<std::vector<int>>& out) {
    if (pos == coords) {
        out.push_back(current);
        return;
    }
    for (int e = 0; e <= remaining; ++e) {
        current[pos] = e;
        enumerate_exponents(coords, degree, current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

} // namespace

PolynomialBasis::PolynomialBasis(const Eigen::MatrixXd& features, unsigned degree)
    : degree_(degree) {
    require(features.rows() > 0, ErrorCode::invalid_argument,
            "basis: need at least one sample");
    const Eigen::Index n = features.cols();
    shift_ = features.colwise().mean();
    scale_.resize(n);
    for (Eigen::Index c = 0; c < n; ++c) {
        double var = (features.col(c).array() - shift_(c)).square().mean();
        double sd = std::sqrt(var);
        // Deterministic coordinates carry no information at this slice.
        if (sd > 1e-12 * std::max(1.0, std::fabs(shift_(c)))) {
            active_.push_back(static_cast<int>(c));
            scale_(c) = sd;
        } else {
            scale_(c) = 1.0;
        }
    }

    std::vector<int> current(active_.size(), 0);
    if (active_.empty()) {
        exponents_.push_back({});
    } else {
        enumerate_exponents(static_cast<int>(active_.size()), degree, current, 0,
                            static_cast<int>(degree), exponents_);
    }
}

void PolynomialBasis::eval_row(
    const Eigen::VectorXd& x,
    Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const {
    std::vector<double> u(active_.size());
    for (std::size_t a = 0; a < active_.size(); ++a) {
        int c = active_[a];
        u[a] = (x(c) - shift_(c)) / scale_(c);
    }
    for (std::size_t j = 0; j < exponents_.size(); ++j) {
        double v = 1.0;
        for (std::size_t a = 0; a < active_.size(); ++a) {
            for (int e = 0; e < exponents_[j][a]; ++e) v *= u[a];
        }
        row(static_cast<Eigen::Index>(j)) = v;
    }
}

void PolynomialBasis::eval_grad(const Eigen::VectorXd& x,
                                Eigen::Ref<Eigen::MatrixXd> out) const {
    out.setZero();
    std::vector<double> u(active_.size());
    for (std::size_t a = 0; a < active_.size(); ++a) {
        int c = active_[a];
        u[a] = (x(c) - shift_(c)) / scale_(c);
    }
    for (std::size_t j = 0; j < exponents_.size(); ++j) {
        for (std::size_t a = 0; a < active_.size(); ++a) {
            int e_a = exponents_[j][a];
            if (e_a == 0) continue;
            double v = static_cast<double>(e_a) / scale_(active_[a]);
            for (std::size_t b = 0; b < active_.size(); ++b) {
                int e = exponents_[j][b];
                if (b == a) e -= 1;
                for (int q = 0; q < e; ++q) v *= u[b];
            }
            out(static_cast<Eigen::Index>(j), active_[a]) = v;
        }
    }
}

Eigen::MatrixXd PolynomialBasis::design_matrix(const Eigen::MatrixXd& features) const {
    Eigen::MatrixXd design(features.rows(), static_cast<Eigen::Index>(size()));
    for (Eigen::Index m = 0; m < features.rows(); ++m) {
        eval_row(features.row(m).transpose(), design.row(m));
    }
    return design;
}

FitResult fit_least_squares(const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& targets) {
    require(design.rows() == targets.size(), ErrorCode::invalid_argument,
            "regression: design/target row mismatch");
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    FitResult result;
    result.coefficients = cod.solve(targets);
    result.fitted = design * result.coefficients;
    result.rank = cod.rank();
    result.rank_deficient = result.rank < design.cols();
    result.residual_rms = std::sqrt(
        (targets - result.fitted).squaredNorm() / static_cast<double>(targets.size()));
    return result;
}

FitResult conditional_expectation(const Eigen::MatrixXd& features,
                                  const Eigen::VectorXd& targets, unsigned degree) {
    PolynomialBasis basis(features, degree);
    return fit_least_squares(basis.design_matrix(features), targets);
}

} // namespace rbsde
