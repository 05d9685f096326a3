#include "coefficients.hpp"

#include "errors.hpp"

#include <cmath>
#include <utility>

namespace rbsde {

namespace {

void check_bound(double value_norm, const std::optional<double>& bound,
                 const std::string& name, const char* kind) {
    if (bound && !(value_norm <= *bound + 1e-12)) {
        fail(ErrorCode::bound_violation,
             std::string(kind) + " field" + (name.empty() ? "" : " '" + name + "'") +
                 ": value norm " + std::to_string(value_norm) +
                 " exceeds declared bound " + std::to_string(*bound));
    }
}

} // namespace

ScalarField::ScalarField(Fn fn, std::optional<double> bound, bool constant,
                         std::string name)
    : fn_(std::move(fn)), bound_(bound), constant_(constant), name_(std::move(name)) {}

ScalarField ScalarField::constant(double value, std::string name) {
    return ScalarField([value](double, const Vector&) { return value; },
                       std::fabs(value), true, std::move(name));
}

double ScalarField::operator()(double t, const Vector& x) const {
    require(static_cast<bool>(fn_), ErrorCode::invalid_argument,
            "scalar field: evaluator not set");
    double v = fn_(t, x);
    check_bound(std::fabs(v), bound_, name_, "scalar");
    return v;
}

VectorField::VectorField(std::size_t dim, Fn fn, std::optional<double> bound,
                         bool constant, std::string name)
    : dim_(dim), fn_(std::move(fn)), bound_(bound), constant_(constant),
      name_(std::move(name)) {}

VectorField VectorField::constant(const Vector& value, std::string name) {
    Vector v = value;
    return VectorField(static_cast<std::size_t>(v.size()),
                       [v](double, const Vector&) { return v; },
                       v.lpNorm<Eigen::Infinity>(), true, std::move(name));
}

VectorField VectorField::affine(const Vector& intercept, const Vector& slope,
                                double bound, std::string name) {
    require(intercept.size() == slope.size(), ErrorCode::invalid_argument,
            "affine field: intercept/slope size mismatch");
    Vector a = intercept, b = slope;
    return VectorField(static_cast<std::size_t>(a.size()),
                       [a, b](double, const Vector& x) -> Vector {
                           return a + b.cwiseProduct(x.head(a.size()));
                       },
                       bound, false, std::move(name));
}

VectorField VectorField::zero(std::size_t dim) {
    return constant(Vector::Zero(static_cast<Eigen::Index>(dim)), "zero");
}

Vector VectorField::operator()(double t, const Vector& x) const {
    require(static_cast<bool>(fn_), ErrorCode::invalid_argument,
            "vector field: evaluator not set");
    Vector v = fn_(t, x);
    require(static_cast<std::size_t>(v.size()) == dim_, ErrorCode::invalid_argument,
            "vector field '" + name_ + "': evaluator returned wrong dimension");
    check_bound(v.lpNorm<Eigen::Infinity>(), bound_, name_, "vector");
    return v;
}

MatrixField::MatrixField(std::size_t dim, Fn fn, std::optional<double> bound,
                         bool constant, std::string name)
    : dim_(dim), fn_(std::move(fn)), bound_(bound), constant_(constant),
      name_(std::move(name)) {}

MatrixField MatrixField::constant(const Matrix& value, std::string name) {
    require(value.rows() == value.cols(), ErrorCode::invalid_argument,
            "matrix field: must be square");
    Matrix v = value;
    return MatrixField(static_cast<std::size_t>(v.rows()),
                       [v](double, const Vector&) { return v; },
                       v.cwiseAbs().maxCoeff(), true, std::move(name));
}

MatrixField MatrixField::identity(std::size_t dim) {
    return constant(Matrix::Identity(static_cast<Eigen::Index>(dim),
                                     static_cast<Eigen::Index>(dim)),
                    "identity");
}

Matrix MatrixField::operator()(double t, const Vector& x) const {
    require(static_cast<bool>(fn_), ErrorCode::invalid_argument,
            "matrix field: evaluator not set");
    Matrix v = fn_(t, x);
    require(static_cast<std::size_t>(v.rows()) == dim_ &&
                static_cast<std::size_t>(v.cols()) == dim_,
            ErrorCode::invalid_argument,
            "matrix field '" + name_ + "': evaluator returned wrong shape");
    if (bound_) check_bound(v.cwiseAbs().maxCoeff(), bound_, name_, "matrix");
    return v;
}

void ItoSpec::check_consistent() const {
    require(x0.size() > 0, ErrorCode::invalid_argument, "ito spec: empty initial state");
    require(mu.dim() == dim() && sigma.dim() == dim(), ErrorCode::invalid_argument,
            "ito spec: coefficient dimensions disagree with x0");
    require(condition_cap > 1.0, ErrorCode::invalid_argument,
            "ito spec: condition cap must exceed 1");
}

void check_invertible(const Matrix& sigma, double condition_cap,
                      std::size_t path, std::size_t step) {
    double smax, smin;
    if (sigma.rows() == 1) {
        smax = smin = std::fabs(sigma(0, 0));
    } else {
        Eigen::JacobiSVD<Matrix> svd(sigma);
        smax = svd.singularValues()(0);
        smin = svd.singularValues()(svd.singularValues().size() - 1);
    }
    if (!(smax > 0.0) || !(smin * condition_cap > smax)) {
        fail(ErrorCode::singular_volatility,
             "singular volatility at path " + std::to_string(path) + ", step " +
                 std::to_string(step) +
                 " (condition number above cap or zero matrix)");
    }
}

} // namespace rbsde
