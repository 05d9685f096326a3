#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

namespace rbsde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Coefficient fields are opaque (t, x) evaluators. A declared bound, when
// present, is asserted on every evaluation (sup-norm of the value); the
// fields cannot be inspected symbolically, so that is the only place the
// boundedness assumptions can be enforced.

class ScalarField {
public:
    using Fn = std::function<double(double t, const Vector& x)>;

    ScalarField() = default;
    ScalarField(Fn fn, std::optional<double> bound = std::nullopt,
                bool constant = false, std::string name = {});

    static ScalarField constant(double value, std::string name = {});

    double operator()(double t, const Vector& x) const;
    std::optional<double> bound() const { return bound_; }
    bool is_constant() const { return constant_; }
    const std::string& name() const { return name_; }

private:
    Fn fn_;
    std::optional<double> bound_;
    bool constant_ = false;
    std::string name_;
};

class VectorField {
public:
    using Fn = std::function<Vector(double t, const Vector& x)>;

    VectorField() = default;
    VectorField(std::size_t dim, Fn fn, std::optional<double> bound = std::nullopt,
                bool constant = false, std::string name = {});

    static VectorField constant(const Vector& value, std::string name = {});
    /// value(t, x) = intercept + slope * x (componentwise slope).
    static VectorField affine(const Vector& intercept, const Vector& slope,
                              double bound, std::string name = {});
    static VectorField zero(std::size_t dim);

    Vector operator()(double t, const Vector& x) const;
    std::size_t dim() const { return dim_; }
    std::optional<double> bound() const { return bound_; }
    bool is_constant() const { return constant_; }
    const std::string& name() const { return name_; }

private:
    std::size_t dim_ = 0;
    Fn fn_;
    std::optional<double> bound_;
    bool constant_ = false;
    std::string name_;
};

class MatrixField {
public:
    using Fn = std::function<Matrix(double t, const Vector& x)>;

    MatrixField() = default;
    MatrixField(std::size_t dim, Fn fn, std::optional<double> bound = std::nullopt,
                bool constant = false, std::string name = {});

    static MatrixField constant(const Matrix& value, std::string name = {});
    static MatrixField identity(std::size_t dim);

    Matrix operator()(double t, const Vector& x) const;
    std::size_t dim() const { return dim_; }
    std::optional<double> bound() const { return bound_; }
    bool is_constant() const { return constant_; }
    const std::string& name() const { return name_; }

private:
    std::size_t dim_ = 0;
    Fn fn_;
    std::optional<double> bound_;
    bool constant_ = false;
    std::string name_;
};

/// Drift/volatility pair of an Ito process dX = mu dt + sigma dW together
/// with its initial state. sigma must stay invertible wherever it is
/// evaluated; condition_cap is the rejection threshold.
struct ItoSpec {
    Vector x0;
    VectorField mu;
    MatrixField sigma;
    double condition_cap = 1e8;

    std::size_t dim() const { return static_cast<std::size_t>(x0.size()); }
    void check_consistent() const;
};

/// Smallest/largest singular value ratio check. Throws singular-volatility
/// with the (path, step) location when the cap is exceeded.
void check_invertible(const Matrix& sigma, double condition_cap,
                      std::size_t path, std::size_t step);

} // namespace rbsde
