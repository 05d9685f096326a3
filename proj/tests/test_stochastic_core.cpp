#include "brownian.hpp"
#include "errors.hpp"
#include "paths.hpp"
#include "regression.hpp"
#include "rng.hpp"
#include "time_grid.hpp"

#include <doctest.h>

#include <cmath>

using namespace rbsde;

namespace {

ItoSpec brownian_spec(std::size_t d) {
    ItoSpec spec;
    spec.x0 = Vector::Zero(static_cast<Eigen::Index>(d));
    spec.mu = VectorField::zero(d);
    spec.sigma = MatrixField::identity(d);
    return spec;
}

} // namespace

TEST_CASE("time grid basics") {
    TimeGrid g(1.0, 4);
    CHECK(g.steps() == 4);
    CHECK(g.time(0) == 0.0);
    CHECK(g.time(1) == doctest::Approx(0.25));
    CHECK(g.time(4) == 1.0);
    CHECK(g.dt(2) == doctest::Approx(0.25));

    TimeGrid single(2.0, 1);
    CHECK(single.time(0) == 0.0);
    CHECK(single.time(1) == 2.0);

    CHECK_THROWS_AS(TimeGrid(1.0, 0), Error);
    CHECK_THROWS_AS(TimeGrid(-1.0, 4), Error);
}

TEST_CASE("brownian ensembles are reproducible bit for bit") {
    TimeGrid g(1.0, 20);
    BrownianEnsemble a = simulate_brownian(g, 500, 2, 99);
    BrownianEnsemble b = simulate_brownian(g, 500, 2, 99);
    CHECK(a.dw.data() == b.dw.data());
    BrownianEnsemble c = simulate_brownian(g, 500, 2, 100);
    CHECK(a.dw.data() != c.dw.data());
}

TEST_CASE("brownian increments have variance dt and independent components") {
    TimeGrid g(1.0, 50);
    const std::size_t M = 20000;
    BrownianEnsemble bm = simulate_brownian(g, M, 2, 7);
    const double dt = 0.02;

    const std::size_t n = M * 50;
    double sq0 = 0.0, sq1 = 0.0, cross = 0.0, sum0 = 0.0, sum1 = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t i = 0; i < 50; ++i) {
            const double a = bm.dw.at(m, i, 0), b = bm.dw.at(m, i, 1);
            sum0 += a;
            sum1 += b;
            sq0 += a * a;
            sq1 += b * b;
            cross += a * b;
        }
    }
    const double var0 = sq0 / n - (sum0 / n) * (sum0 / n);
    const double var1 = sq1 / n - (sum1 / n) * (sum1 / n);
    // Chi-square bound: SE of the sample variance is dt sqrt(2/n).
    const double se_var = dt * std::sqrt(2.0 / static_cast<double>(n));
    CHECK(std::fabs(var0 - dt) < 3.0 * se_var);
    CHECK(std::fabs(var1 - dt) < 3.0 * se_var);
    // Fisher bound on the correlation of the two components.
    const double corr = (cross / n) / std::sqrt(var0 * var1);
    CHECK(std::fabs(corr) < 3.0 / std::sqrt(static_cast<double>(n - 3)));
}

TEST_CASE("identity coefficients reproduce prefix sums exactly") {
    TimeGrid g(1.0, 30);
    BrownianEnsemble bm = simulate_brownian(g, 50, 2, 3);
    PathEnsemble paths = simulate_ito(brownian_spec(2), bm);
    for (std::size_t m = 0; m < 50; ++m) {
        double acc0 = 0.0, acc1 = 0.0;
        CHECK(paths.states.at(m, 0, 0) == 0.0);
        for (std::size_t i = 0; i < 30; ++i) {
            acc0 += bm.dw.at(m, i, 0);
            acc1 += bm.dw.at(m, i, 1);
            CHECK(paths.states.at(m, i + 1, 0) == acc0);
            CHECK(paths.states.at(m, i + 1, 1) == acc1);
        }
    }
}

TEST_CASE("gbm terminal mean matches the lognormal moment") {
    TimeGrid g(1.0, 50);
    const std::size_t M = 40000;
    BrownianEnsemble bm = simulate_brownian(g, M, 1, 11);
    ItoSpec spec;
    spec.x0 = Vector::Constant(1, 100.0);
    spec.mu = VectorField(1, [](double, const Vector& x) -> Vector {
        return 0.05 * x;
    });
    spec.sigma = MatrixField(1, [](double, const Vector& x) -> Matrix {
        return Matrix::Constant(1, 1, 0.2 * x(0));
    });
    PathEnsemble paths = simulate_ito(spec, bm);

    double sum = 0.0, sq = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        const double x = paths.states.at(m, 50, 0);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / M;
    const double sd = std::sqrt(sq / M - mean * mean);
    const double target = 100.0 * std::exp(0.05);
    CHECK(std::fabs(mean - target) < 3.0 * sd / std::sqrt(static_cast<double>(M)));
}

TEST_CASE("zero volatility is rejected with a location") {
    TimeGrid g(1.0, 5);
    BrownianEnsemble bm = simulate_brownian(g, 10, 1, 1);
    ItoSpec spec;
    spec.x0 = Vector::Constant(1, 1.0);
    spec.mu = VectorField::zero(1);
    spec.sigma = MatrixField(1, [](double, const Vector&) -> Matrix {
        return Matrix::Zero(1, 1);
    });
    CHECK_THROWS_WITH_AS(simulate_ito(spec, bm),
                         doctest::Contains("singular volatility"), Error);
}

TEST_CASE("non-finite states are flagged as blowup") {
    TimeGrid g(1.0, 5);
    BrownianEnsemble bm = simulate_brownian(g, 4, 1, 1);
    ItoSpec spec;
    spec.x0 = Vector::Constant(1, 1.0);
    spec.mu = VectorField(1, [](double t, const Vector&) -> Vector {
        return Vector::Constant(1, t > 0.3 ? std::numeric_limits<double>::infinity()
                                           : 0.0);
    });
    spec.sigma = MatrixField::identity(1);
    CHECK_THROWS_WITH_AS(simulate_ito(spec, bm), doctest::Contains("non-finite"),
                         Error);
}

TEST_CASE("girsanov density: identity measure, positivity, replay") {
    TimeGrid g(1.0, 50);
    const std::size_t M = 20000;
    BrownianEnsemble bm = simulate_brownian(g, M, 1, 21);

    CellArray zero_theta(M, 50, 1, 0.0);
    DensityPaths unit = girsanov_density(zero_theta, bm);
    for (std::size_t m = 0; m < 100; ++m) {
        for (std::size_t i = 0; i <= 50; ++i) CHECK(unit.lambda.at(m, i) == 1.0);
    }

    CellArray theta(M, 50, 1, 0.3);
    DensityPaths dens = girsanov_density(theta, bm, 0.3);
    double sum = 0.0, sq = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        CHECK(dens.lambda.at(m, 0) == 1.0);
        const double lt = dens.lambda.at(m, 50);
        CHECK(lt > 0.0);
        sum += lt;
        sq += lt * lt;
        // Pathwise replay of the log-density by direct summation.
        double replay = 0.0;
        for (std::size_t i = 0; i < 50; ++i) {
            replay += 0.3 * bm.dw.at(m, i, 0) - 0.5 * 0.09 * g.dt(i);
        }
        CHECK(std::fabs(replay - dens.log_lambda.at(m, 50)) <= 1e-12);
    }
    const double mean = sum / M;
    const double sd = std::sqrt(sq / M - mean * mean);
    CHECK(std::fabs(mean - 1.0) < 3.0 * sd / std::sqrt(static_cast<double>(M)));

    CellArray big(M, 50, 1, 2.0);
    CHECK_THROWS_WITH_AS(girsanov_density(big, bm, 0.5),
                         doctest::Contains("bound"), Error);
}

TEST_CASE("regression reproduces targets in the basis span") {
    rng::Stream rnd(5);
    const std::size_t M = 2000;
    Eigen::MatrixXd features(M, 1);
    Eigen::VectorXd targets(M);
    for (std::size_t m = 0; m < M; ++m) {
        const double x = rnd.next_uniform(-2.0, 2.0);
        features(static_cast<Eigen::Index>(m), 0) = x;
        targets(static_cast<Eigen::Index>(m)) = 1.5 - 0.7 * x + 0.25 * x * x * x;
    }
    FitResult fit = conditional_expectation(features, targets, 3);
    CHECK(fit.residual_rms <= 1e-10);
    CHECK((fit.fitted - targets).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK_FALSE(fit.rank_deficient);

    // Projection idempotence: refitting the fit returns it unchanged.
    FitResult refit = conditional_expectation(features, fit.fitted, 3);
    CHECK((refit.fitted - fit.fitted).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("regression captures constants and degenerate designs") {
    Eigen::MatrixXd features = Eigen::MatrixXd::Zero(100, 1); // zero spread
    Eigen::VectorXd targets = Eigen::VectorXd::Constant(100, 3.25);
    FitResult fit = conditional_expectation(features, targets, 3);
    CHECK(fit.fitted.isApproxToConstant(3.25, 1e-12));
    CHECK_FALSE(fit.rank_deficient); // deterministic coordinate was dropped
}

TEST_CASE("rank-deficient designs fall back to minimum norm and get flagged") {
    Eigen::MatrixXd design(50, 3);
    for (int m = 0; m < 50; ++m) {
        design(m, 0) = 1.0;
        design(m, 1) = static_cast<double>(m);
        design(m, 2) = 2.0 * static_cast<double>(m); // collinear
    }
    Eigen::VectorXd targets = design.col(1);
    FitResult fit = fit_least_squares(design, targets);
    CHECK(fit.rank_deficient);
    CHECK(fit.rank == 2);
    CHECK((fit.fitted - targets).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("conditional second moment of brownian terminal value") {
    // E(W_T^2 | W_t) = W_t^2 + (T - t); fitted coefficients on a degree-2
    // basis must recover it within 3 coefficient standard errors.
    TimeGrid g(1.0, 4);
    const std::size_t M = 50000;
    BrownianEnsemble bm = simulate_brownian(g, M, 1, 31);
    PathEnsemble paths = simulate_ito(brownian_spec(1), bm);

    const std::size_t t_index = 2; // t = 0.5
    Eigen::MatrixXd features(M, 1);
    Eigen::VectorXd targets(M);
    for (std::size_t m = 0; m < M; ++m) {
        const double wt = paths.states.at(m, t_index, 0);
        const double wT = paths.states.at(m, 4, 0);
        features(static_cast<Eigen::Index>(m), 0) = wt;
        targets(static_cast<Eigen::Index>(m)) = wT * wT;
    }

    // Raw monomial design so the coefficients are directly interpretable.
    Eigen::MatrixXd design(M, 3);
    for (std::size_t m = 0; m < M; ++m) {
        const double x = features(static_cast<Eigen::Index>(m), 0);
        design(static_cast<Eigen::Index>(m), 0) = 1.0;
        design(static_cast<Eigen::Index>(m), 1) = x;
        design(static_cast<Eigen::Index>(m), 2) = x * x;
    }
    FitResult fit = fit_least_squares(design, targets);

    Eigen::MatrixXd xtx_inv =
        (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(3, 3));
    const double sigma2 =
        (targets - fit.fitted).squaredNorm() / static_cast<double>(M - 3);
    const Eigen::VectorXd truth((Eigen::VectorXd(3) << 0.5, 0.0, 1.0).finished());
    for (int c = 0; c < 3; ++c) {
        const double se = std::sqrt(sigma2 * xtx_inv(c, c));
        CHECK(std::fabs(fit.coefficients(c) - truth(c)) < 3.0 * se);
    }
}
