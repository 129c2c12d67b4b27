#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fieldreg/analytic.hpp"
#include "fieldreg/field_solver.hpp"

using namespace fieldreg;

namespace {

constexpr double pi = std::numbers::pi;

// Five-point one-sided first derivative, accurate to O(step^4).
double derivative_forward(const CosineSolutionParams& p, double x, double step) {
    auto f = [&](int k) { return cos_solution(p, x + k * step); };
    return (-25 * f(0) + 48 * f(1) - 36 * f(2) + 16 * f(3) - 3 * f(4)) / (12 * step);
}

double derivative_backward(const CosineSolutionParams& p, double x, double step) {
    auto f = [&](int k) { return cos_solution(p, x - k * step); };
    return (25 * f(0) - 48 * f(1) + 36 * f(2) - 16 * f(3) + 3 * f(4)) / (12 * step);
}

// max |-lambda g'' + g - cos(omega x)| over interior points, g'' by the
// five-point central stencil.
double ode_residual(const CosineSolutionParams& p, int points) {
    const double step = 1e-3;
    double worst = 0.0;
    for (int i = 0; i < points; ++i) {
        const double x = 2 * step + (1.0 - 4 * step) * (i + 0.5) / points;
        auto f = [&](double y) { return cos_solution(p, y); };
        const double g2 = (-f(x + 2 * step) + 16 * f(x + step) - 30 * f(x) + 16 * f(x - step) - f(x - 2 * step)) /
                          (12 * step * step);
        worst = std::max(worst, std::abs(-p.lambda * g2 + f(x) - std::cos(p.omega * x)));
    }
    return worst;
}

} // namespace

TEST(CosSolution, ConventionsAgreeWhenSineVanishes) {
    for (auto conv : {CosineConvention::sinh_basis, CosineConvention::neumann_consistent}) {
        EXPECT_NEAR(cos_solution({1.0, pi, conv}, 0.0), 1.0 / (1.0 + pi * pi), 1e-15);
    }
}

TEST(CosSolution, SmallLambdaApproachesCosine) {
    for (auto conv : {CosineConvention::sinh_basis, CosineConvention::neumann_consistent}) {
        EXPECT_NEAR(cos_solution({1e-8, pi, conv}, 0.3), std::cos(0.3 * pi), 1e-3);
        EXPECT_TRUE(std::isfinite(cos_solution({1e-12, 2.0, conv}, 1.0)));
    }
}

TEST(CosSolution, NeumannConsistentSatisfiesBoundaryConditions) {
    const CosineSolutionParams p{0.5, 2.0, CosineConvention::neumann_consistent};
    EXPECT_LE(std::abs(derivative_forward(p, 0.0, 1e-3)), 1e-8);
    EXPECT_LE(std::abs(derivative_backward(p, 1.0, 1e-3)), 1e-8);
}

TEST(CosSolution, OnlyNeumannConsistentConventionSatisfiesBothBoundaryConditions) {
    for (double omega : {1.0, 2.0, 4.5}) {
        for (double lambda : {0.05, 0.5, 2.0}) {
            const CosineSolutionParams good{lambda, omega, CosineConvention::neumann_consistent};
            const CosineSolutionParams sinh{lambda, omega, CosineConvention::sinh_basis};
            EXPECT_LE(std::max(std::abs(derivative_forward(good, 0.0, 1e-3)), std::abs(derivative_backward(good, 1.0, 1e-3))), 1e-8);
            EXPECT_GT(std::max(std::abs(derivative_forward(sinh, 0.0, 1e-3)), std::abs(derivative_backward(sinh, 1.0, 1e-3))), 1e-8);
        }
    }
}

TEST(CosSolution, BothConventionsSolveTheInteriorOde) {
    for (auto conv : {CosineConvention::sinh_basis, CosineConvention::neumann_consistent}) {
        for (double lambda : {0.01, 0.5, 1.0}) {
            EXPECT_LE(ode_residual({lambda, 2.0, conv}, 10000), 1e-8) << lambda;
        }
    }
}

TEST(CosSolution, DistanceToCosineBoundedBySqrtLambda) {
    for (auto conv : {CosineConvention::sinh_basis, CosineConvention::neumann_consistent}) {
        for (double omega : {pi, 2.0}) {
            for (double lambda : {1e-2, 1e-3, 1e-4}) {
                double sup = 0.0;
                for (int i = 0; i <= 2000; ++i) {
                    const double x = i / 2000.0;
                    sup = std::max(sup, std::abs(cos_solution({lambda, omega, conv}, x) - std::cos(omega * x)));
                }
                EXPECT_LE(sup / std::sqrt(lambda), 10.0);
            }
        }
    }
}

TEST(CosSolution, InvalidParameters) {
    EXPECT_THROW(cos_solution({0.0, 1.0}, 0.5), InvalidArgument);
    EXPECT_THROW(cos_solution({-1.0, 1.0}, 0.5), InvalidArgument);
    EXPECT_THROW(cos_solution({1.0, 1.0}, 1.5), DomainError);
}

TEST(WeightedMeanLimit, Examples) {
    const auto g = build_grid(1, 201);
    EXPECT_NEAR(weighted_mean_limit(ConditionalMean::constant(1, 3.25), DensityModel::truncated_gaussian(1, {0.2, 0}, {0.3, 1}), g),
                3.25, 1e-14);
    EXPECT_NEAR(weighted_mean_limit(ConditionalMean::cosine(1, 2 * pi), DensityModel::uniform(1), g), 0.0, 1e-6);
    EXPECT_NEAR(weighted_mean_limit(ConditionalMean::polynomial(1, {0.0, 1.0}),
                                    DensityModel::truncated_gaussian(1, {0.5, 0}, {0.2, 1}), g),
                0.5, 1e-3);
}

TEST(WeightedMeanLimit, LargeLambdaSolutionsApproachIt) {
    const auto g = build_grid(2, 21);
    const auto m = ConditionalMean::from_function(2, [](const Point& x) { return x[0] * x[0] - x[1]; });
    const auto density = DensityModel::truncated_gaussian(2, {0.3, 0.6}, {0.2, 0.25});
    const double limit = weighted_mean_limit(m, density, g);
    const auto sol = solve_field(assemble_system(m, density, RiskSpec{1e6}, g));
    for (double v : sol.field.values()) EXPECT_NEAR(v, limit, 1e-3);
}

TEST(LinearPenaltyCheck, RidgeIdentity) {
    const auto g1 = build_grid(1, 101);
    const std::vector<double> constant{7.0, 0.0};
    EXPECT_EQ(linear_penalty_check(constant, DensityModel::uniform(1), g1), 0.0);
    const std::vector<double> slope{0.0, 3.0};
    EXPECT_NEAR(linear_penalty_check(slope, DensityModel::uniform(1), g1), 9.0, 1e-10);
    const std::vector<double> beta{1.0, 2.0, -1.0};
    EXPECT_NEAR(linear_penalty_check(beta, DensityModel::truncated_gaussian(2, {0.5, 0.5}, {0.2, 0.2}), build_grid(2, 41)),
                5.0, 1e-6);
}

TEST(LinearPenaltyCheck, DensityInvariant) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0.0, 2.0);
    const auto g = build_grid(2, 31);
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<double> beta{n(rng), n(rng), n(rng)};
        const double a = linear_penalty_check(beta, DensityModel::uniform(2), g);
        const double b = linear_penalty_check(beta, DensityModel::truncated_gaussian(2, {0.7, 0.2}, {0.1, 0.4}), g);
        EXPECT_NEAR(a, b, 1e-6);
    }
    const std::vector<double> wrong{1.0, 2.0};
    EXPECT_THROW(linear_penalty_check(wrong, DensityModel::uniform(2), g), InvalidArgument);
}

TEST(ReferenceMinimizer, GaussianMeanEqualsMedian) {
    const auto g = build_grid(1, 11);
    const auto dist = ConditionalDistribution::gaussian(ConditionalMean::polynomial(1, {0.0, 1.0}), 1.0);
    for (auto kind : {RiskKind::mse, RiskKind::mae}) {
        const auto f = reference_minimizer(kind, dist, g);
        for (std::size_t j = 0; j < g.node_count(); ++j) EXPECT_DOUBLE_EQ(f[j], g.point(j)[0]);
    }
    const auto wide = reference_minimizer(RiskKind::mse, ConditionalDistribution::gaussian(ConditionalMean::constant(1, 0.0), 5.0), g);
    for (double v : wide.values()) EXPECT_EQ(v, 0.0);
}

TEST(ReferenceMinimizer, ExponentialMeanAndMedian) {
    const auto g = build_grid(1, 11);
    const auto dist = ConditionalDistribution::exponential(ConditionalMean::constant(1, 1.0));
    const auto mean = reference_minimizer(RiskKind::mse, dist, g);
    const auto median = reference_minimizer(RiskKind::mae, dist, g);
    for (double v : mean.values()) EXPECT_NEAR(v, 1.0, 1e-12);
    for (double v : median.values()) EXPECT_NEAR(v, 0.693147180559945, 1e-12);
}

TEST(ReferenceMinimizer, UnsupportedCombinations) {
    const auto g = build_grid(1, 11);
    EXPECT_THROW(reference_minimizer(RiskKind::mse, ConditionalDistribution::cauchy(ConditionalMean::constant(1, 0.0), 1.0), g),
                 InvalidArgument);
    EXPECT_NO_THROW(reference_minimizer(RiskKind::mae, ConditionalDistribution::cauchy(ConditionalMean::constant(1, 0.0), 1.0), g));
    EXPECT_THROW(reference_minimizer(RiskKind::mse, ConditionalDistribution::exponential(ConditionalMean::constant(1, -1.0)), g),
                 InvalidArgument);
}
