#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "fieldreg/grid.hpp"

using namespace fieldreg;

TEST(Grid, OneDimensionalThreeNodes) {
    const auto g = build_grid(1, 3);
    EXPECT_EQ(g.node_count(), 3u);
    EXPECT_DOUBLE_EQ(g.spacing(), 0.5);
    EXPECT_DOUBLE_EQ(g.point(0)[0], 0.0);
    EXPECT_DOUBLE_EQ(g.point(1)[0], 0.5);
    EXPECT_DOUBLE_EQ(g.point(2)[0], 1.0);
}

TEST(Grid, TwoDimensionalLexicographicCorner) {
    const auto g = build_grid(2, 3);
    EXPECT_EQ(g.node_count(), 9u);
    EXPECT_EQ(g.point(8), (Point{1.0, 1.0}));
    EXPECT_EQ(g.point(1), (Point{0.0, 0.5}));
    EXPECT_EQ(g.point(3), (Point{0.5, 0.0}));
    EXPECT_FALSE(g.on_boundary(4));
    for (std::size_t j : {0u, 1u, 2u, 3u, 5u, 6u, 7u, 8u}) EXPECT_TRUE(g.on_boundary(j));
}

TEST(Grid, SpacingHundredIntervals) {
    const auto g = build_grid(1, 101);
    EXPECT_DOUBLE_EQ(g.spacing(), 0.01);
    EXPECT_NEAR(g.spacing() * 100, 1.0, 1e-15);
    EXPECT_EQ(g.point(100)[0], 1.0);
}

TEST(Grid, RejectsInvalidShapes) {
    EXPECT_THROW(build_grid(0, 11), InvalidArgument);
    EXPECT_THROW(build_grid(3, 11), InvalidArgument);
    EXPECT_THROW(build_grid(1, 2), InvalidArgument);
}

TEST(Quadrature, TrapezoidThreeNodes) {
    const auto w = quadrature_weights(build_grid(1, 3));
    ASSERT_EQ(w.size(), 3u);
    EXPECT_DOUBLE_EQ(w[0], 0.25);
    EXPECT_DOUBLE_EQ(w[1], 0.5);
    EXPECT_DOUBLE_EQ(w[2], 0.25);
}

TEST(Quadrature, ExactForLinearAndSecondOrderForQuadratic) {
    const auto g = build_grid(1, 101);
    const auto w = quadrature_weights(g);
    double lin = 0.0, quad = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double x = g.point(j)[0];
        lin += w[j] * x;
        quad += w[j] * x * x;
    }
    EXPECT_NEAR(lin, 0.5, 1e-15);
    EXPECT_NEAR(quad, 1.0 / 3.0, 1e-4);
}

TEST(Quadrature, WeightsPositiveAndSumToOne) {
    for (int dim : {1, 2}) {
        for (std::size_t n : {3u, 4u, 17u, 101u}) {
            const auto w = quadrature_weights(build_grid(dim, n));
            for (double v : w) EXPECT_GT(v, 0.0);
            EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-13) << dim << " " << n;
        }
    }
}

TEST(GradientFd, ConstantFieldHasZeroGradient) {
    const auto g = build_grid(2, 9);
    const auto grad = gradient_fd(ScalarField(g, 4.2));
    for (std::size_t j = 0; j < g.node_count(); ++j) {
        EXPECT_EQ(grad[j][0], 0.0);
        EXPECT_EQ(grad[j][1], 0.0);
    }
}

TEST(GradientFd, ExactOnAffineFields) {
    for (int dim : {1, 2}) {
        const auto g = build_grid(dim, 21);
        const auto f = ScalarField::from_function(g, [&](const Point& x) { return dim == 1 ? x[0] : 2.0 - 3.0 * x[0] + 0.5 * x[1]; });
        const auto grad = gradient_fd(f);
        for (std::size_t j = 0; j < g.node_count(); ++j) {
            if (dim == 1) {
                EXPECT_NEAR(grad[j][0], 1.0, 1e-12);
            } else {
                EXPECT_NEAR(grad[j][0], -3.0, 1e-12);
                EXPECT_NEAR(grad[j][1], 0.5, 1e-12);
            }
        }
    }
}

namespace {

double interior_gradient_error(std::size_t n) {
    const auto g = build_grid(1, n);
    const double tau = 2.0 * std::numbers::pi;
    const auto f = ScalarField::from_function(g, [&](const Point& x) { return std::sin(tau * x[0]); });
    const auto grad = gradient_fd(f);
    double err = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j) {
        err = std::max(err, std::abs(grad[j][0] - tau * std::cos(tau * g.point(j)[0])));
    }
    return err;
}

} // namespace

TEST(GradientFd, InteriorSecondOrderUnderRefinement) {
    double prev = interior_gradient_error(51);
    for (std::size_t n : {101u, 201u, 401u}) {
        const double err = interior_gradient_error(n);
        EXPECT_GE(std::log2(prev / err), 1.9) << "n=" << n;
        prev = err;
    }
    EXPECT_LE(interior_gradient_error(201), 2.0 * std::pow(2.0 * std::numbers::pi, 3) / 6.0 * 1e-4 * 0.25);
}

TEST(ScalarField, RejectsWrongLength) {
    EXPECT_THROW(ScalarField(build_grid(1, 5), std::vector<double>(4)), InvalidArgument);
}
