#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fieldreg/density.hpp"
#include "fieldreg/pipeline.hpp"

using namespace fieldreg;

namespace {

double trapezoid_mass(const DensityModel& model) {
    const auto g = build_grid(model.dim(), kNormalizationNodes);
    const auto w = quadrature_weights(g);
    const auto t = tabulate_density(model, g);
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * t.density[j];
    return s;
}

// Centered difference of log f with step 1e-5 along `axis`.
double fd_score(const DensityModel& model, Point x, int axis) {
    const double step = 1e-5;
    Point lo = x, hi = x;
    lo[axis] -= step;
    hi[axis] += step;
    return (std::log(model.evaluate(hi).density) - std::log(model.evaluate(lo).density)) / (2.0 * step);
}

std::vector<Point> draw(const DensityModel& model, std::size_t n, std::uint64_t seed) {
    SynthSpec spec{ConditionalMean::constant(model.dim(), 0.0), 0.0, n, model, seed};
    return synth_generate(spec).x;
}

} // namespace

TEST(Density, UniformIsOneWithZeroScore) {
    const auto u = DensityModel::uniform(2);
    for (const Point x : {Point{0.0, 0.0}, Point{0.3, 0.9}, Point{1.0, 1.0}}) {
        const auto e = density_eval(u, x);
        EXPECT_EQ(e.density, 1.0);
        EXPECT_EQ(e.score[0], 0.0);
        EXPECT_EQ(e.score[1], 0.0);
        EXPECT_FALSE(e.clamped);
    }
}

TEST(Density, TruncatedGaussianScoreAtSymmetryPoint) {
    const auto g = DensityModel::truncated_gaussian(1, {0.5, 0.0}, {0.2, 1.0});
    EXPECT_EQ(g.evaluate({0.5, 0.0}).score[0], 0.0);
}

TEST(Density, TruncatedGaussianScoreMatchesLogDerivative) {
    const auto g = DensityModel::truncated_gaussian(1, {0.5, 0.0}, {0.2, 1.0});
    const double score = g.evaluate({0.7, 0.0}).score[0];
    EXPECT_NEAR(score, -5.0, 1e-12);
    EXPECT_NEAR(fd_score(g, {0.7, 0.0}, 0), -5.0, 5e-6);
}

TEST(Density, OutsideDomainThrows) {
    const auto g = DensityModel::uniform(1);
    EXPECT_THROW(g.evaluate({1.5, 0.0}), DomainError);
    EXPECT_THROW(g.evaluate({-1e-9, 0.0}), DomainError);
}

TEST(Density, NormalizedOnReferenceGrid) {
    EXPECT_NEAR(trapezoid_mass(DensityModel::uniform(1)), 1.0, 1e-12);
    EXPECT_NEAR(trapezoid_mass(DensityModel::truncated_gaussian(1, {0.5, 0}, {0.2, 1})), 1.0, 1e-3);
    EXPECT_NEAR(trapezoid_mass(DensityModel::truncated_gaussian(2, {0.3, 0.6}, {0.25, 0.15})), 1.0, 1e-3);
}

TEST(Density, ScoreConsistencyProperty) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    const auto samples = draw(DensityModel::truncated_gaussian(2, {0.4, 0.6}, {0.2, 0.3}), 300, 11);
    const std::vector<DensityModel> models = {
        DensityModel::uniform(2),
        DensityModel::truncated_gaussian(2, {0.4, 0.6}, {0.2, 0.3}),
        kde_fit(samples, 2, AutoBandwidth{}),
        kde_fit(samples, 2, 0.08),
    };
    for (const auto& model : models) {
        for (int trial = 0; trial < 50; ++trial) {
            const Point x{u(rng), u(rng)};
            const auto e = model.evaluate(x);
            if (e.density <= 10.0 * model.floor()) continue;
            for (int a = 0; a < 2; ++a) {
                const double fd = fd_score(model, x, a);
                EXPECT_NEAR(e.score[a], fd, 1e-4 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST(Density, ClampedEvaluationsAreFlagged) {
    // Narrow kernels around one point leave most of the domain below the floor.
    const std::vector<Point> samples = {{0.1, 0.0}, {0.1001, 0.0}};
    const auto model = kde_fit(samples, 1, 0.001);
    const auto far = model.evaluate({0.9, 0.0});
    EXPECT_TRUE(far.clamped);
    EXPECT_EQ(far.density, model.floor());
    EXPECT_EQ(far.score[0], 0.0);
    const auto t = tabulate_density(model, build_grid(1, 101));
    EXPECT_GT(t.clamp_count, 90u);
    for (double d : t.density) EXPECT_GE(d, model.floor());
}

TEST(Kde, UniformSamplesRecoverFlatDensity) {
    const auto samples = draw(DensityModel::uniform(1), 10000, 3);
    const auto kde = kde_fit(samples, 1, AutoBandwidth{});
    for (double x = 0.1; x <= 0.9 + 1e-12; x += 0.01) EXPECT_NEAR(kde.evaluate({x, 0.0}).density, 1.0, 0.1) << x;
    EXPECT_NEAR(trapezoid_mass(kde), 1.0, 1e-2);
}

TEST(Kde, TwoSamplesSymmetricAboutMidpoint) {
    const std::vector<Point> samples = {{0.3, 0.0}, {0.7, 0.0}};
    const auto kde = kde_fit(samples, 1, 0.1);
    for (double t = 0.0; t <= 0.5; t += 0.05) {
        EXPECT_NEAR(kde.evaluate({0.5 - t, 0.0}).density, kde.evaluate({0.5 + t, 0.0}).density, 1e-12);
    }
}

TEST(Kde, ScoreApproximatesGeneratingDensity) {
    const auto truth = DensityModel::truncated_gaussian(1, {0.5, 0.0}, {0.2, 1.0});
    const auto kde = kde_fit(draw(truth, 20000, 5), 1, AutoBandwidth{});
    EXPECT_NEAR(kde.evaluate({0.7, 0.0}).score[0], -5.0, 0.5);
}

TEST(Kde, RejectsDegenerateInput) {
    const std::vector<Point> same = {{0.4, 0.0}, {0.4, 0.0}, {0.4, 0.0}};
    EXPECT_THROW(kde_fit(same, 1, AutoBandwidth{}), InvalidArgument);
    EXPECT_NO_THROW(kde_fit(same, 1, 0.1));
    const std::vector<Point> one = {{0.4, 0.0}};
    EXPECT_THROW(kde_fit(one, 1, 0.1), InvalidArgument);
    EXPECT_THROW(kde_fit(same, 1, -1.0), InvalidArgument);
}
