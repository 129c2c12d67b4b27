#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fieldreg/field_solver.hpp"
#include "fieldreg/io.hpp"
#include "fieldreg/pipeline.hpp"

using namespace fieldreg;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> quarter_decades() {
    std::vector<double> out{0.0};
    for (int k = -8; k <= 4; ++k) out.push_back(std::pow(10.0, k) / 4.0);
    return out;
}

} // namespace

TEST(SynthGenerate, NoiselessConstant) {
    const auto d = synth_generate({ConditionalMean::constant(1, 3.0), 0.0, 100, DensityModel::uniform(1), 1});
    for (double y : d.y) EXPECT_EQ(y, 3.0);
}

TEST(SynthGenerate, UniformSampleMean) {
    const auto d = synth_generate({ConditionalMean::constant(1, 0.0), 0.0, 100000, DensityModel::uniform(1), 42});
    double mean = 0.0;
    for (const auto& x : d.x) mean += x[0];
    mean /= static_cast<double>(d.size());
    EXPECT_GE(mean, 0.495);
    EXPECT_LE(mean, 0.505);
}

TEST(SynthGenerate, DeterministicUnderSeed) {
    const SynthSpec spec{ConditionalMean::cosine(2, 2.0), 0.3, 500,
                         DensityModel::truncated_gaussian(2, {0.4, 0.6}, {0.2, 0.1}), 77};
    EXPECT_EQ(io::dataset_to_csv(synth_generate(spec)), io::dataset_to_csv(synth_generate(spec)));
    SynthSpec other = spec;
    other.seed = 78;
    EXPECT_NE(io::dataset_to_csv(synth_generate(spec)), io::dataset_to_csv(synth_generate(other)));
}

TEST(SynthGenerate, TruncatedGaussianSamplesStayInDomain) {
    const auto d = synth_generate({ConditionalMean::constant(1, 0.0), 1.0, 20000,
                                   DensityModel::truncated_gaussian(1, {0.5, 0}, {0.2, 1}), 9});
    double mean = 0.0;
    for (const auto& x : d.x) {
        EXPECT_GE(x[0], 0.0);
        EXPECT_LE(x[0], 1.0);
        mean += x[0];
    }
    EXPECT_NEAR(mean / static_cast<double>(d.size()), 0.5, 0.005);
}

TEST(SynthGenerate, RejectsKernelMixtureSampling) {
    const std::vector<Point> s{{0.2, 0.0}, {0.8, 0.0}};
    EXPECT_THROW(synth_generate({ConditionalMean::constant(1, 0.0), 0.0, 10, kde_fit(s, 1, 0.1), 1}), InvalidArgument);
}

TEST(MseToTruth, Examples) {
    const auto g = build_grid(1, 201);
    const auto truth = ConditionalMean::cosine(1, pi);
    const auto nodal = truth.nodal(g);
    EXPECT_EQ(evaluate_mse_to_truth(nodal, truth, g), 0.0);
    auto shifted = nodal;
    for (std::size_t j = 0; j < shifted.size(); ++j) shifted[j] += 1.0;
    EXPECT_NEAR(evaluate_mse_to_truth(shifted, truth, g), 1.0, 1e-12);
    EXPECT_NEAR(evaluate_mse_to_truth(ScalarField(g, 0.0), truth, g), 0.5, 1e-3);
}

TEST(PostRegularize, ZeroLambdaPassesEstimateThrough) {
    const auto g = build_grid(1, 51);
    const auto data = synth_generate({ConditionalMean::cosine(1, pi), 0.5, 2000, DensityModel::uniform(1), 5});
    for (auto kind : {EstimatorKind::binned, EstimatorKind::nadaraya_watson}) {
        const auto res = post_regularize(data, {kind, AutoBandwidth{}}, 0.0, g, Measure::feature_density);
        const auto plug_in = res.estimate.nodal(g);
        for (std::size_t j = 0; j < g.node_count(); ++j) EXPECT_EQ(res.field[j], plug_in[j]);
    }
}

TEST(PostRegularize, NoiselessNodeDataConservesWeightedMean) {
    const auto g = build_grid(1, 41);
    Dataset data;
    for (std::size_t j = 0; j < g.node_count(); ++j) {
        data.x.push_back(g.point(j));
        data.y.push_back(std::cos(pi * g.point(j)[0]) + 2.0);
    }
    for (double lambda : {0.01, 1.0, 100.0}) {
        const auto res = post_regularize(data, {}, lambda, g, Measure::feature_density);
        const auto sys = assemble_system(res.estimate, res.density, RiskSpec{lambda}, g);
        const double a = conserved_mean(sys, res.field.values());
        const double b = conserved_mean(sys, res.estimate.nodal(g).values());
        EXPECT_NEAR(a, b, 1e-8 * std::abs(b));
    }
}

TEST(PostRegularize, SmoothingBeatsRawEstimateOnNoisyData) {
    DenoiseConfig cfg;
    cfg.synth = {ConditionalMean::cosine(1, pi), 0.5, 5000, DensityModel::uniform(1), 20240601};
    cfg.grid = build_grid(1, 51);
    cfg.lambdas = quarter_decades();
    const auto res = run_denoise(cfg);
    ASSERT_EQ(res.report.lambdas.size(), res.report.mse_to_truth.size());
    ASSERT_EQ(res.fields.size(), res.report.lambdas.size());
    EXPECT_EQ(res.report.lambdas[0], 0.0);
    double best = INFINITY;
    for (double v : res.report.mse_to_truth) best = std::min(best, v);
    EXPECT_LT(best, res.report.mse_to_truth[0]);
    EXPECT_GT(res.report.chosen_lambda, 0.0);
    EXPECT_NEAR(res.report.estimator_rmse * res.report.estimator_rmse, res.report.mse_to_truth[0], 1e-15);
}

TEST(PostRegularize, PenaltyDecreasesAlongSweep) {
    const auto g = build_grid(1, 51);
    const auto data = synth_generate({ConditionalMean::cosine(1, pi), 0.5, 3000, DensityModel::uniform(1), 6});
    double prev = INFINITY;
    for (double lambda : quarter_decades()) {
        const auto res = post_regularize(data, {}, lambda, g, Measure::feature_density);
        const auto terms = risk_terms(res.field, res.estimate, res.density, RiskSpec{lambda}, g);
        EXPECT_LE(terms.penalty, prev + 1e-10);
        prev = terms.penalty;
    }
}

TEST(PostRegularize, DimensionMismatch) {
    const auto data = synth_generate({ConditionalMean::cosine(1, pi), 0.1, 50, DensityModel::uniform(1), 5});
    EXPECT_THROW(post_regularize(data, {}, 1.0, build_grid(2, 11), Measure::feature_density), GridMismatch);
}
