#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "fieldreg/conditional.hpp"
#include "fieldreg/density.hpp"
#include "fieldreg/error.hpp"
#include "fieldreg/field_solver.hpp"
#include "fieldreg/grid.hpp"
#include "fieldreg/risk.hpp"

namespace fieldreg {

// Y_i = truth(X_i) + eps_i with X_i ~ density and eps_i ~ N(0, noise_sigma^2).
struct SynthSpec {
    ConditionalMean truth = ConditionalMean::constant(1, 0.0);
    double noise_sigma = 0.0;
    std::size_t n_samples = 1;
    DensityModel density = DensityModel::uniform(1);
    std::uint64_t seed = 0;
};

namespace detail {

// Uniform draw in (0,1) built from 53 random bits, independent of the
// standard library's distribution implementations.
inline double open_unit(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double std_normal_quantile(double p) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

inline double sample_axis(const DensityModel& density, int axis, double u) {
    if (density.is_uniform()) return u;
    const auto& g = std::get<TruncatedGaussian>(density.kind());
    const double lo = std_normal_cdf(-g.mu[axis] / g.sigma[axis]);
    const double hi = std_normal_cdf((1.0 - g.mu[axis]) / g.sigma[axis]);
    const double x = g.mu[axis] + g.sigma[axis] * std_normal_quantile(lo + u * (hi - lo));
    return std::clamp(x, 0.0, 1.0);
}

} // namespace detail

// Deterministic given the seed: X by per-axis inverse CDF, noise by the normal
// quantile of a uniform draw.
inline Dataset synth_generate(const SynthSpec& spec) {
    if (spec.n_samples < 1) throw InvalidArgument("n_samples must be >= 1");
    if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
        throw InvalidArgument("noise sigma must be finite and >= 0");
    }
    if (spec.truth.dim() != spec.density.dim()) throw GridMismatch("truth and density dimensions differ");
    if (std::holds_alternative<KernelMixture>(spec.density.kind())) {
        throw InvalidArgument("sampling supports only product densities (uniform, gauss)");
    }
    std::mt19937_64 rng(spec.seed);
    Dataset data;
    data.dim = spec.density.dim();
    data.x.reserve(spec.n_samples);
    data.y.reserve(spec.n_samples);
    for (std::size_t i = 0; i < spec.n_samples; ++i) {
        Point x{0.0, 0.0};
        for (int a = 0; a < data.dim; ++a) x[a] = detail::sample_axis(spec.density, a, detail::open_unit(rng));
        const double eps = spec.noise_sigma * detail::std_normal_quantile(detail::open_unit(rng));
        data.x.push_back(x);
        data.y.push_back(spec.truth(x) + eps);
    }
    return data;
}

enum class EstimatorKind { binned, nadaraya_watson };

struct EstimatorConfig {
    EstimatorKind kind = EstimatorKind::binned;
    Bandwidth bandwidth = AutoBandwidth{};
};

inline ConditionalMean fit_estimator(const Dataset& data, const EstimatorConfig& cfg, const Grid& grid) {
    return cfg.kind == EstimatorKind::binned ? binned_mean_estimator(data, grid)
                                             : nadaraya_watson(data, cfg.bandwidth);
}

// sum_j w_j (field_j - truth(x_j))^2
inline double evaluate_mse_to_truth(const ScalarField& field, const ConditionalMean& truth, const Grid& grid) {
    require_same_grid(field.grid(), grid);
    const auto w = quadrature_weights(grid);
    double s = 0.0;
    for (std::size_t j = 0; j < grid.node_count(); ++j) {
        const double d = field[j] - truth(grid.point(j));
        s += w[j] * d * d;
    }
    return s;
}

struct PostRegularization {
    ScalarField field;
    SolveReport report;
    ConditionalMean estimate;
    DensityModel density;
};

/**
 * Plug-in smoothing: estimate m and f_X from `data`, then solve the field
 * equation with them. `score_density` replaces the KDE when given.
 */
inline PostRegularization post_regularize(const Dataset& data, const EstimatorConfig& estimator, double lambda,
                                          const Grid& grid, Measure measure,
                                          const std::optional<DensityModel>& score_density = std::nullopt,
                                          const SolveOptions& opts = {}) {
    data.validate();
    if (data.dim != grid.dim()) throw GridMismatch("dataset dimension does not match grid");
    auto density = score_density ? *score_density : kde_fit(data.x, data.dim, AutoBandwidth{});
    auto estimate = fit_estimator(data, estimator, grid);
    auto sys = assemble_system(estimate, density, RiskSpec{lambda, measure}, grid);
    auto sol = solve_field(sys, opts);
    return {std::move(sol.field), sol.report, std::move(estimate), std::move(density)};
}

struct DenoiseConfig {
    SynthSpec synth;
    EstimatorConfig estimator;
    std::vector<double> lambdas;
    Grid grid;
    Measure measure = Measure::feature_density;
    bool use_true_density = false;
    SolveOptions solve;
};

struct PipelineReport {
    std::vector<double> lambdas;
    std::vector<double> mse_to_truth;
    double chosen_lambda = 0.0;
    std::vector<SolveReport> solves;
    double estimator_rmse = 0.0; // plug-in estimator before smoothing
};

struct PipelineResult {
    PipelineReport report;
    std::vector<ScalarField> fields; // aligned with report.lambdas
};

inline PipelineResult run_denoise(const DenoiseConfig& cfg) {
    if (cfg.lambdas.empty()) throw InvalidArgument("denoise needs at least one lambda");
    for (double l : cfg.lambdas) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("lambdas must be finite and >= 0");
    }
    const Dataset data = synth_generate(cfg.synth);
    const DensityModel density = cfg.use_true_density ? cfg.synth.density : kde_fit(data.x, data.dim, AutoBandwidth{});
    const ConditionalMean estimate = fit_estimator(data, cfg.estimator, cfg.grid);
    const FieldOperator op(estimate, density, cfg.measure, cfg.grid);

    PipelineResult out;
    out.report.estimator_rmse = std::sqrt(evaluate_mse_to_truth(estimate.nodal(cfg.grid), cfg.synth.truth, cfg.grid));
    double best = std::numeric_limits<double>::infinity();
    for (double l : cfg.lambdas) {
        auto sol = solve_field(op.at(l), cfg.solve);
        const double mse = evaluate_mse_to_truth(sol.field, cfg.synth.truth, cfg.grid);
        if (mse < best) {
            best = mse;
            out.report.chosen_lambda = l;
        }
        out.report.lambdas.push_back(l);
        out.report.mse_to_truth.push_back(mse);
        out.report.solves.push_back(sol.report);
        out.fields.push_back(std::move(sol.field));
    }
    return out;
}

} // namespace fieldreg
