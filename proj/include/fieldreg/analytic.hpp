#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "fieldreg/conditional.hpp"
#include "fieldreg/density.hpp"
#include "fieldreg/error.hpp"
#include "fieldreg/grid.hpp"

namespace fieldreg {

// Coefficient choice for the homogeneous part of the 1D cosine solution.
enum class CosineConvention {
    sinh_basis,         // A sinh(x / sqrt(lambda)); does not satisfy g'(0) = 0 unless sin(omega) = 0
    neumann_consistent, // C cosh(x / sqrt(lambda)) with g'(0) = g'(1) = 0
};

struct CosineSolutionParams {
    double lambda = 1.0;
    double omega = 1.0;
    CosineConvention convention = CosineConvention::neumann_consistent;

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("cosine solution needs lambda > 0");
        if (!(omega > 0.0) || !std::isfinite(omega)) throw InvalidArgument("cosine solution needs omega > 0");
    }
};

namespace detail {

// Evaluates the closed form for any real x (finite-difference probes may
// step outside [0,1]).
//
// With k = sqrt(lambda), the sinh-basis coefficient is
//   A = k w sin(w) / (2 sinh(1/k) (1 + lambda w^2))
// and the Neumann-consistent one is
//   C = k w sin(w) / (sinh(1/k) (1 + lambda w^2)),
// from g'(0) = 0 (no sinh term) and g'(1) = C sinh(1/k)/k - w sin(w)/(1 + lambda w^2) = 0.
// The ratios sinh(x/k)/sinh(1/k) and cosh(x/k)/sinh(1/k) are formed from
// decaying exponentials so small lambda does not overflow.
inline double cos_solution_any(const CosineSolutionParams& p, double x) {
    const double k = std::sqrt(p.lambda);
    const double w = p.omega;
    const double denom = 1.0 + p.lambda * w * w;
    const double particular = std::cos(w * x) / denom;
    const double amplitude = k * w * std::sin(w) / denom;
    const double tail = 1.0 - std::exp(-2.0 / k);
    const double up = std::exp((x - 1.0) / k);
    const double down = std::exp((-x - 1.0) / k);
    if (p.convention == CosineConvention::sinh_basis) {
        return 0.5 * amplitude * (up - down) / tail + particular;
    }
    return amplitude * (up + down) / tail + particular;
}

} // namespace detail

// Solution of -lambda g'' + g = cos(omega x) on [0,1] under the chosen convention.
inline double cos_solution(const CosineSolutionParams& params, double x) {
    params.validate();
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("cosine solution is defined on [0,1]");
    return detail::cos_solution_any(params, x);
}

// sum_j w_j f_X(x_j) m(x_j) / sum_j w_j f_X(x_j): the constant that large-lambda
// solutions approach.
inline double weighted_mean_limit(const ConditionalMean& m, const DensityModel& density, const Grid& grid) {
    if (m.dim() != grid.dim()) throw GridMismatch("conditional mean dimension does not match grid");
    const auto w = quadrature_weights(grid);
    const auto table = tabulate_density(density, grid);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < grid.node_count(); ++j) {
        const double wt = w[j] * table.density[j];
        num += wt * m(grid.point(j));
        den += wt;
    }
    return num / den;
}

/**
 * Integral of |grad g|^2 d nu for the affine g(x) = beta_0 + sum_i beta_i x_i,
 * with nu the probability measure of `density` discretized on `grid`.
 *
 * The quadrature measure is normalized to unit mass, so the result equals
 * sum_{i>=1} beta_i^2 up to rounding whatever the density.
 */
inline double linear_penalty_check(std::span<const double> beta, const DensityModel& density, const Grid& grid) {
    if (beta.size() != static_cast<std::size_t>(grid.dim()) + 1) {
        throw InvalidArgument("beta must have dim + 1 entries");
    }
    const auto g = ScalarField::from_function(grid, [&](const Point& x) {
        double v = beta[0];
        for (int a = 0; a < grid.dim(); ++a) v += beta[a + 1] * x[a];
        return v;
    });
    const auto grad = gradient_fd(g);
    const auto w = quadrature_weights(grid);
    const auto table = tabulate_density(density, grid);
    double num = 0.0, mass = 0.0;
    for (std::size_t j = 0; j < grid.node_count(); ++j) {
        double sq = 0.0;
        for (int a = 0; a < grid.dim(); ++a) sq += grad[j][a] * grad[j][a];
        const double wt = w[j] * table.density[j];
        num += wt * sq;
        mass += wt;
    }
    return num / mass;
}

enum class RiskKind { mse, mae };

enum class DistributionFamily { gaussian, exponential, cauchy };

/**
 * Parametric law of Y given X = x. `location` is the Gaussian mean, the
 * exponential rate, or the Cauchy location; `scale` is the Gaussian sigma or
 * the Cauchy scale (unused for the exponential).
 */
struct ConditionalDistribution {
    DistributionFamily family = DistributionFamily::gaussian;
    ConditionalMean location = ConditionalMean::constant(1, 0.0);
    double scale = 1.0;

    static ConditionalDistribution gaussian(ConditionalMean mean, double sigma) {
        return {DistributionFamily::gaussian, std::move(mean), sigma};
    }
    static ConditionalDistribution exponential(ConditionalMean rate) {
        return {DistributionFamily::exponential, std::move(rate), 1.0};
    }
    static ConditionalDistribution cauchy(ConditionalMean location, double scale) {
        return {DistributionFamily::cauchy, std::move(location), scale};
    }
};

// Nodal minimizer of the unpenalized risk: the conditional mean for MSE and
// the conditional median for MAE.
inline ScalarField reference_minimizer(RiskKind kind, const ConditionalDistribution& dist, const Grid& grid) {
    if (dist.location.dim() != grid.dim()) throw GridMismatch("distribution dimension does not match grid");
    switch (dist.family) {
    case DistributionFamily::gaussian:
        if (!(dist.scale > 0.0)) throw InvalidArgument("gaussian sigma must be positive");
        return dist.location.nodal(grid);
    case DistributionFamily::exponential: {
        auto rate = dist.location.nodal(grid);
        for (std::size_t j = 0; j < rate.size(); ++j) {
            if (!(rate[j] > 0.0)) throw InvalidArgument("exponential rate must be positive");
            rate[j] = (kind == RiskKind::mse ? 1.0 : std::numbers::ln2) / rate[j];
        }
        return rate;
    }
    case DistributionFamily::cauchy:
        if (kind == RiskKind::mse) throw InvalidArgument("cauchy family has no mean; MSE minimizer unsupported");
        return dist.location.nodal(grid);
    }
    throw InvalidArgument("unsupported distribution family");
}

} // namespace fieldreg
