#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fieldreg/error.hpp"
#include "fieldreg/grid.hpp"

namespace fieldreg {

inline constexpr double kDefaultDensityFloor = 1e-12;

// Nodes per axis of the grid on which density normalizations are computed.
inline constexpr std::size_t kNormalizationNodes = 201;

struct AutoBandwidth {
    friend bool operator==(AutoBandwidth, AutoBandwidth) = default;
};

// Either a fixed positive bandwidth or Silverman's rule.
using Bandwidth = std::variant<double, AutoBandwidth>;

namespace detail {

inline double std_normal_pdf(double z) noexcept {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double std_normal_cdf(double z) noexcept {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double silverman_bandwidth(std::span<const Point> samples, int axis) {
    const double n = static_cast<double>(samples.size());
    const bool constant = std::all_of(samples.begin(), samples.end(),
                                      [&](const Point& s) { return s[axis] == samples.front()[axis]; });
    if (constant) return 0.0;
    double mean = 0.0;
    for (const auto& s : samples) mean += s[axis];
    mean /= n;
    double ss = 0.0;
    for (const auto& s : samples) ss += (s[axis] - mean) * (s[axis] - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return 1.06 * sd * std::pow(n, -0.2);
}

} // namespace detail

struct UniformDensity {};

// Product of per-axis Gaussians truncated to [0,1].
struct TruncatedGaussian {
    Point mu{0.5, 0.5};
    Point sigma{1.0, 1.0};
};

// Product-Gaussian kernel mixture over samples, scaled by `normalization` so
// that its trapezoid integral over the unit cube is one.
struct KernelMixture {
    std::vector<Point> samples;
    Point bandwidth{1.0, 1.0};
    double normalization = 1.0;
};

struct DensityEval {
    double density = 1.0;
    Point score{0.0, 0.0};
    bool clamped = false;
};

/**
 * Feature density f_X together with its score grad log f_X.
 *
 * Densities below the floor are clamped to the floor and reported with a
 * zero score and the `clamped` flag set.
 */
class DensityModel {
public:
    using Kind = std::variant<UniformDensity, TruncatedGaussian, KernelMixture>;

    static DensityModel uniform(int dim, double floor = kDefaultDensityFloor) {
        return DensityModel(dim, UniformDensity{}, floor);
    }

    static DensityModel truncated_gaussian(int dim, Point mu, Point sigma,
                                           double floor = kDefaultDensityFloor) {
        for (int a = 0; a < dim; ++a) {
            if (!(sigma[a] > 0.0) || !std::isfinite(sigma[a])) {
                throw InvalidArgument("truncated gaussian needs sigma > 0");
            }
            if (!std::isfinite(mu[a])) throw InvalidArgument("truncated gaussian needs finite mu");
        }
        return DensityModel(dim, TruncatedGaussian{mu, sigma}, floor);
    }

    static DensityModel kernel_mixture(int dim, KernelMixture mixture, double floor = kDefaultDensityFloor) {
        return DensityModel(dim, std::move(mixture), floor);
    }

    int dim() const noexcept { return dim_; }
    double floor() const noexcept { return floor_; }
    const Kind& kind() const noexcept { return kind_; }
    bool is_uniform() const noexcept { return std::holds_alternative<UniformDensity>(kind_); }

    DensityEval evaluate(const Point& x) const {
        require_in_domain(x, dim_);
        DensityEval out = std::visit([&](const auto& k) { return eval_kind(k, x); }, kind_);
        if (!(out.density >= floor_)) {
            out.density = floor_;
            out.score = Point{0.0, 0.0};
            out.clamped = true;
        }
        return out;
    }

private:
    DensityModel(int dim, Kind kind, double floor) : dim_(dim), floor_(floor), kind_(std::move(kind)) {
        if (dim < 1 || dim > kMaxDim) throw InvalidArgument("density dimension must be 1 or 2");
        if (!(floor > 0.0)) throw InvalidArgument("density floor must be positive");
    }

    DensityEval eval_kind(const UniformDensity&, const Point&) const { return {1.0, {0.0, 0.0}, false}; }

    DensityEval eval_kind(const TruncatedGaussian& g, const Point& x) const {
        DensityEval out;
        out.density = 1.0;
        for (int a = 0; a < dim_; ++a) {
            const double z = (x[a] - g.mu[a]) / g.sigma[a];
            const double mass = detail::std_normal_cdf((1.0 - g.mu[a]) / g.sigma[a]) -
                                detail::std_normal_cdf(-g.mu[a] / g.sigma[a]);
            out.density *= detail::std_normal_pdf(z) / (g.sigma[a] * mass);
            out.score[a] = -(x[a] - g.mu[a]) / (g.sigma[a] * g.sigma[a]);
        }
        return out;
    }

    DensityEval eval_kind(const KernelMixture& k, const Point& x) const {
        double sum = 0.0;
        Point weighted{0.0, 0.0};
        for (const auto& s : k.samples) {
            double q = 0.0;
            for (int a = 0; a < dim_; ++a) {
                const double z = (x[a] - s[a]) / k.bandwidth[a];
                q += z * z;
            }
            const double kern = std::exp(-0.5 * q);
            sum += kern;
            for (int a = 0; a < dim_; ++a) weighted[a] += kern * (s[a] - x[a]);
        }
        double scale = k.normalization / static_cast<double>(k.samples.size());
        for (int a = 0; a < dim_; ++a) scale /= std::sqrt(2.0 * std::numbers::pi) * k.bandwidth[a];
        DensityEval out;
        out.density = scale * sum;
        if (sum > 0.0) {
            for (int a = 0; a < dim_; ++a) {
                out.score[a] = weighted[a] / (sum * k.bandwidth[a] * k.bandwidth[a]);
            }
        }
        return out;
    }

    int dim_;
    double floor_;
    Kind kind_;
};

inline DensityEval density_eval(const DensityModel& model, const Point& x) { return model.evaluate(x); }

// Gaussian product-kernel density estimate from samples in the unit cube.
inline DensityModel kde_fit(std::span<const Point> samples, int dim, Bandwidth bandwidth,
                            double floor = kDefaultDensityFloor) {
    if (dim < 1 || dim > kMaxDim) throw InvalidArgument("density dimension must be 1 or 2");
    if (samples.size() < 2) throw InvalidArgument("kde needs at least 2 samples");
    for (const auto& s : samples) require_in_domain(s, dim);

    KernelMixture mix;
    mix.samples.assign(samples.begin(), samples.end());
    for (int a = 0; a < dim; ++a) {
        if (const double* b = std::get_if<double>(&bandwidth)) {
            if (!(*b > 0.0) || !std::isfinite(*b)) throw InvalidArgument("kde bandwidth must be positive");
            mix.bandwidth[a] = *b;
        } else {
            mix.bandwidth[a] = detail::silverman_bandwidth(samples, a);
            if (!(mix.bandwidth[a] > 0.0)) {
                throw InvalidArgument("automatic bandwidth is zero: samples are identical along an axis");
            }
        }
    }

    // The kernels are products, so the trapezoid integral factorizes per axis.
    const Grid ref = build_grid(1, kNormalizationNodes);
    double total = 0.0;
    for (const auto& s : mix.samples) {
        double prod = 1.0;
        for (int a = 0; a < dim; ++a) {
            double axis_sum = 0.0;
            for (std::size_t k = 0; k < ref.nodes_per_axis(); ++k) {
                const double z = (ref.coordinate(k) - s[a]) / mix.bandwidth[a];
                axis_sum += trapezoid_weight(ref, k) * detail::std_normal_pdf(z) / mix.bandwidth[a];
            }
            prod *= axis_sum;
        }
        total += prod;
    }
    total /= static_cast<double>(mix.samples.size());
    mix.normalization = 1.0 / total;
    return DensityModel::kernel_mixture(dim, std::move(mix), floor);
}

// Density and score tabulated at every node of a grid.
struct DensityTable {
    std::vector<double> density;
    std::vector<Point> score;
    std::size_t clamp_count = 0;
};

inline DensityTable tabulate_density(const DensityModel& model, const Grid& grid) {
    if (model.dim() != grid.dim()) {
        throw GridMismatch("density dimension " + std::to_string(model.dim()) + " does not match grid dimension " +
                           std::to_string(grid.dim()));
    }
    DensityTable t;
    t.density.resize(grid.node_count());
    t.score.resize(grid.node_count());
    for (std::size_t j = 0; j < grid.node_count(); ++j) {
        const auto e = model.evaluate(grid.point(j));
        t.density[j] = e.density;
        t.score[j] = e.score;
        if (e.clamped) ++t.clamp_count;
    }
    return t;
}

} // namespace fieldreg
