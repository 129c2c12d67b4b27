#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "fieldreg/density.hpp"
#include "fieldreg/error.hpp"
#include "fieldreg/grid.hpp"

namespace fieldreg {

// Samples (x_i, y_i) with x_i in the unit cube.
struct Dataset {
    int dim = 1;
    std::vector<Point> x;
    std::vector<double> y;

    std::size_t size() const noexcept { return y.size(); }

    void validate() const {
        if (dim < 1 || dim > kMaxDim) throw InvalidArgument("dataset dimension must be 1 or 2");
        if (x.size() != y.size()) throw InvalidArgument("dataset x and y lengths differ");
        if (y.empty()) throw InvalidArgument("dataset is empty");
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!std::isfinite(y[i])) throw InvalidArgument("dataset contains a non-finite y");
            require_in_domain(x[i], dim);
        }
    }
};

// prod_a cos(omega * x_a)
struct CosineMean {
    double omega = 1.0;
};

// sum_k c_k x_1^k, a polynomial in the first coordinate.
struct PolynomialMean {
    std::vector<double> coefficients;
};

// Multilinear interpolation of nodal values.
struct TabulatedMean {
    ScalarField field;
};

// Gaussian-kernel weighted mean of the responses.
struct KernelRegressionMean {
    std::vector<Point> x;
    std::vector<double> y;
    Point bandwidth{1.0, 1.0};
};

struct FunctionMean {
    std::function<double(const Point&)> f;
};

/**
 * Evaluator of m(x) = E[Y | X = x] on the unit cube.
 */
class ConditionalMean {
public:
    using Kind = std::variant<CosineMean, PolynomialMean, TabulatedMean, KernelRegressionMean, FunctionMean>;

    static ConditionalMean cosine(int dim, double omega) { return ConditionalMean(dim, CosineMean{omega}); }

    static ConditionalMean polynomial(int dim, std::vector<double> coefficients) {
        return ConditionalMean(dim, PolynomialMean{std::move(coefficients)});
    }

    static ConditionalMean constant(int dim, double c) { return polynomial(dim, {c}); }

    static ConditionalMean tabulated(ScalarField field) {
        if (field.size() != field.grid().node_count() || !field.all_finite()) {
            throw InvalidArgument("tabulated mean needs a fully populated finite field");
        }
        const int dim = field.grid().dim();
        return ConditionalMean(dim, TabulatedMean{std::move(field)});
    }

    static ConditionalMean from_function(int dim, std::function<double(const Point&)> f) {
        return ConditionalMean(dim, FunctionMean{std::move(f)});
    }

    static ConditionalMean kernel_regression(int dim, KernelRegressionMean k) {
        return ConditionalMean(dim, std::move(k));
    }

    int dim() const noexcept { return dim_; }
    const Kind& kind() const noexcept { return kind_; }

    double operator()(const Point& x) const {
        require_in_domain(x, dim_);
        return std::visit([&](const auto& k) { return eval_kind(k, x); }, kind_);
    }

    // Values at every node of `grid`.
    ScalarField nodal(const Grid& grid) const {
        if (grid.dim() != dim_) throw GridMismatch("conditional mean dimension does not match grid");
        return ScalarField::from_function(grid, [this](const Point& x) { return (*this)(x); });
    }

private:
    ConditionalMean(int dim, Kind kind) : dim_(dim), kind_(std::move(kind)) {
        if (dim < 1 || dim > kMaxDim) throw InvalidArgument("conditional mean dimension must be 1 or 2");
    }

    double eval_kind(const CosineMean& c, const Point& x) const {
        double v = 1.0;
        for (int a = 0; a < dim_; ++a) v *= std::cos(c.omega * x[a]);
        return v;
    }

    double eval_kind(const PolynomialMean& p, const Point& x) const {
        double v = 0.0;
        for (auto it = p.coefficients.rbegin(); it != p.coefficients.rend(); ++it) v = v * x[0] + *it;
        return v;
    }

    double eval_kind(const TabulatedMean& t, const Point& x) const {
        const Grid& g = t.field.grid();
        const std::size_t n = g.nodes_per_axis();
        std::array<std::size_t, kMaxDim> lo{0, 0};
        std::array<double, kMaxDim> frac{0.0, 0.0};
        for (int a = 0; a < dim_; ++a) {
            double s = x[a] / g.spacing();
            // Snap onto nodes so tabulated values are reproduced exactly there.
            if (std::abs(s - std::round(s)) <= 1e-9) s = std::round(s);
            auto k = static_cast<std::size_t>(std::floor(s));
            if (k >= n - 1) k = n - 2;
            lo[a] = k;
            frac[a] = s - static_cast<double>(k);
        }
        if (dim_ == 1) {
            return (1.0 - frac[0]) * t.field[lo[0]] + frac[0] * t.field[lo[0] + 1];
        }
        const std::size_t j = lo[0] * n + lo[1];
        const double f00 = t.field[j], f01 = t.field[j + 1], f10 = t.field[j + n], f11 = t.field[j + n + 1];
        return (1.0 - frac[0]) * ((1.0 - frac[1]) * f00 + frac[1] * f01) +
               frac[0] * ((1.0 - frac[1]) * f10 + frac[1] * f11);
    }

    double eval_kind(const KernelRegressionMean& k, const Point& x) const {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < k.y.size(); ++i) {
            double q = 0.0;
            for (int a = 0; a < dim_; ++a) {
                const double z = (x[a] - k.x[i][a]) / k.bandwidth[a];
                q += z * z;
            }
            const double w = std::exp(-0.5 * q);
            num += w * k.y[i];
            den += w;
        }
        if (den >= 1e-300) return num / den;

        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k.y.size(); ++i) {
            double d = 0.0;
            for (int a = 0; a < dim_; ++a) d += (x[a] - k.x[i][a]) * (x[a] - k.x[i][a]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return k.y[best];
    }

    double eval_kind(const FunctionMean& f, const Point& x) const { return f.f(x); }

    int dim_;
    Kind kind_;
};

inline double eval_mean(const ConditionalMean& m, const Point& x) { return m(x); }

namespace detail {

// Fill nodes without samples from populated ones: linear interpolation between
// the nearest populated nodes along each axis (averaged over axes), otherwise
// the nearest populated node.
inline void fill_empty_bins(const Grid& grid, std::vector<double>& value, const std::vector<bool>& populated) {
    const std::size_t n = grid.nodes_per_axis();
    std::vector<double> filled = value;
    for (std::size_t j = 0; j < grid.node_count(); ++j) {
        if (populated[j]) continue;
        double acc = 0.0;
        int used = 0;
        for (int a = 0; a < grid.dim(); ++a) {
            const std::size_t k = grid.axis_index(j, a);
            const std::size_t s = grid.stride(a);
            std::size_t lo = k, hi = k;
            bool has_lo = false, has_hi = false;
            for (std::size_t t = k; t-- > 0;) {
                if (populated[j - (k - t) * s]) {
                    lo = t;
                    has_lo = true;
                    break;
                }
            }
            for (std::size_t t = k + 1; t < n; ++t) {
                if (populated[j + (t - k) * s]) {
                    hi = t;
                    has_hi = true;
                    break;
                }
            }
            if (has_lo && has_hi) {
                const double vlo = value[j - (k - lo) * s];
                const double vhi = value[j + (hi - k) * s];
                const double t = static_cast<double>(k - lo) / static_cast<double>(hi - lo);
                acc += (1.0 - t) * vlo + t * vhi;
                ++used;
            }
        }
        if (used > 0) {
            filled[j] = acc / used;
            continue;
        }
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < grid.node_count(); ++i) {
            if (!populated[i]) continue;
            double d = 0.0;
            for (int a = 0; a < grid.dim(); ++a) {
                const double diff = static_cast<double>(grid.axis_index(i, a)) - static_cast<double>(grid.axis_index(j, a));
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        filled[j] = value[best];
    }
    value = std::move(filled);
}

inline Point resolve_bandwidth(const Bandwidth& bw, std::span<const Point> x, int dim) {
    Point out{1.0, 1.0};
    for (int a = 0; a < dim; ++a) {
        if (const double* b = std::get_if<double>(&bw)) {
            if (!(*b > 0.0) || !std::isfinite(*b)) throw InvalidArgument("bandwidth must be positive");
            out[a] = *b;
        } else {
            out[a] = silverman_bandwidth(x, a);
            if (!(out[a] > 0.0)) throw InvalidArgument("automatic bandwidth is zero: x values are identical");
        }
    }
    return out;
}

} // namespace detail

// Mean response over the samples nearest to each node; empty nodes are
// filled from populated neighbours.
inline ConditionalMean binned_mean_estimator(const Dataset& data, const Grid& grid) {
    data.validate();
    if (data.dim != grid.dim()) throw GridMismatch("dataset dimension does not match grid");
    const std::size_t n = grid.nodes_per_axis();
    std::vector<double> sum(grid.node_count(), 0.0);
    std::vector<std::size_t> count(grid.node_count(), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::size_t j = 0;
        for (int a = 0; a < grid.dim(); ++a) {
            auto k = static_cast<std::size_t>(std::lround(data.x[i][a] / grid.spacing()));
            k = std::min(k, n - 1);
            j = j * n + k;
        }
        sum[j] += data.y[i];
        ++count[j];
    }
    std::vector<double> value(grid.node_count(), 0.0);
    std::vector<bool> populated(grid.node_count(), false);
    for (std::size_t j = 0; j < value.size(); ++j) {
        if (count[j] > 0) {
            value[j] = sum[j] / static_cast<double>(count[j]);
            populated[j] = true;
        }
    }
    detail::fill_empty_bins(grid, value, populated);
    return ConditionalMean::tabulated(ScalarField(grid, std::move(value)));
}

inline ConditionalMean nadaraya_watson(const Dataset& data, Bandwidth bandwidth) {
    data.validate();
    if (data.size() < 2) throw InvalidArgument("nadaraya-watson needs at least 2 samples");
    KernelRegressionMean k;
    k.x = data.x;
    k.y = data.y;
    k.bandwidth = detail::resolve_bandwidth(bandwidth, data.x, data.dim);
    return ConditionalMean::kernel_regression(data.dim, std::move(k));
}

} // namespace fieldreg
