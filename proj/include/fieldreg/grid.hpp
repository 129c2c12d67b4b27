#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fieldreg/error.hpp"

namespace fieldreg {

inline constexpr int kMaxDim = 2;

// A point of the unit cube. Coordinates beyond the grid dimension are ignored
// and kept at zero.
using Point = std::array<double, kMaxDim>;

/**
 * Uniform tensor-product grid on [0,1]^p.
 *
 * Nodes are numbered lexicographically with the first axis varying slowest,
 * i.e. node (k0, k1) has index k0 * n + k1.
 */
class Grid {
public:
    Grid() = default;

    int dim() const noexcept { return dim_; }
    std::size_t nodes_per_axis() const noexcept { return n_; }
    double spacing() const noexcept { return h_; }
    std::size_t node_count() const noexcept { return dim_ == 1 ? n_ : n_ * n_; }

    // Index of node `j` along `axis`.
    std::size_t axis_index(std::size_t j, int axis) const noexcept {
        if (dim_ == 1) return j;
        return axis == 0 ? j / n_ : j % n_;
    }

    // Distance between consecutive node indices along `axis`.
    std::size_t stride(int axis) const noexcept {
        return (dim_ == 2 && axis == 0) ? n_ : 1;
    }

    double coordinate(std::size_t k) const noexcept {
        // Pin the last node to exactly 1.
        return k + 1 == n_ ? 1.0 : static_cast<double>(k) * h_;
    }

    Point point(std::size_t j) const noexcept {
        Point x{0.0, 0.0};
        for (int a = 0; a < dim_; ++a) x[a] = coordinate(axis_index(j, a));
        return x;
    }

    bool on_boundary(std::size_t j) const noexcept {
        for (int a = 0; a < dim_; ++a) {
            const auto k = axis_index(j, a);
            if (k == 0 || k + 1 == n_) return true;
        }
        return false;
    }

    bool contains(const Point& x) const noexcept {
        for (int a = 0; a < dim_; ++a) {
            if (!(x[a] >= 0.0 && x[a] <= 1.0)) return false;
        }
        return true;
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    friend Grid build_grid(int dim, std::size_t nodes_per_axis);

    Grid(int dim, std::size_t n) : dim_(dim), n_(n), h_(1.0 / static_cast<double>(n - 1)) {}

    int dim_ = 1;
    std::size_t n_ = 3;
    double h_ = 0.5;
};

inline Grid build_grid(int dim, std::size_t nodes_per_axis) {
    if (dim < 1 || dim > kMaxDim) {
        throw InvalidArgument("grid dimension must be 1 or 2, got " + std::to_string(dim));
    }
    if (nodes_per_axis < 3) {
        throw InvalidArgument("grid needs at least 3 nodes per axis, got " +
                              std::to_string(nodes_per_axis));
    }
    return Grid(dim, nodes_per_axis);
}

inline void require_in_domain(const Point& x, int dim) {
    for (int a = 0; a < dim; ++a) {
        if (!(x[a] >= 0.0 && x[a] <= 1.0)) {
            throw DomainError("point outside [0,1]^" + std::to_string(dim));
        }
    }
}

// Real values on grid nodes.
class ScalarField {
public:
    ScalarField() = default;

    explicit ScalarField(const Grid& grid, double fill = 0.0)
        : grid_(grid), values_(grid.node_count(), fill) {}

    ScalarField(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.node_count()) {
            throw InvalidArgument("field has " + std::to_string(values_.size()) + " values, grid has " +
                                  std::to_string(grid_.node_count()) + " nodes");
        }
    }

    template <class F>
    static ScalarField from_function(const Grid& grid, F&& f) {
        std::vector<double> v(grid.node_count());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(grid.point(j));
        return ScalarField(grid, std::move(v));
    }

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t j) const noexcept { return values_[j]; }
    double& operator[](std::size_t j) noexcept { return values_[j]; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool all_finite() const noexcept {
        for (double v : values_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

// One p-vector per grid node.
class VectorField {
public:
    explicit VectorField(const Grid& grid) : grid_(grid), values_(grid.node_count(), Point{0.0, 0.0}) {}

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    const Point& operator[](std::size_t j) const noexcept { return values_[j]; }
    Point& operator[](std::size_t j) noexcept { return values_[j]; }

private:
    Grid grid_;
    std::vector<Point> values_;
};

inline void require_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw GridMismatch("operands are defined on different grids");
}

// Per-axis trapezoid weight of index k.
inline double trapezoid_weight(const Grid& grid, std::size_t k) noexcept {
    const double h = grid.spacing();
    return (k == 0 || k + 1 == grid.nodes_per_axis()) ? 0.5 * h : h;
}

// Tensor-product trapezoid weights; they sum to the volume of [0,1]^p.
inline std::vector<double> quadrature_weights(const Grid& grid) {
    std::vector<double> w(grid.node_count());
    for (std::size_t j = 0; j < w.size(); ++j) {
        double wj = 1.0;
        for (int a = 0; a < grid.dim(); ++a) wj *= trapezoid_weight(grid, grid.axis_index(j, a));
        w[j] = wj;
    }
    return w;
}

// Central differences inside, first-order one-sided differences on the boundary.
inline VectorField gradient_fd(const ScalarField& field) {
    const Grid& grid = field.grid();
    const std::size_t n = grid.nodes_per_axis();
    const double h = grid.spacing();
    VectorField grad(grid);
    for (std::size_t j = 0; j < grid.node_count(); ++j) {
        for (int a = 0; a < grid.dim(); ++a) {
            const std::size_t k = grid.axis_index(j, a);
            const std::size_t s = grid.stride(a);
            if (k == 0) {
                grad[j][a] = (field[j + s] - field[j]) / h;
            } else if (k + 1 == n) {
                grad[j][a] = (field[j] - field[j - s]) / h;
            } else {
                grad[j][a] = (field[j + s] - field[j - s]) / (2.0 * h);
            }
        }
    }
    return grad;
}

} // namespace fieldreg
