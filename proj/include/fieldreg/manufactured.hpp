#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "fieldreg/conditional.hpp"
#include "fieldreg/density.hpp"
#include "fieldreg/error.hpp"
#include "fieldreg/field_solver.hpp"
#include "fieldreg/grid.hpp"
#include "fieldreg/risk.hpp"

namespace fieldreg {

// Exact solution g* = prod_a cos(pi x_a) (zero normal derivative on every
// face) and the right-hand side that makes it the solution of the field
// equation.
struct ManufacturedProblem {
    ConditionalMean exact;
    ConditionalMean rhs;
};

inline ManufacturedProblem manufactured_cosine(int dim, double lambda, const DensityModel& density, Measure measure) {
    if (density.dim() != dim) throw GridMismatch("density dimension does not match manufactured problem");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
    constexpr double pi = std::numbers::pi;
    auto exact = [dim](const Point& x) {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= std::cos(pi * x[a]);
        return v;
    };
    auto rhs = [dim, lambda, density, measure, exact](const Point& x) {
        const double g = exact(x);
        const double laplacian = -pi * pi * dim * g;
        const auto e = density.evaluate(x);
        if (measure == Measure::lebesgue) return g - lambda * laplacian / e.density;
        double advection = 0.0;
        for (int a = 0; a < dim; ++a) {
            double partial = -pi * std::sin(pi * x[a]);
            for (int b = 0; b < dim; ++b) {
                if (b != a) partial *= std::cos(pi * x[b]);
            }
            advection += e.score[a] * partial;
        }
        return g - lambda * (laplacian + advection);
    };
    return {ConditionalMean::from_function(dim, exact), ConditionalMean::from_function(dim, rhs)};
}

struct ConvergenceRow {
    std::size_t nodes_per_axis = 0;
    double spacing = 0.0;
    double max_error = 0.0;
    std::optional<double> observed_order; // empty for the first row
    SolveReport report;
};

// Max-norm error of the manufactured solution over a grid sequence, with the
// observed order log(e_{k-1} / e_k) / log(h_{k-1} / h_k).
inline std::vector<ConvergenceRow> convergence_study(int dim, std::span<const std::size_t> grids, double lambda,
                                                     const DensityModel& density, Measure measure,
                                                     const SolveOptions& opts = {}) {
    if (grids.size() < 2) throw InvalidArgument("a convergence study needs at least 2 grids");
    for (std::size_t i = 1; i < grids.size(); ++i) {
        if (!(grids[i] > grids[i - 1])) throw InvalidArgument("grid sequence must be strictly increasing");
    }
    const auto problem = manufactured_cosine(dim, lambda, density, measure);
    std::vector<ConvergenceRow> rows;
    for (std::size_t n : grids) {
        const Grid grid = build_grid(dim, n);
        const auto sol = solve_field(assemble_system(problem.rhs, density, RiskSpec{lambda, measure}, grid), opts);
        ConvergenceRow row;
        row.nodes_per_axis = n;
        row.spacing = grid.spacing();
        row.report = sol.report;
        for (std::size_t j = 0; j < grid.node_count(); ++j) {
            row.max_error = std::max(row.max_error, std::abs(sol.field[j] - problem.exact(grid.point(j))));
        }
        if (!rows.empty()) {
            const auto& prev = rows.back();
            row.observed_order = std::log(prev.max_error / row.max_error) / std::log(prev.spacing / row.spacing);
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace fieldreg
