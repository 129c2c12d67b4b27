#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "fieldreg/conditional.hpp"
#include "fieldreg/density.hpp"
#include "fieldreg/error.hpp"
#include "fieldreg/grid.hpp"

namespace fieldreg {

// Measure of the gradient penalty.
enum class Measure {
    feature_density, // nu = P^X, f_nu = f_X
    lebesgue,        // f_nu = 1
};

inline std::string to_string(Measure m) {
    return m == Measure::feature_density ? "feature-density" : "lebesgue";
}

inline Measure measure_from_string(const std::string& s) {
    if (s == "feature-density") return Measure::feature_density;
    if (s == "lebesgue") return Measure::lebesgue;
    throw InvalidArgument("unknown measure '" + s + "'");
}

// Squared-l2 gradient penalized MSE risk with penalization parameter lambda.
struct RiskSpec {
    double lambda = 0.0;
    Measure measure = Measure::feature_density;

    void validate() const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw InvalidArgument("lambda must be finite and >= 0");
        }
    }
};

// Nodal data shared by the risk and the field equation.
struct NodalWeights {
    std::vector<double> quadrature; // w_j
    std::vector<double> feature;    // f_X(x_j)
    std::vector<double> penalty;    // f_nu(x_j)
    std::vector<Point> score;       // grad log f_X(x_j)
    std::size_t clamp_count = 0;
};

inline NodalWeights nodal_weights(const DensityModel& density, Measure measure, const Grid& grid) {
    auto table = tabulate_density(density, grid);
    NodalWeights nw;
    nw.quadrature = quadrature_weights(grid);
    nw.feature = std::move(table.density);
    nw.score = std::move(table.score);
    nw.clamp_count = table.clamp_count;
    nw.penalty = measure == Measure::feature_density ? nw.feature : std::vector<double>(grid.node_count(), 1.0);
    return nw;
}

// A grid edge (from, to = from + stride) with penalty coefficient
// c_e * f_e / h^2, where c_e is the edge's quadrature weight and f_e the
// midpoint average of f_nu.
struct PenaltyEdge {
    std::size_t from;
    std::size_t to;
    double coefficient;
};

inline std::vector<PenaltyEdge> penalty_edges(const Grid& grid, const std::vector<double>& f_nu) {
    const std::size_t n = grid.nodes_per_axis();
    const double h = grid.spacing();
    std::vector<PenaltyEdge> edges;
    edges.reserve(grid.dim() * grid.node_count());
    for (std::size_t j = 0; j < grid.node_count(); ++j) {
        for (int a = 0; a < grid.dim(); ++a) {
            if (grid.axis_index(j, a) + 1 == n) continue;
            double c = h;
            for (int b = 0; b < grid.dim(); ++b) {
                if (b != a) c *= trapezoid_weight(grid, grid.axis_index(j, b));
            }
            const std::size_t k = j + grid.stride(a);
            const double f_mid = 0.5 * (f_nu[j] + f_nu[k]);
            edges.push_back({j, k, c * f_mid / (h * h)});
        }
    }
    return edges;
}

struct RiskTerms {
    double fitness = 0.0; // sum_j w_j f_X (m_j - g_j)^2
    double penalty = 0.0; // discrete integral of |grad g|^2 d nu
    double total = 0.0;   // fitness + lambda * penalty
};

namespace detail {

inline void check_risk_inputs(const ScalarField& g, const ConditionalMean& m, const DensityModel& density,
                              const Grid& grid) {
    require_same_grid(g.grid(), grid);
    if (m.dim() != grid.dim()) throw GridMismatch("conditional mean dimension does not match grid");
    if (density.dim() != grid.dim()) throw GridMismatch("density dimension does not match grid");
}

inline double penalty_value(const ScalarField& g, const std::vector<PenaltyEdge>& edges) {
    double p = 0.0;
    for (const auto& e : edges) {
        const double d = g[e.to] - g[e.from];
        p += e.coefficient * d * d;
    }
    return p;
}

} // namespace detail

// Excess risk split into fitness and penalty; E[Var(Y|X)] is not included.
inline RiskTerms risk_terms(const ScalarField& g, const ConditionalMean& m, const DensityModel& density,
                            const RiskSpec& spec, const Grid& grid) {
    spec.validate();
    detail::check_risk_inputs(g, m, density, grid);
    const auto nw = nodal_weights(density, spec.measure, grid);
    RiskTerms t;
    for (std::size_t j = 0; j < grid.node_count(); ++j) {
        const double r = m(grid.point(j)) - g[j];
        t.fitness += nw.quadrature[j] * nw.feature[j] * r * r;
    }
    t.penalty = detail::penalty_value(g, penalty_edges(grid, nw.penalty));
    t.total = t.fitness + spec.lambda * t.penalty;
    return t;
}

inline double risk_value(const ScalarField& g, const ConditionalMean& m, const DensityModel& density,
                         const RiskSpec& spec, const Grid& grid) {
    return risk_terms(g, m, density, spec, grid).total;
}

// Exact gradient 2 (H g - r) of the quadratic risk.
inline ScalarField risk_gradient(const ScalarField& g, const ConditionalMean& m, const DensityModel& density,
                                 const RiskSpec& spec, const Grid& grid) {
    spec.validate();
    detail::check_risk_inputs(g, m, density, grid);
    const auto nw = nodal_weights(density, spec.measure, grid);
    ScalarField grad(grid);
    for (std::size_t j = 0; j < grid.node_count(); ++j) {
        grad[j] = 2.0 * nw.quadrature[j] * nw.feature[j] * (g[j] - m(grid.point(j)));
    }
    for (const auto& e : penalty_edges(grid, nw.penalty)) {
        const double flux = 2.0 * spec.lambda * e.coefficient * (g[e.from] - g[e.to]);
        grad[e.from] += flux;
        grad[e.to] -= flux;
    }
    return grad;
}

/**
 * Global minimizer of the discrete risk, from the normal equations H g = r
 * factorized with a sparse LDL^T.
 *
 * H = diag(w f_X) + lambda * sum_e coef_e (e_from - e_to)(e_from - e_to)^T is
 * SPD for lambda >= 0 since quadrature weights and clamped densities are
 * positive.
 */
inline ScalarField minimize_risk_direct(const ConditionalMean& m, const DensityModel& density, const RiskSpec& spec,
                                        const Grid& grid) {
    spec.validate();
    if (m.dim() != grid.dim()) throw GridMismatch("conditional mean dimension does not match grid");
    const auto nw = nodal_weights(density, spec.measure, grid);
    // Without the penalty H is diagonal and r = H m, so m itself is the minimizer.
    if (spec.lambda == 0.0) return m.nodal(grid);
    const auto count = static_cast<Eigen::Index>(grid.node_count());

    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd rhs(count);
    for (Eigen::Index j = 0; j < count; ++j) {
        const double mass = nw.quadrature[j] * nw.feature[j];
        triplets.emplace_back(j, j, mass);
        rhs[j] = mass * m(grid.point(static_cast<std::size_t>(j)));
    }
    if (spec.lambda > 0.0) {
        for (const auto& e : penalty_edges(grid, nw.penalty)) {
            const double c = spec.lambda * e.coefficient;
            const auto a = static_cast<Eigen::Index>(e.from);
            const auto b = static_cast<Eigen::Index>(e.to);
            triplets.emplace_back(a, a, c);
            triplets.emplace_back(b, b, c);
            triplets.emplace_back(a, b, -c);
            triplets.emplace_back(b, a, -c);
        }
    }
    Eigen::SparseMatrix<double> hessian(count, count);
    hessian.setFromTriplets(triplets.begin(), triplets.end());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(hessian);
    if (ldlt.info() != Eigen::Success) {
        throw ConvergenceError("LDL^T factorization of the risk Hessian failed", 0, INFINITY);
    }
    Eigen::VectorXd g = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success) {
        throw ConvergenceError("LDL^T solve of the risk normal equations failed", 0, INFINITY);
    }
    return ScalarField(grid, std::vector<double>(g.data(), g.data() + g.size()));
}

} // namespace fieldreg
