#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fieldreg/conditional.hpp"
#include "fieldreg/density.hpp"
#include "fieldreg/error.hpp"
#include "fieldreg/grid.hpp"
#include "fieldreg/risk.hpp"

namespace fieldreg {

/**
 * Discretized field equation
 *
 *     (f_X / f_nu) g - (lambda / f_nu) div(f_nu grad g) = (f_X / f_nu) m,
 *     dg/dn = 0 on the boundary,
 *
 * on a uniform grid. For nu = P^X the left side is -lambda (Laplacian g +
 * score . grad g) + g. Row j reads
 *
 *     reaction_j g_j + sum_k coupling_jk (g_j - g_k) = rhs_j
 *
 * with non-negative couplings, so diag(symmetrizer) * matrix is symmetric and
 * the matrix is an M-matrix for every lambda >= 0.
 */
struct AssembledSystem {
    Grid grid;
    double lambda = 0.0;
    std::vector<double> reaction;    // f_X / f_nu
    std::vector<double> target;      // m at the nodes
    std::vector<double> rhs;         // reaction * m
    std::vector<double> symmetrizer; // w_j f_nu(x_j)
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> cols;
    std::vector<double> couplings; // positive magnitudes of the off-diagonal entries
    std::size_t clamp_count = 0;

    std::size_t rows() const noexcept { return rhs.size(); }

    double diagonal(std::size_t j) const noexcept {
        double d = reaction[j];
        for (std::size_t p = row_ptr[j]; p < row_ptr[j + 1]; ++p) d += couplings[p];
        return d;
    }

    // Matrix entry (row, col); zero outside the stencil.
    double entry(std::size_t row, std::size_t col) const noexcept {
        if (row == col) return diagonal(row);
        for (std::size_t p = row_ptr[row]; p < row_ptr[row + 1]; ++p) {
            if (cols[p] == col) return -couplings[p];
        }
        return 0.0;
    }

    // y = A x, accumulated in flux form.
    void apply(std::span<const double> x, std::span<double> y) const noexcept {
        for (std::size_t j = 0; j < rows(); ++j) {
            double acc = reaction[j] * x[j];
            for (std::size_t p = row_ptr[j]; p < row_ptr[j + 1]; ++p) acc += couplings[p] * (x[j] - x[cols[p]]);
            y[j] = acc;
        }
    }
};

enum class SolveMethod { direct_tridiagonal, spd_iterative };

inline std::string to_string(SolveMethod m) {
    return m == SolveMethod::direct_tridiagonal ? "direct-tridiagonal" : "spd-iterative";
}

struct SolveReport {
    SolveMethod method = SolveMethod::direct_tridiagonal;
    std::size_t iterations = 0;
    double final_residual = 0.0; // relative 2-norm on the symmetrized system
    std::size_t clamp_count = 0;
};

struct SolveOptions {
    double tol = 1e-10;
    std::size_t max_iter = 0; // 0 selects 10 * n^2
};

struct FieldSolution {
    ScalarField field;
    SolveReport report;
};

/**
 * Assembly split into its lambda-independent parts, so a lambda sweep
 * assembles once.
 */
class FieldOperator {
public:
    FieldOperator(const ConditionalMean& m, const DensityModel& density, Measure measure, const Grid& grid)
        : grid_(grid) {
        if (m.dim() != grid.dim()) throw GridMismatch("conditional mean dimension does not match grid");
        const auto nw = nodal_weights(density, measure, grid);
        clamp_count_ = nw.clamp_count;
        const std::size_t count = grid.node_count();
        const std::size_t n = grid.nodes_per_axis();
        const double h2 = grid.spacing() * grid.spacing();
        const auto& f = nw.penalty;

        reaction_.resize(count);
        target_.resize(count);
        rhs_.resize(count);
        symmetrizer_.resize(count);
        row_ptr_.assign(1, 0);
        for (std::size_t j = 0; j < count; ++j) {
            reaction_[j] = nw.feature[j] / f[j];
            target_[j] = m(grid.point(j));
            rhs_[j] = reaction_[j] * target_[j];
            symmetrizer_[j] = nw.quadrature[j] * f[j];
            for (int a = 0; a < grid.dim(); ++a) {
                const std::size_t k = grid.axis_index(j, a);
                const std::size_t s = grid.stride(a);
                // Ghost node mirrored across the boundary: g_{-1} = g_1 and f_{-1} = f_1.
                if (k == 0) {
                    push(j + s, 2.0 * half(f, j, j + s) / (f[j] * h2));
                } else if (k + 1 == n) {
                    push(j - s, 2.0 * half(f, j, j - s) / (f[j] * h2));
                } else {
                    push(j - s, half(f, j, j - s) / (f[j] * h2));
                    push(j + s, half(f, j, j + s) / (f[j] * h2));
                }
            }
            row_ptr_.push_back(cols_.size());
        }
    }

    const Grid& grid() const noexcept { return grid_; }

    AssembledSystem at(double lambda) const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
        AssembledSystem sys;
        sys.grid = grid_;
        sys.lambda = lambda;
        sys.reaction = reaction_;
        sys.target = target_;
        sys.rhs = rhs_;
        sys.symmetrizer = symmetrizer_;
        sys.clamp_count = clamp_count_;
        if (lambda > 0.0) {
            sys.row_ptr = row_ptr_;
            sys.cols = cols_;
            sys.couplings.resize(unit_couplings_.size());
            for (std::size_t p = 0; p < unit_couplings_.size(); ++p) sys.couplings[p] = lambda * unit_couplings_[p];
        } else {
            sys.row_ptr.assign(grid_.node_count() + 1, 0);
        }
        return sys;
    }

private:
    static double half(const std::vector<double>& f, std::size_t a, std::size_t b) { return 0.5 * (f[a] + f[b]); }

    void push(std::size_t col, double c) {
        cols_.push_back(col);
        unit_couplings_.push_back(c);
    }

    Grid grid_;
    std::size_t clamp_count_ = 0;
    std::vector<double> reaction_;
    std::vector<double> target_;
    std::vector<double> rhs_;
    std::vector<double> symmetrizer_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> cols_;
    std::vector<double> unit_couplings_;
};

inline AssembledSystem assemble_system(const ConditionalMean& m, const DensityModel& density, const RiskSpec& spec,
                                       const Grid& grid) {
    spec.validate();
    return FieldOperator(m, density, spec.measure, grid).at(spec.lambda);
}

namespace detail {

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/**
 * Iterate stored as level + deviation. Large-lambda solutions are nearly
 * constant; keeping the small variation separate preserves its precision, so
 * the flux-form residual is not swamped by the rounding of g itself.
 */
struct SplitIterate {
    double level = 0.0;
    std::vector<double> deviation;

    std::vector<double> values() const {
        std::vector<double> g(deviation);
        for (double& v : g) v += level;
        return g;
    }
};

// r = s * (b - A g), the residual of the symmetrized system.
inline std::vector<double> symmetrized_residual(const AssembledSystem& sys, const SplitIterate& x) {
    std::vector<double> r(sys.rows());
    sys.apply(x.deviation, r);
    for (std::size_t j = 0; j < r.size(); ++j) {
        r[j] = sys.symmetrizer[j] * ((sys.rhs[j] - sys.reaction[j] * x.level) - r[j]);
    }
    return r;
}

inline std::vector<double> symmetrized_residual(const AssembledSystem& sys, std::span<const double> g) {
    return symmetrized_residual(sys, SplitIterate{0.0, std::vector<double>(g.begin(), g.end())});
}

inline double rhs_norm(const AssembledSystem& sys) {
    std::vector<double> sb(sys.rows());
    for (std::size_t j = 0; j < sb.size(); ++j) sb[j] = sys.symmetrizer[j] * sys.rhs[j];
    return norm2(sb);
}

inline double relative_residual(const AssembledSystem& sys, const SplitIterate& x) {
    const double bn = rhs_norm(sys);
    const double rn = norm2(symmetrized_residual(sys, x));
    return bn > 0.0 ? rn / bn : rn;
}

inline double relative_residual(const AssembledSystem& sys, std::span<const double> g) {
    return relative_residual(sys, SplitIterate{0.0, std::vector<double>(g.begin(), g.end())});
}

// Galerkin correction onto constants. Constants lie in the kernel of the
// diffusion part, so this restores sum_j r_j = 0 (discrete conservation).
inline void constant_correction(const AssembledSystem& sys, SplitIterate& x) {
    const auto r = symmetrized_residual(sys, x);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
        num += r[j];
        den += sys.symmetrizer[j] * sys.reaction[j];
    }
    x.level += num / den;
}

// Moves the mass-weighted mean of the deviation into the level.
inline void rebalance(const AssembledSystem& sys, SplitIterate& x) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < x.deviation.size(); ++j) {
        const double w = sys.symmetrizer[j] * sys.reaction[j];
        num += w * x.deviation[j];
        den += w;
    }
    const double mean = num / den;
    x.level += mean;
    for (double& v : x.deviation) v -= mean;
}

/**
 * Tridiagonal elimination for rows  -a_j g_{j-1} + (R_j + a_j + c_j) g_j - c_j g_{j+1} = b_j.
 * Pivots are tracked through e_j = pivot_j - c_j = R_j + a_j e_{j-1} / (e_{j-1} + c_{j-1}),
 * a sum of non-negative terms, so large lambda does not cancel the reaction.
 */
inline std::vector<double> solve_tridiagonal_mmatrix(const AssembledSystem& sys, std::span<const double> b) {
    const std::size_t count = sys.rows();
    std::vector<double> left(count, 0.0), right(count, 0.0);
    for (std::size_t j = 0; j < count; ++j) {
        for (std::size_t p = sys.row_ptr[j]; p < sys.row_ptr[j + 1]; ++p) {
            (sys.cols[p] < j ? left[j] : right[j]) += sys.couplings[p];
        }
    }
    std::vector<double> excess(count), pivot(count), forward(count);
    excess[0] = sys.reaction[0];
    pivot[0] = excess[0] + right[0];
    forward[0] = b[0];
    for (std::size_t j = 1; j < count; ++j) {
        const double ratio = left[j] / pivot[j - 1];
        excess[j] = sys.reaction[j] + ratio * excess[j - 1];
        pivot[j] = excess[j] + right[j];
        forward[j] = b[j] + ratio * forward[j - 1];
    }
    std::vector<double> g(count);
    g[count - 1] = forward[count - 1] / pivot[count - 1];
    for (std::size_t j = count - 1; j-- > 0;) g[j] = (forward[j] + right[j] * g[j + 1]) / pivot[j];
    return g;
}

} // namespace detail

/**
 * Solves the assembled system. 1D: tridiagonal elimination plus one step of
 * refinement. 2D: preconditioned conjugate gradients to relative residual
 * `tol`, else ConvergenceError. The reported residual is that of the
 * level + deviation iterate; the returned field is their sum in double.
 */
inline FieldSolution solve_field(const AssembledSystem& sys, const SolveOptions& opts = {}) {
    const std::size_t count = sys.rows();
    const std::size_t n = sys.grid.nodes_per_axis();
    const std::size_t max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n * n;
    SolveReport report;
    report.clamp_count = sys.clamp_count;

    if (sys.lambda == 0.0) {
        // The equation is diagonal, reaction * g = reaction * m, so g = m.
        std::vector<double> g = sys.target;
        report.method = sys.grid.dim() == 1 ? SolveMethod::direct_tridiagonal : SolveMethod::spd_iterative;
        report.final_residual = detail::relative_residual(sys, g);
        return {ScalarField(sys.grid, std::move(g)), report};
    }

    if (sys.grid.dim() == 1) {
        report.method = SolveMethod::direct_tridiagonal;
        detail::SplitIterate x{0.0, detail::solve_tridiagonal_mmatrix(sys, sys.rhs)};
        detail::rebalance(sys, x);
        // One step of refinement against the flux-form residual.
        auto r = detail::symmetrized_residual(sys, x);
        for (std::size_t j = 0; j < count; ++j) r[j] /= sys.symmetrizer[j];
        const auto dx = detail::solve_tridiagonal_mmatrix(sys, r);
        for (std::size_t j = 0; j < count; ++j) x.deviation[j] += dx[j];
        detail::rebalance(sys, x);
        detail::constant_correction(sys, x);
        report.iterations = 1;
        report.final_residual = detail::relative_residual(sys, x);
        if (!std::isfinite(report.final_residual)) {
            throw ConvergenceError("tridiagonal solve produced a non-finite solution", 1, report.final_residual);
        }
        return {ScalarField(sys.grid, x.values()), report};
    }

    // Jacobi-preconditioned CG on diag(s) A g = diag(s) b, deflated by the
    // constant vector. For large lambda the constant mode is the only small
    // eigenvalue, so removing it keeps the iteration count independent of lambda.
    report.method = SolveMethod::spd_iterative;
    const auto& s = sys.symmetrizer;
    std::vector<double> precond(count), mass(count);
    double total_mass = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
        precond[j] = 1.0 / (s[j] * sys.diagonal(j));
        mass[j] = s[j] * sys.reaction[j]; // row j of diag(s) A applied to the constant 1
        total_mass += mass[j];
    }
    const double bnorm = detail::rhs_norm(sys);
    detail::SplitIterate x{0.0, std::vector<double>(count, 0.0)};
    if (bnorm == 0.0) return {ScalarField(sys.grid, x.values()), report};

    // z - 1 mu with mu chosen so the direction is diag(s)A-orthogonal to constants.
    auto deflate = [&](const std::vector<double>& z, std::vector<double>& out, double beta) {
        double mu = 0.0;
        for (std::size_t j = 0; j < count; ++j) mu += mass[j] * z[j];
        mu /= total_mass;
        for (std::size_t j = 0; j < count; ++j) out[j] = z[j] - mu + beta * out[j];
    };

    detail::constant_correction(sys, x);
    auto r = detail::symmetrized_residual(sys, x);
    std::vector<double> z(count), p(count, 0.0), q(count);
    for (std::size_t j = 0; j < count; ++j) z[j] = precond[j] * r[j];
    deflate(z, p, 0.0);
    double rz = 0.0;
    for (std::size_t j = 0; j < count; ++j) rz += r[j] * z[j];

    double rel = detail::norm2(r) / bnorm;
    std::size_t it = 0;
    while (rel > opts.tol && it < max_iter) {
        sys.apply(p, q);
        double pq = 0.0;
        for (std::size_t j = 0; j < count; ++j) {
            q[j] *= s[j];
            pq += p[j] * q[j];
        }
        const double alpha = rz / pq;
        for (std::size_t j = 0; j < count; ++j) {
            x.deviation[j] += alpha * p[j];
            r[j] -= alpha * q[j];
        }
        ++it;
        // Recompute the true residual periodically to avoid drift.
        if (it % 50 == 0) {
            detail::rebalance(sys, x);
            detail::constant_correction(sys, x);
            r = detail::symmetrized_residual(sys, x);
        }
        double rz_next = 0.0;
        for (std::size_t j = 0; j < count; ++j) {
            z[j] = precond[j] * r[j];
            rz_next += r[j] * z[j];
        }
        const double beta = rz_next / rz;
        rz = rz_next;
        deflate(z, p, beta);
        rel = detail::norm2(r) / bnorm;
    }
    detail::rebalance(sys, x);
    detail::constant_correction(sys, x);
    report.iterations = it;
    report.final_residual = detail::relative_residual(sys, x);
    if (!(report.final_residual <= opts.tol)) {
        throw ConvergenceError("conjugate gradient did not reach relative residual " + std::to_string(opts.tol) +
                                   " within " + std::to_string(max_iter) + " iterations",
                               it, report.final_residual);
    }
    return {ScalarField(sys.grid, x.values()), report};
}

struct SweepEntry {
    double lambda = 0.0;
    ScalarField field;
    double fitness = 0.0;
    double penalty = 0.0;
    SolveReport report;
};

// One solve per lambda. lambdas must be positive and strictly increasing,
// except for an optional leading zero.
inline std::vector<SweepEntry> lambda_sweep(const ConditionalMean& m, const DensityModel& density, const Grid& grid,
                                            std::span<const double> lambdas,
                                            Measure measure = Measure::feature_density,
                                            const SolveOptions& opts = {}) {
    if (lambdas.empty()) throw InvalidArgument("lambda sweep needs at least one lambda");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const double l = lambdas[i];
        if (!std::isfinite(l) || l < 0.0 || (l == 0.0 && i > 0)) {
            throw InvalidArgument("sweep lambdas must be positive (a single leading 0 is allowed)");
        }
        if (i > 0 && !(l > lambdas[i - 1])) throw InvalidArgument("sweep lambdas must be strictly increasing");
    }
    const FieldOperator op(m, density, measure, grid);
    std::vector<SweepEntry> out;
    out.reserve(lambdas.size());
    for (double l : lambdas) {
        FieldSolution sol;
        try {
            sol = solve_field(op.at(l), opts);
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("lambda = " + std::to_string(l) + ": " + e.what(), e.iterations(),
                                   e.final_residual());
        }
        const auto terms = risk_terms(sol.field, m, density, RiskSpec{l, measure}, grid);
        out.push_back({l, std::move(sol.field), terms.fitness, terms.penalty, sol.report});
    }
    return out;
}

// Mean of v under the weights w_j f_X(x_j), which the solve conserves:
// sum_j w_j f_X g_j = sum_j w_j f_X m_j for every lambda. For nu = P^X these
// are the symmetrizer weights w_j f_nu(x_j).
inline double conserved_mean(const AssembledSystem& sys, std::span<const double> v) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double wt = sys.symmetrizer[j] * sys.reaction[j];
        num += wt * v[j];
        den += wt;
    }
    return num / den;
}

} // namespace fieldreg
