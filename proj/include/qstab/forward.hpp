#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "qstab/grid.hpp"
#include "qstab/minres.hpp"
#include "qstab/quadrature.hpp"

namespace qstab {

/// Discrete Δ + q on the interior nodes of a grid with Dirichlet values eliminated.
///
/// Unknowns are the interior nodes in row-major order. Row k reads
///   (sum of neighbours - 2·dim·u_k) / h^2 + q_k u_k = b_k,
/// where b collects the known boundary neighbours moved to the right-hand side.
struct DiscreteOperator {
    Grid grid;
    SparseMatrix matrix;
    std::vector<std::size_t> interior;   // unknown -> node
    std::vector<std::int64_t> unknown;   // node -> unknown, -1 on the boundary
    double q_abs_max = 0.0;
};

struct AssembledSystem {
    DiscreteOperator op;
    Vector load;
    std::vector<double> dirichlet;   // full-length nodal vector holding g on the boundary, 0 inside
    bool bounds_warning = false;     // q left [1/K, K] for the declared bounds
};

inline DiscreteOperator assemble_operator(const ScalarField& q) {
    const Grid& g = q.grid();
    DiscreteOperator op{g, {}, {}, std::vector<std::int64_t>(g.size(), -1), q.abs_max()};
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.on_boundary(n)) {
            op.unknown[n] = static_cast<std::int64_t>(op.interior.size());
            op.interior.push_back(n);
        }
    }
    const auto m = static_cast<Eigen::Index>(op.interior.size());
    require(m > 0, "assemble: grid has no interior nodes");
    const double inv_h2 = 1.0 / (g.h() * g.h());
    const double centre = -2.0 * g.dim() * inv_h2;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) * (g.is_1d() ? 3 : 5));
    for (Eigen::Index k = 0; k < m; ++k) {
        const std::size_t n = op.interior[static_cast<std::size_t>(k)];
        trip.emplace_back(k, k, centre + q[n]);
        auto link = [&](std::size_t nb) {
            if (op.unknown[nb] >= 0) trip.emplace_back(k, op.unknown[nb], inv_h2);
        };
        link(n - 1);
        link(n + 1);
        if (!g.is_1d()) {
            link(n - g.nx());
            link(n + g.nx());
        }
    }
    op.matrix.resize(m, m);
    op.matrix.setFromTriplets(trip.begin(), trip.end());
    op.matrix.makeCompressed();
    return op;
}

inline void check_trace(const Grid& g, const BoundaryTrace& trace) {
    const auto expected = boundary_nodes(g);
    require(trace.size() == expected.size(), "boundary data must cover every boundary node exactly once");
    std::vector<std::uint8_t> seen(g.size(), 0);
    for (const auto& p : trace) {
        require(p.node < g.size() && g.on_boundary(p.node), "boundary data references a non-boundary node");
        require(!seen[p.node], "boundary data lists a node twice");
        require(std::isfinite(p.value), "boundary data must be finite");
        seen[p.node] = 1;
    }
}

/// Load vector for Δu + q u = rhs with u = g on the boundary; rhs defaults to 0.
inline Vector dirichlet_load(const DiscreteOperator& op, const std::vector<double>& dirichlet,
                             const std::vector<double>* rhs = nullptr) {
    const Grid& g = op.grid;
    const double inv_h2 = 1.0 / (g.h() * g.h());
    Vector b(static_cast<Eigen::Index>(op.interior.size()));
    for (std::size_t k = 0; k < op.interior.size(); ++k) {
        const std::size_t n = op.interior[k];
        double s = rhs ? (*rhs)[n] : 0.0;
        auto link = [&](std::size_t nb) {
            if (op.unknown[nb] < 0) s -= dirichlet[nb] * inv_h2;
        };
        link(n - 1);
        link(n + 1);
        if (!g.is_1d()) {
            link(n - g.nx());
            link(n + g.nx());
        }
        b[static_cast<Eigen::Index>(k)] = s;
    }
    return b;
}

inline AssembledSystem assemble(const ScalarField& q, const BoundaryTrace& g_trace,
                                std::optional<PriorBounds> bounds = std::nullopt) {
    const Grid& g = q.grid();
    check_trace(g, g_trace);
    AssembledSystem sys{assemble_operator(q), {}, std::vector<double>(g.size(), 0.0), false};
    for (const auto& p : g_trace) sys.dirichlet[p.node] = p.value;
    sys.load = dirichlet_load(sys.op, sys.dirichlet);
    if (bounds) {
        const double lo = bounds->q_min(), hi = bounds->q_max();
        for (double v : q.values())
            if (v < lo || v > hi) sys.bounds_warning = true;
    }
    return sys;
}

inline ScalarField scatter(const DiscreteOperator& op, const std::vector<double>& dirichlet, const Vector& x) {
    std::vector<double> u = dirichlet;
    for (std::size_t k = 0; k < op.interior.size(); ++k) u[op.interior[k]] = x[static_cast<Eigen::Index>(k)];
    return ScalarField(op.grid, std::move(u));
}

struct GapEstimate {
    double gap = 0.0;
    int iterations = 0;
    bool converged = false;
    bool singular = false;   // the factorisation hit an exactly zero pivot
};

/// min |λ| over the spectrum of the discrete Δ + q, by inverse iteration with a
/// sparse LU factorisation and Rayleigh-quotient estimates.
inline GapEstimate eigen_gap(const DiscreteOperator& op, int max_iter = 2000, double rel_tol = 1e-9) {
    GapEstimate out;
    Eigen::SparseMatrix<double> colmajor = op.matrix;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(colmajor);
    if (lu.info() != Eigen::Success) {
        out.singular = true;
        out.converged = true;
        return out;
    }
    const Eigen::Index m = op.matrix.rows();
    std::mt19937_64 rng(0x5eedULL);
    Vector x(m);
    for (Eigen::Index k = 0; k < m; ++k) x[k] = 1.0 + 0.5 * (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5);
    x.normalize();

    double lambda = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= max_iter; ++it) {
        Vector y = lu.solve(x);
        const double ynorm = y.norm();
        if (!std::isfinite(ynorm) || ynorm == 0.0) {
            out.singular = true;
            out.converged = true;
            out.gap = 0.0;
            out.iterations = it;
            return out;
        }
        y /= ynorm;
        const double next = y.dot(op.matrix * y);
        out.iterations = it;
        const bool settled = std::abs(next - lambda) <= rel_tol * std::abs(next);
        lambda = next;
        x = y;
        if (settled) {
            out.converged = true;
            break;
        }
    }
    out.gap = std::abs(lambda);
    return out;
}

inline GapEstimate eigen_gap(const ScalarField& q) { return eigen_gap(assemble_operator(q)); }

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 20000;
    /// NearSingular when gap < gap_factor * (max|q| + 4/h^2).
    double gap_factor = 1e-6;
    bool compute_gap = true;
};

enum class SolveStatus { ok, near_singular, not_converged };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::ok: return "ok";
        case SolveStatus::near_singular: return "near_singular";
        case SolveStatus::not_converged: return "not_converged";
    }
    return "?";
}

struct SolveReport {
    ScalarField u;
    double residual_linf = 0.0;
    int iterations = 0;
    double eigen_gap_estimate = 0.0;
    double gap_threshold = 0.0;
    SolveStatus status = SolveStatus::ok;
    bool degenerate = false;     // zero data: u is the trivial solution
    bool used_direct = false;    // MINRES did not meet the tolerance, sparse LU answered
    bool bounds_warning = false;
    std::vector<double> residual_history{};
};

inline double gap_threshold(const DiscreteOperator& op, double factor) {
    return factor * (op.q_abs_max + 4.0 / (op.grid.h() * op.grid.h()));
}

struct LinearSolve {
    Vector x;
    double residual_linf = 0.0;
    int iterations = 0;
    bool converged = false;
    bool used_direct = false;
    std::vector<double> residual_history{};
};

/// MINRES with warm restarts until ||A x - b||_inf <= tol * ||b||_inf. If that fails
/// and direct_fallback is set, a sparse LU solve is attempted.
inline LinearSolve solve_linear(const SparseMatrix& a, const Vector& b, const Vector& x0, double tol, int max_iter,
                                bool direct_fallback) {
    LinearSolve out;
    const double bnorm = b.lpNorm<Eigen::Infinity>();
    const double target = tol * bnorm;
    if (bnorm == 0.0) {
        out.x = Vector::Zero(b.size());
        out.converged = true;
        out.residual_history = {0.0};
        return out;
    }
    out.x = x0;
    int budget = max_iter;
    for (int attempt = 0; attempt < 4 && budget > 0; ++attempt) {
        auto r = minres(a, b, out.x, target, budget);
        out.x = std::move(r.x);
        out.iterations += r.iterations;
        budget -= std::max(r.iterations, 1);
        if (out.residual_history.empty())
            out.residual_history = std::move(r.residual_history);
        else
            out.residual_history.insert(out.residual_history.end(), r.residual_history.begin() + 1,
                                        r.residual_history.end());
        out.residual_linf = (a * out.x - b).lpNorm<Eigen::Infinity>();
        if (out.residual_linf <= target) {
            out.converged = true;
            return out;
        }
    }
    if (direct_fallback) {
        Eigen::SparseMatrix<double> colmajor = a;
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(colmajor);
        if (lu.info() == Eigen::Success) {
            Vector x = lu.solve(b);
            const double res = (a * x - b).lpNorm<Eigen::Infinity>();
            if (std::isfinite(res) && res < out.residual_linf) {
                out.x = std::move(x);
                out.residual_linf = res;
                out.used_direct = true;
                out.converged = res <= target;
            }
        }
    }
    return out;
}

/// Solve Δu + q u = 0 in the rectangle with u = g on its boundary.
inline SolveReport solve_dirichlet(const ScalarField& q, const BoundaryTrace& g, const SolverOptions& opts = {},
                                   std::optional<PriorBounds> bounds = std::nullopt) {
    require(opts.tol > 0.0, "solve_dirichlet: tol must be positive");
    auto sys = assemble(q, g, bounds);
    SolveReport rep{.u = scatter(sys.op, sys.dirichlet, Vector::Zero(sys.op.matrix.rows()))};
    rep.bounds_warning = sys.bounds_warning;
    rep.gap_threshold = gap_threshold(sys.op, opts.gap_factor);

    bool gap_small = false;
    if (opts.compute_gap) {
        const auto gap = eigen_gap(sys.op);
        rep.eigen_gap_estimate = gap.gap;
        gap_small = gap.gap < rep.gap_threshold;
    }
    if (sys.load.lpNorm<Eigen::Infinity>() == 0.0) {
        rep.degenerate = true;
        rep.residual_history = {0.0};
        if (gap_small) rep.status = SolveStatus::near_singular;
        return rep;
    }
    // Near a zero eigenvalue neither MINRES nor LU yields a meaningful answer.
    auto lin = solve_linear(sys.op.matrix, sys.load, Vector::Zero(sys.load.size()), opts.tol, opts.max_iter,
                            !gap_small);
    rep.u = scatter(sys.op, sys.dirichlet, lin.x);
    rep.residual_linf = lin.residual_linf;
    rep.iterations = lin.iterations;
    rep.used_direct = lin.used_direct;
    rep.residual_history = std::move(lin.residual_history);
    if (gap_small)
        rep.status = SolveStatus::near_singular;
    else if (!lin.converged)
        rep.status = SolveStatus::not_converged;
    return rep;
}

} // namespace qstab
