#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "qstab/forward.hpp"
#include "qstab/grid.hpp"
#include "qstab/quadrature.hpp"

namespace qstab {

struct ReconOptions {
    double tol = 1e-10;
    int max_iter = 200;
    /// Clamp level for |u|; nullopt selects 1e-6·max(||g||_inf, 1).
    std::optional<double> tau;
    SolverOptions solver{1e-13, 20000, 1e-6, false};
};

struct ReconstructionResult {
    ScalarField u_hat;
    ScalarField q_hat;
    NodeMask flagged;          // nodes where the |u| clamp or the [1/K, K] projection fired
    int iterations = 0;
    double final_update_linf = 0.0;
    std::size_t floor_hits = 0;   // nodes clamped at tau in the last iteration
    bool converged = false;
    bool sign_change = false;     // some iterate changed sign where F > 0
    double tau = 0.0;
    std::vector<double> update_history{};
};

/// sign(s)·max(|s|, tau), odd in s including signed zeros.
inline double clamp_away_from_zero(double s, double tau) { return std::copysign(std::max(std::abs(s), tau), s); }

inline double default_tau(const BoundaryTrace& g) { return 1e-6 * std::max(trace_linf(g), 1.0); }

/// One application of the reconstruction map: v solves Δv = -F / clamp(u; tau) with v = g on ∂Ω.
class FixedPointMap {
public:
    FixedPointMap(const ScalarField& f, const BoundaryTrace& g, double tau, SolverOptions solver)
        : sys_(assemble(ScalarField::constant(f.grid(), 0.0), g)), data_(f.values().begin(), f.values().end()),
          tau_(tau), solver_(solver) {
        require(tau > 0.0, "reconstruct_u: tau must be positive");
        for (double& v : data_) v = std::max(v, 0.0);
    }

    const Grid& grid() const { return sys_.op.grid; }
    double tau() const { return tau_; }

    /// Harmonic extension of g, the starting iterate.
    ScalarField harmonic_extension() const {
        return scatter(sys_.op, sys_.dirichlet, solve(sys_.load, Vector::Zero(sys_.load.size())));
    }

    ScalarField apply(const ScalarField& u, std::size_t* floor_hits = nullptr) const {
        std::vector<double> rhs(data_.size());
        std::size_t hits = 0;
        for (std::size_t n = 0; n < data_.size(); ++n) {
            if (std::abs(u[n]) < tau_) ++hits;
            rhs[n] = -data_[n] / clamp_away_from_zero(u[n], tau_);
        }
        if (floor_hits) *floor_hits = hits;
        Vector x0(static_cast<Eigen::Index>(sys_.op.interior.size()));
        for (std::size_t k = 0; k < sys_.op.interior.size(); ++k) x0[static_cast<Eigen::Index>(k)] = u[sys_.op.interior[k]];
        return scatter(sys_.op, sys_.dirichlet, solve(dirichlet_load(sys_.op, sys_.dirichlet, &rhs), x0));
    }

    bool positive_data(std::size_t n) const { return data_[n] > 0.0; }

private:
    Vector solve(const Vector& b, const Vector& x0) const {
        auto lin = solve_linear(sys_.op.matrix, b, x0, solver_.tol, solver_.max_iter, true);
        if (!lin.converged && lin.residual_linf > 1e-6 * std::max(b.lpNorm<Eigen::Infinity>(), 1e-300))
            throw SolverFailure("reconstruct_u: Poisson solve did not converge");
        if (!lin.x.allFinite()) throw SolverFailure("reconstruct_u: iterates diverged");
        return lin.x;
    }

    AssembledSystem sys_;
    std::vector<double> data_;
    double tau_;
    SolverOptions solver_;
};

/// Fixed-point recovery of u from F = q u^2 and u|∂Ω = g:
///   u^0 harmonic extension of g,  Δu^{k+1} = -F / clamp(u^k; tau),  u^{k+1} = g on ∂Ω.
/// Only the u part of the result is populated; reconstruct() adds q_hat.
inline ReconstructionResult reconstruct_u(const ScalarField& f, const BoundaryTrace& g, const ReconOptions& opts = {}) {
    require(opts.tol > 0.0 && opts.max_iter >= 1, "reconstruct_u: tol must be positive and max_iter >= 1");
    const FixedPointMap map(f, g, opts.tau.value_or(default_tau(g)), opts.solver);
    const Grid& grid = map.grid();

    ReconstructionResult res{
        .u_hat = map.harmonic_extension(), .q_hat = ScalarField::constant(grid, 0.0), .flagged = NodeMask::none(grid)};
    res.tau = map.tau();
    for (int it = 1; it <= opts.max_iter; ++it) {
        const ScalarField& u = res.u_hat;
        auto next = map.apply(u, &res.floor_hits);
        double update = 0.0;
        for (std::size_t n = 0; n < grid.size(); ++n) {
            update = std::max(update, std::abs(next[n] - u[n]));
            if (map.positive_data(n) && u[n] != 0.0 && next[n] != 0.0 && std::signbit(u[n]) != std::signbit(next[n]))
                res.sign_change = true;
        }
        res.iterations = it;
        res.final_update_linf = update;
        res.update_history.push_back(update);
        res.u_hat = std::move(next);
        if (update < opts.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

struct RecoveredCoefficient {
    ScalarField q_hat;
    NodeMask flagged;
};

/// q_hat = F / max(u^2, tau^2), projected onto [1/K, K]. Nodes where either step fired are flagged.
inline RecoveredCoefficient recover_q(const ScalarField& f, const ScalarField& u_hat, const PriorBounds& bounds,
                                      double tau) {
    require_same_grid(f, u_hat, "recover_q");
    require(tau > 0.0, "recover_q: tau must be positive");
    const Grid& g = f.grid();
    std::vector<double> q(g.size());
    NodeMask flagged = NodeMask::none(g);
    const double lo = bounds.q_min(), hi = bounds.q_max();
    for (std::size_t n = 0; n < g.size(); ++n) {
        const double u2 = u_hat[n] * u_hat[n];
        bool fired = u2 < tau * tau;
        double v = f[n] / std::max(u2, tau * tau);
        if (v < lo || v > hi) {
            v = std::clamp(v, lo, hi);
            fired = true;
        }
        q[n] = v;
        flagged.on[n] = fired ? 1 : 0;
    }
    return {ScalarField(g, std::move(q)), std::move(flagged)};
}

/// reconstruct_u followed by recover_q with the same tau.
inline ReconstructionResult reconstruct(const ScalarField& f, const BoundaryTrace& g, const PriorBounds& bounds,
                                        const ReconOptions& opts = {}) {
    auto res = reconstruct_u(f, g, opts);
    auto rec = recover_q(f, res.u_hat, bounds, res.tau);
    res.q_hat = std::move(rec.q_hat);
    res.flagged = std::move(rec.flagged);
    return res;
}

struct ReconstructionError {
    double l1_interior = 0.0;
    double linf_interior = 0.0;
    bool empty = false;
};

inline ReconstructionError reconstruction_error(const ScalarField& q_hat, const ScalarField& q_true, double d) {
    require_same_grid(q_hat, q_true, "reconstruction_error");
    const auto n = norms(q_hat - q_true, interior_mask(q_hat.grid(), d));
    return {n.l1, n.linf, n.empty};
}

} // namespace qstab
