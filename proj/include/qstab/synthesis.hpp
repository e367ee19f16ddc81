#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qstab/forward.hpp"
#include "qstab/grid.hpp"
#include "qstab/quadrature.hpp"

namespace qstab {

/// F = q u^2, the internal measurement.
inline ScalarField internal_data(const ScalarField& q, const ScalarField& u) {
    return zip(q, u, [](double qv, double uv) { return qv * uv * uv; });
}

enum class PerturbMode { bump, smooth_random, piecewise };

inline const char* to_string(PerturbMode m) {
    switch (m) {
        case PerturbMode::bump: return "bump";
        case PerturbMode::smooth_random: return "smooth-random";
        case PerturbMode::piecewise: return "piecewise";
    }
    return "?";
}

inline PerturbMode parse_perturb_mode(const std::string& s) {
    if (s == "bump") return PerturbMode::bump;
    if (s == "smooth-random") return PerturbMode::smooth_random;
    if (s == "piecewise") return PerturbMode::piecewise;
    throw ContractViolation("unknown perturbation mode '" + s + "'");
}

/// Uniform double in [0, 1) built from the top 53 bits, independent of the standard library's distributions.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Perturbed {
    ScalarField q;
    std::size_t clipped = 0;
    bool saturated = false;   // more than half of the nodes hit the [1/K, K] clamp
};

inline Perturbed clip_to_bounds(const Grid& g, std::vector<double> v, double k_bound) {
    const double lo = 1.0 / k_bound, hi = k_bound;
    std::size_t clipped = 0;
    for (double& x : v) {
        if (x < lo || x > hi) {
            x = std::clamp(x, lo, hi);
            ++clipped;
        }
    }
    const bool saturated = 2 * clipped > g.size();
    return {ScalarField(g, std::move(v)), clipped, saturated};
}

/// q + amplitude·exp(-|x - c|^2 / w^2), clipped to [1/K, K].
inline Perturbed add_bump(const ScalarField& q, Point c, double w, double amplitude, double k_bound) {
    require(amplitude >= 0.0 && w > 0.0, "add_bump: amplitude must be >= 0 and width > 0");
    const Grid& g = q.grid();
    std::vector<double> v(q.values().begin(), q.values().end());
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Point p = g.point(n);
        const double dx = p.x - c.x, dy = g.is_1d() ? 0.0 : p.y - c.y;
        v[n] += amplitude * std::exp(-(dx * dx + dy * dy) / (w * w));
    }
    return clip_to_bounds(g, std::move(v), k_bound);
}

/// Deterministic perturbation of q drawn from `seed`:
///   bump           centre in the middle half of the domain, width in [0.1, 0.25]·min side
///   smooth-random  sum of sin(kπx/lx) sin(lπy/ly), k,l <= 3, random weights, scaled to sup = amplitude
///   piecewise      +amplitude on a random axis-aligned subrectangle
inline Perturbed perturb_coefficient(const ScalarField& q, PerturbMode mode, double amplitude, std::uint64_t seed,
                                     double k_bound) {
    require(amplitude >= 0.0 && std::isfinite(amplitude), "perturb_coefficient: amplitude must be >= 0");
    const Grid& g = q.grid();
    std::mt19937_64 rng(seed);
    const double min_side = g.is_1d() ? g.lx() : std::min(g.lx(), g.ly());
    auto along = [&](double origin, double len, double lo, double hi) {
        return origin + len * (lo + (hi - lo) * unit_uniform(rng));
    };

    switch (mode) {
        case PerturbMode::bump: {
            const double cx = along(g.x0(), g.lx(), 0.25, 0.75);
            const double cy = g.is_1d() ? 0.0 : along(g.y0(), g.ly(), 0.25, 0.75);
            const double w = min_side * (0.1 + 0.15 * unit_uniform(rng));
            return add_bump(q, {cx, cy}, w, amplitude, k_bound);
        }
        case PerturbMode::smooth_random: {
            const int modes = 3;
            std::vector<double> coef(static_cast<std::size_t>(modes * modes));
            for (auto& c : coef) c = 2.0 * unit_uniform(rng) - 1.0;
            std::vector<double> add(g.size(), 0.0);
            double sup = 0.0;
            for (std::size_t n = 0; n < g.size(); ++n) {
                const Point p = g.point(n);
                const double sx = (p.x - g.x0()) / g.lx();
                const double sy = g.is_1d() ? 0.5 : (p.y - g.y0()) / g.ly();
                double s = 0.0;
                for (int k = 1; k <= modes; ++k)
                    for (int l = 1; l <= modes; ++l)
                        s += coef[static_cast<std::size_t>((k - 1) * modes + (l - 1))] / (k * k + l * l) *
                             std::sin(k * M_PI * sx) * (g.is_1d() ? (l == 1 ? 1.0 : 0.0) : std::sin(l * M_PI * sy));
                add[n] = s;
                sup = std::max(sup, std::abs(s));
            }
            std::vector<double> v(q.values().begin(), q.values().end());
            if (sup > 0.0)
                for (std::size_t n = 0; n < g.size(); ++n) v[n] += amplitude * add[n] / sup;
            return clip_to_bounds(g, std::move(v), k_bound);
        }
        case PerturbMode::piecewise: {
            auto span = [&](double origin, double len) {
                double a = unit_uniform(rng), b = unit_uniform(rng);
                if (a > b) std::swap(a, b);
                a = 0.1 + 0.8 * a;
                b = std::max(0.1 + 0.8 * b, a + 0.1);
                return std::pair{origin + len * a, origin + len * b};
            };
            const auto [xa, xb] = span(g.x0(), g.lx());
            const auto [ya, yb] = g.is_1d() ? std::pair{0.0, 0.0} : span(g.y0(), g.ly());
            std::vector<double> v(q.values().begin(), q.values().end());
            for (std::size_t n = 0; n < g.size(); ++n) {
                const Point p = g.point(n);
                const bool in_x = p.x >= xa && p.x <= xb;
                const bool in_y = g.is_1d() || (p.y >= ya && p.y <= yb);
                if (in_x && in_y) v[n] += amplitude;
            }
            return clip_to_bounds(g, std::move(v), k_bound);
        }
    }
    throw ContractViolation("perturb_coefficient: unknown mode");
}

/// Which a-priori assumptions a synthesized pair violates.
struct HypothesisFlags {
    bool k_violation = false;
    bool e_violation = false;
    bool h_violation = false;

    bool any() const { return k_violation || e_violation || h_violation; }
    std::vector<std::string> names() const {
        std::vector<std::string> out;
        if (k_violation) out.emplace_back("K_violation");
        if (e_violation) out.emplace_back("E_violation");
        if (h_violation) out.emplace_back("H_violation");
        return out;
    }
};

struct ExperimentPair {
    ScalarField q1, q2, u1, u2, f1, f2;
    double epsilon = 0.0;
    double bdry_gap = 0.0;
    PriorBounds bounds{};
    std::uint64_t seed = 0;
    HypothesisFlags flags{};
    bool hypothesis_ok = false;   // bdry_gap <= sqrt(K·epsilon)
    double energy1 = 0.0, energy2 = 0.0;
    double mass1 = 0.0, mass2 = 0.0;   // ∫ q_i u_i^2
};

inline double sup_diff(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a, b, "sup_diff");
    double m = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
    return m;
}

inline double boundary_abs_gap(const ScalarField& u1, const ScalarField& u2) {
    double m = 0.0;
    for (std::size_t n : boundary_nodes(u1.grid())) m = std::max(m, std::abs(std::abs(u1[n]) - std::abs(u2[n])));
    return m;
}

/// Build a pair from two solved states. Used directly for closed-form states and by make_pair.
inline ExperimentPair pair_from_states(ScalarField q1, ScalarField q2, ScalarField u1, ScalarField u2,
                                       const PriorBounds& bounds, std::uint64_t seed = 0) {
    require_same_grid(q1, q2, "make_pair");
    require_same_grid(q1, u1, "make_pair");
    require_same_grid(q1, u2, "make_pair");
    auto f1 = internal_data(q1, u1);
    auto f2 = internal_data(q2, u2);
    ExperimentPair p{.q1 = std::move(q1), .q2 = std::move(q2), .u1 = std::move(u1), .u2 = std::move(u2),
                     .f1 = std::move(f1), .f2 = std::move(f2)};
    p.bounds = bounds;
    p.seed = seed;
    p.epsilon = sup_diff(p.f1, p.f2);
    p.bdry_gap = boundary_abs_gap(p.u1, p.u2);
    p.hypothesis_ok = p.bdry_gap <= std::sqrt(bounds.k_bound * p.epsilon);

    auto out_of_k = [&](const ScalarField& q) {
        return q.min() < bounds.q_min() || q.max() > bounds.q_max();
    };
    p.flags.k_violation = out_of_k(p.q1) || out_of_k(p.q2);
    p.energy1 = energy(p.u1);
    p.energy2 = energy(p.u2);
    const double e2 = bounds.e_bound * bounds.e_bound;
    p.flags.e_violation = p.energy1 > e2 || p.energy2 > e2;
    p.mass1 = integrate(p.f1);
    p.mass2 = integrate(p.f2);
    const double h2 = bounds.h_bound * bounds.h_bound;
    p.flags.h_violation = p.mass1 < h2 || p.mass2 < h2;
    return p;
}

/// Raised when a forward solve inside pair synthesis does not return a usable state.
class PairSolveFailure : public SolverFailure {
public:
    PairSolveFailure(const std::string& what, SolveStatus s) : SolverFailure(what), status(s) {}
    SolveStatus status;
};

inline ScalarField solve_or_throw(const ScalarField& q, const BoundaryTrace& g, const SolverOptions& opts,
                                  const char* which) {
    auto rep = solve_dirichlet(q, g, opts);
    if (rep.status != SolveStatus::ok)
        throw PairSolveFailure(std::string("make_pair: solve for ") + which + " failed (" + to_string(rep.status) +
                                   ")",
                               rep.status);
    return std::move(rep.u);
}

/// Solve for u1, u2 with the same Dirichlet data and package the pair.
inline ExperimentPair make_pair(const ScalarField& q1, const ScalarField& q2, const BoundaryTrace& g,
                                const PriorBounds& bounds, const SolverOptions& opts = {}, std::uint64_t seed = 0) {
    auto u1 = solve_or_throw(q1, g, opts, "u1");
    auto u2 = solve_or_throw(q2, g, opts, "u2");
    return pair_from_states(q1, q2, std::move(u1), std::move(u2), bounds, seed);
}

/// Stress variant: g2 = g + jitter·sqrt(K·ε0)·ξ with ξ uniform in [-1, 1] per node, where ε0 is
/// the discrepancy of the unjittered pair. The hypothesis flag is recomputed honestly afterwards.
inline ExperimentPair make_pair_jittered(const ScalarField& q1, const ScalarField& q2, const BoundaryTrace& g,
                                         const PriorBounds& bounds, double jitter, std::uint64_t seed,
                                         const SolverOptions& opts = {}) {
    require(jitter >= 0.0, "make_pair: jitter must be >= 0");
    auto base = make_pair(q1, q2, g, bounds, opts, seed);
    if (jitter == 0.0) return base;
    const double scale = jitter * std::sqrt(bounds.k_bound * base.epsilon);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    BoundaryTrace g2 = g;
    for (auto& p : g2) p.value += scale * (2.0 * unit_uniform(rng) - 1.0);
    auto u2 = solve_or_throw(q2, g2, opts, "u2 (jittered)");
    return pair_from_states(q1, q2, std::move(base.u1), std::move(u2), bounds, seed);
}

} // namespace qstab
