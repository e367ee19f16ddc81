#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>
#include <vector>

#include "qstab/grid.hpp"
#include "qstab/quadrature.hpp"
#include "qstab/synthesis.hpp"

namespace qstab {

// Ball integrals use center-of-node inclusion: every node strictly inside B_r(x)
// carries the full cell volume h^dim.

inline double cell_volume(const Grid& g) { return g.is_1d() ? g.h() : g.h() * g.h(); }

inline bool ball_inside(const Grid& g, Point c, double r) {
    const double slack = 1e-12 * g.h();
    if (c.x - r < g.x0() - slack || c.x + r > g.x0() + g.lx() + slack) return false;
    if (g.is_1d()) return true;
    return c.y - r >= g.y0() - slack && c.y + r <= g.y0() + g.ly() + slack;
}

template <class Fn>
double ball_sum(const ScalarField& f, Point c, double r, Fn&& integrand, std::size_t* count = nullptr) {
    const Grid& g = f.grid();
    const auto m = ball_mask(g, c, r);
    double s = 0.0;
    std::size_t k = 0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!m[n]) continue;
        s += integrand(f[n]);
        ++k;
    }
    if (count) *count = k;
    return s * cell_volume(g);
}

/// Discrete |B_r(c)|: number of nodes in the ball times the cell volume.
inline double ball_measure(const Grid& g, Point c, double r) { return static_cast<double>(ball_mask(g, c, r).count()) * cell_volume(g); }

/// ∫_{B_2r(x)} u^2 / ∫_{B_r(x)} u^2.
inline double doubling_ratio(const ScalarField& u, Point x, double r) {
    require(r > 0.0, "doubling_ratio: r must be positive");
    require(ball_inside(u.grid(), x, 2.0 * r), "doubling_ratio: B_2r(x) must lie inside the domain");
    auto sq = [](double v) { return v * v; };
    const double inner = ball_sum(u, x, r, sq);
    if (inner < 1e-300) throw DegenerateBall("doubling_ratio: ∫_{B_r} u^2 vanishes");
    return ball_sum(u, x, 2.0 * r, sq) / inner;
}

/// ∫_{B_r(x)} u^2 / ∫_Ω u^2, in [0, 1].
inline double propagation_ratio(const ScalarField& u, Point x, double r) {
    require(r > 0.0, "propagation_ratio: r must be positive");
    require(ball_inside(u.grid(), x, r), "propagation_ratio: x must lie in Ω_r");
    auto sq = [](double v) { return v * v; };
    const double total = integrate(u.map(sq));
    require(total > 0.0, "propagation_ratio: u is the trivial solution");
    return ball_sum(u, x, r, sq) / total;
}

struct FlooredValue {
    double value = 0.0;
    std::size_t floor_hits = 0;
};

/// (avg_B u^2)·(avg_B |u|^{-2/(p-1)})^{p-1}, with |u| floored at tau_ap inside the negative power.
inline FlooredValue muckenhoupt_value(const ScalarField& u, Point x, double r, double p, double tau_ap = 1e-12) {
    require(p > 1.0, "muckenhoupt_value: p must exceed 1");
    require(r > 0.0, "muckenhoupt_value: r must be positive");
    require(ball_inside(u.grid(), x, r), "muckenhoupt_value: B_r(x) must lie inside the domain");
    const double expo = -2.0 / (p - 1.0);
    std::size_t count = 0, hits = 0;
    const double s2 = ball_sum(u, x, r, [](double v) { return v * v; }, &count);
    const double sneg = ball_sum(u, x, r, [&](double v) {
        const double a = std::abs(v);
        if (a < tau_ap) ++hits;
        return std::pow(std::max(a, tau_ap), expo);
    });
    require(count > 0, "muckenhoupt_value: ball contains no nodes");
    const double vol = static_cast<double>(count) * cell_volume(u.grid());
    return {(s2 / vol) * std::pow(sneg / vol, p - 1.0), hits};
}

/// ∫_{Ω_d} max(|u|, tau_ap)^{-δ} with the masked trapezoid rule.
inline FlooredValue negative_power_integral(const ScalarField& u, double d, double delta, double tau_ap = 1e-12) {
    require(delta > 0.0, "negative_power_integral: delta must be positive");
    const auto mask = interior_mask(u.grid(), d);
    require(!mask.empty(), "negative_power_integral: Ω_d contains no nodes");
    std::size_t hits = 0;
    for (std::size_t n = 0; n < u.size(); ++n)
        if (mask[n] && std::abs(u[n]) < tau_ap) ++hits;
    const auto integrand = u.map([&](double v) { return std::pow(std::max(std::abs(v), tau_ap), -delta); });
    return {integrate(integrand, mask), hits};
}

struct WeightedChecks {
    double lhs = 0.0;                  // ∫ (|u1|+|u2|)(|u1|-|u2|)^2
    double proof_bound = 0.0;          // 16 K ε ∫ (|u1|+|u2|)
    double l3_lhs = 0.0;               // ∫ ||u1|-|u2||^3
    double weightq_lhs = 0.0;          // ∫ |q1-q2| u1^2
    double weightq_bound_input = 0.0;  // ε + ε^{1/2}

    bool proof_bound_holds(double slack = 0.0) const { return lhs <= proof_bound * (1.0 + slack); }
};

inline WeightedChecks weighted_checks(const ExperimentPair& p) {
    const double k = p.bounds.k_bound, eps = p.epsilon;
    WeightedChecks w;
    const auto sum_abs = zip(p.u1, p.u2, [](double a, double b) { return std::abs(a) + std::abs(b); });
    w.lhs = integrate(zip(p.u1, p.u2, [](double a, double b) {
        const double d = std::abs(a) - std::abs(b);
        return (std::abs(a) + std::abs(b)) * d * d;
    }));
    w.proof_bound = 16.0 * k * eps * integrate(sum_abs);
    w.l3_lhs = integrate(zip(p.u1, p.u2, [](double a, double b) {
        const double d = std::abs(std::abs(a) - std::abs(b));
        return d * d * d;
    }));
    w.weightq_lhs = integrate(zip(p.q1 - p.q2, p.u1, [](double dq, double u) { return std::abs(dq) * u * u; }));
    w.weightq_bound_input = eps + std::sqrt(eps);
    return w;
}

struct LevelSetError {
    double value = 0.0;
    std::size_t nodes = 0;
    bool empty = false;
};

/// ||q1 - q2||_{L^1(D_t)} with D_t = {q1 u1^2 >= t}, intersected with Ω_d when d > 0.
inline LevelSetError level_set_error(const ScalarField& q1, const ScalarField& q2, const ScalarField& u1, double t,
                                     double d = 0.0) {
    require(t > 0.0, "level_set_error: t must be positive");
    require_same_grid(q1, q2, "level_set_error");
    require_same_grid(q1, u1, "level_set_error");
    auto mask = mask_where(internal_data(q1, u1), [t](double f) { return f >= t; });
    if (d > 0.0) mask = mask & interior_mask(q1.grid(), d);
    LevelSetError out;
    out.nodes = mask.count();
    if (out.nodes == 0) {
        out.empty = true;
        return out;
    }
    out.value = norms(q1 - q2, mask).l1;
    return out;
}

/// Coarse lattice of ball centres inside Ω_{2 r_bar}, sorted by (x, y).
inline std::vector<Point> default_centers(const Grid& g, double r_bar, std::size_t per_axis = 3) {
    std::vector<Point> out;
    auto axis = [&](double origin, double len) {
        std::vector<double> v;
        const double span = len - 4.0 * r_bar;
        if (span <= 0.0) return v;
        for (std::size_t k = 0; k < per_axis; ++k)
            v.push_back(origin + 2.0 * r_bar + span * (static_cast<double>(k) + 0.5) / static_cast<double>(per_axis));
        return v;
    };
    const auto xs = axis(g.x0(), g.lx());
    if (g.is_1d()) {
        for (double x : xs) out.push_back({x, 0.0});
        return out;
    }
    const auto ys = axis(g.y0(), g.ly());
    for (double x : xs)
        for (double y : ys) out.push_back({x, y});
    return out;
}

/// Every other node along each axis; nullopt when the grid does not halve.
inline std::optional<ScalarField> coarsen(const ScalarField& f) {
    const Grid& g = f.grid();
    if ((g.nx() - 1) % 2 != 0 || (g.nx() - 1) / 2 + 1 < 3) return std::nullopt;
    if (!g.is_1d() && ((g.ny() - 1) % 2 != 0 || (g.ny() - 1) / 2 + 1 < 3)) return std::nullopt;
    const std::size_t cx = (g.nx() - 1) / 2 + 1, cy = g.is_1d() ? 1 : (g.ny() - 1) / 2 + 1;
    Grid coarse(cx, cy, g.lx(), g.ly(), g.x0(), g.y0());
    std::vector<double> v(coarse.size());
    for (std::size_t j = 0; j < cy; ++j)
        for (std::size_t i = 0; i < cx; ++i) v[coarse.index(i, j)] = f[g.index(2 * i, g.is_1d() ? 0 : 2 * j)];
    return ScalarField(coarse, std::move(v));
}

struct DiagnosticsConfig {
    std::vector<double> radii{0.05, 0.1};
    std::vector<double> p_list{2.0, 3.0, 5.0};
    std::vector<double> delta_list{0.25, 0.5, 1.0, 1.5, 2.0};
    std::vector<double> d_list{0.1};
    std::vector<double> t_list{0.01, 0.1, 1.0};
    std::size_t lattice = 3;
    double tau_ap = 1e-12;
    /// Relative change between the grid and its 2x coarsening below which an integral counts as stable.
    double stability_tol = 0.1;
};

struct BallRow {
    Point center;
    double r = 0.0;
    double param = 0.0;   // p for A_p rows, unused otherwise
    double value = 0.0;
    std::size_t floor_hits = 0;
};

struct NegIntegralRow {
    double d = 0.0;
    double delta = 0.0;
    double value = 0.0;
    std::size_t floor_hits = 0;
    std::optional<double> coarse_value;
    bool stable = false;
};

struct LevelSetRow {
    double t = 0.0;
    double d = 0.0;
    double l1_dt = 0.0;
    std::size_t nodes = 0;
};

struct DiagnosticsReport {
    std::vector<BallRow> doubling;
    std::vector<BallRow> propagation;
    std::vector<BallRow> ap;
    std::vector<NegIntegralRow> neg_integral;
    std::optional<WeightedChecks> weighted;
    std::vector<LevelSetRow> level_sets;
    std::size_t degenerate_balls = 0;

    double max_doubling() const {
        double m = 0.0;
        for (const auto& r : doubling) m = std::max(m, r.value);
        return m;
    }
    double min_propagation() const {
        double m = propagation.empty() ? 0.0 : std::numeric_limits<double>::infinity();
        for (const auto& r : propagation) m = std::min(m, r.value);
        return m;
    }
    /// Largest δ whose integral is refinement-stable for every d; nullopt if none is.
    std::optional<double> best_delta() const {
        std::optional<double> best;
        std::vector<double> deltas;
        for (const auto& r : neg_integral) deltas.push_back(r.delta);
        std::sort(deltas.begin(), deltas.end());
        deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());
        for (double dl : deltas) {
            bool all = true;
            for (const auto& r : neg_integral)
                if (r.delta == dl && !r.stable) all = false;
            if (all) best = dl;
        }
        return best;
    }
    /// (proof_bound - lhs) / proof_bound; 1 when both vanish.
    std::optional<double> proof_bound_margin() const {
        if (!weighted) return std::nullopt;
        if (weighted->proof_bound == 0.0) return weighted->lhs == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
        return (weighted->proof_bound - weighted->lhs) / weighted->proof_bound;
    }
};

inline void sort_rows(std::vector<BallRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const BallRow& a, const BallRow& b) {
        return std::tie(a.center.x, a.center.y, a.r, a.param) < std::tie(b.center.x, b.center.y, b.r, b.param);
    });
}

/// Evaluate every unique-continuation functional on u; pair-level checks when a pair is given
/// (u is then expected to be pair->u1).
inline DiagnosticsReport diagnose(const ScalarField& u, const DiagnosticsConfig& cfg,
                                  const ExperimentPair* pair = nullptr) {
    DiagnosticsReport rep;
    const Grid& g = u.grid();
    const double r_bar = cfg.radii.empty() ? 0.0 : *std::max_element(cfg.radii.begin(), cfg.radii.end());
    const auto centers = r_bar > 0.0 ? default_centers(g, r_bar, cfg.lattice) : std::vector<Point>{};

    for (const Point& c : centers) {
        for (double r : cfg.radii) {
            try {
                rep.doubling.push_back({c, r, 0.0, doubling_ratio(u, c, r), 0});
            } catch (const DegenerateBall&) {
                ++rep.degenerate_balls;
            }
            rep.propagation.push_back({c, r, 0.0, propagation_ratio(u, c, r), 0});
            for (double p : cfg.p_list) {
                const auto v = muckenhoupt_value(u, c, r, p, cfg.tau_ap);
                rep.ap.push_back({c, r, p, v.value, v.floor_hits});
            }
        }
    }
    sort_rows(rep.doubling);
    sort_rows(rep.propagation);
    sort_rows(rep.ap);

    const auto coarse = coarsen(u);
    for (double d : cfg.d_list) {
        if (interior_mask(g, d).empty()) continue;
        for (double delta : cfg.delta_list) {
            const auto v = negative_power_integral(u, d, delta, cfg.tau_ap);
            NegIntegralRow row{d, delta, v.value, v.floor_hits, std::nullopt, false};
            if (coarse && !interior_mask(coarse->grid(), d).empty()) {
                const double cv = negative_power_integral(*coarse, d, delta, cfg.tau_ap).value;
                // the fine grid is re-integrated over exactly the coarse Ω_d, so only quadrature differs
                const double hc = coarse->grid().h();
                const double margin = (std::floor(d / hc * (1.0 + 1e-12)) + 1.0) * hc;
                const double fv = negative_power_integral(u, margin - 0.5 * g.h(), delta, cfg.tau_ap).value;
                row.coarse_value = cv;
                row.stable = v.floor_hits == 0 && std::abs(fv - cv) <= cfg.stability_tol * std::abs(fv);
            }
            rep.neg_integral.push_back(row);
        }
    }

    if (pair) {
        rep.weighted = weighted_checks(*pair);
        for (double t : cfg.t_list) {
            const auto ls = level_set_error(pair->q1, pair->q2, pair->u1, t);
            rep.level_sets.push_back({t, 0.0, ls.value, ls.nodes});
        }
    }
    return rep;
}

/// eta = δ / (δ + 2), the Hölder exponent implied by an integrability exponent δ.
inline double eta_from_delta(double delta) { return delta / (delta + 2.0); }

/// δ = 2 / (p - 1), the integrability exponent implied by an A_p weight.
inline double delta_from_p(double p) { return 2.0 / (p - 1.0); }

} // namespace qstab
