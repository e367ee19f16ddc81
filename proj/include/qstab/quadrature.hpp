#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qstab/grid.hpp"

namespace qstab {

/// Trapezoid weights restricted to a node mask.
///
/// A grid cell contributes only when all of its corner nodes are selected; each
/// such cell hands a quarter of its area (half of its length in 1D) to every
/// corner. On the full rectangle this is the composite trapezoid rule; on a
/// masked region a node on the edge of the mask keeps the fraction of its
/// Voronoi cell that lies inside the union of selected cells.
inline std::vector<double> quadrature_weights(const Grid& g, const NodeMask& mask) {
    require(mask.compatible(g), "quadrature_weights: mask does not match grid");
    std::vector<double> w(g.size(), 0.0);
    const double h = g.h();
    if (g.is_1d()) {
        const double half = 0.5 * h;
        for (std::size_t i = 0; i + 1 < g.nx(); ++i) {
            if (mask[i] && mask[i + 1]) {
                w[i] += half;
                w[i + 1] += half;
            }
        }
        return w;
    }
    const double quarter = 0.25 * h * h;
    for (std::size_t j = 0; j + 1 < g.ny(); ++j) {
        for (std::size_t i = 0; i + 1 < g.nx(); ++i) {
            const std::size_t a = g.index(i, j), b = a + 1, c = g.index(i, j + 1), d = c + 1;
            if (mask[a] && mask[b] && mask[c] && mask[d]) {
                w[a] += quarter;
                w[b] += quarter;
                w[c] += quarter;
                w[d] += quarter;
            }
        }
    }
    return w;
}

inline double integrate(const ScalarField& f, const NodeMask& mask) {
    require(mask.compatible(f.grid()), "integrate: mask does not match the field's grid");
    const auto w = quadrature_weights(f.grid(), mask);
    double s = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n)
        if (w[n] != 0.0) s += w[n] * f[n];
    return s;
}

inline double integrate(const ScalarField& f) { return integrate(f, NodeMask::full(f.grid())); }

/// Measure of the region the masked quadrature integrates over.
inline double mask_measure(const Grid& g, const NodeMask& mask) {
    const auto w = quadrature_weights(g, mask);
    double s = 0.0;
    for (double x : w) s += x;
    return s;
}

struct Norms {
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    bool empty = false;
};

inline Norms norms(const ScalarField& f, const NodeMask& mask) {
    require(mask.compatible(f.grid()), "norms: mask does not match the field's grid");
    Norms out;
    if (mask.empty()) {
        out.empty = true;
        return out;
    }
    const auto w = quadrature_weights(f.grid(), mask);
    double l1 = 0.0, l2 = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
        if (!mask[n]) continue;
        const double a = std::abs(f[n]);
        l1 += w[n] * a;
        l2 += w[n] * a * a;
        out.linf = std::max(out.linf, a);
    }
    out.l1 = l1;
    out.l2 = std::sqrt(l2);
    return out;
}

inline Norms norms(const ScalarField& f) { return norms(f, NodeMask::full(f.grid())); }

struct TracePoint {
    std::size_t node = 0;
    double value = 0.0;
};

using BoundaryTrace = std::vector<TracePoint>;

/// Boundary nodes in counter-clockwise order starting at the (x0, y0) corner.
/// For an interval: the two endpoints.
inline std::vector<std::size_t> boundary_nodes(const Grid& g) {
    std::vector<std::size_t> nodes;
    if (g.is_1d()) return {0, g.nx() - 1};
    const std::size_t nx = g.nx(), ny = g.ny();
    nodes.reserve(2 * (nx + ny) - 4);
    for (std::size_t i = 0; i < nx; ++i) nodes.push_back(g.index(i, 0));
    for (std::size_t j = 1; j < ny; ++j) nodes.push_back(g.index(nx - 1, j));
    for (std::size_t i = nx - 1; i-- > 0;) nodes.push_back(g.index(i, ny - 1));
    for (std::size_t j = ny - 1; j-- > 1;) nodes.push_back(g.index(0, j));
    return nodes;
}

inline BoundaryTrace boundary_trace(const ScalarField& f) {
    BoundaryTrace t;
    for (std::size_t n : boundary_nodes(f.grid())) t.push_back({n, f[n]});
    return t;
}

inline double trace_linf(const BoundaryTrace& t) {
    double m = 0.0;
    for (const auto& p : t) m = std::max(m, std::abs(p.value));
    return m;
}

/// ∫ (u^2 + |∇u|^2) with central differences inside and second-order one-sided
/// differences on the boundary.
inline double energy(const ScalarField& u) {
    const Grid& g = u.grid();
    const double h = g.h();
    auto central = [h](double fm, double fp) { return (fp - fm) / (2.0 * h); };
    auto forward = [h](double f0, double f1, double f2) { return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h); };
    auto backward = [h](double f0, double f1, double f2) { return (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * h); };

    auto deriv = [&](std::size_t k, std::size_t count, auto at) {
        if (k == 0) return forward(at(0), at(1), at(2));
        if (k == count - 1) return backward(at(count - 1), at(count - 2), at(count - 3));
        return central(at(k - 1), at(k + 1));
    };

    std::vector<double> density(g.size());
    for (std::size_t n = 0; n < g.size(); ++n) {
        const std::size_t i = g.col(n), j = g.row(n);
        const double ux = deriv(i, g.nx(), [&](std::size_t k) { return u[g.index(k, j)]; });
        double uy = 0.0;
        if (!g.is_1d()) uy = deriv(j, g.ny(), [&](std::size_t k) { return u[g.index(i, k)]; });
        density[n] = u[n] * u[n] + ux * ux + uy * uy;
    }
    return integrate(ScalarField(g, std::move(density)));
}

} // namespace qstab
