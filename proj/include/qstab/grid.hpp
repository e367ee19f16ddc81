#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qstab/errors.hpp"

namespace qstab {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Uniform tensor grid over an axis-aligned rectangle [x0, x0+lx] x [y0, y0+ly].
/// ny == 1 means a 1D interval [x0, x0+lx]; ly is then ignored and stored as 0.
/// Nodes are stored row-major: index = j * nx + i.
class Grid {
public:
    Grid(std::size_t nx, std::size_t ny, double lx, double ly, double x0 = 0.0, double y0 = 0.0)
        : nx_(nx), ny_(ny), lx_(lx), ly_(ny == 1 ? 0.0 : ly), x0_(x0), y0_(ny == 1 ? 0.0 : y0) {
        require(nx_ >= 3, "Grid: nx must be >= 3");
        require(std::isfinite(lx_) && lx_ > 0.0, "Grid: lx must be positive");
        require(std::isfinite(x0_) && std::isfinite(y0_), "Grid: origin must be finite");
        h_ = lx_ / static_cast<double>(nx_ - 1);
        if (ny_ != 1) {
            require(ny_ >= 3, "Grid: ny must be 1 (interval) or >= 3");
            require(std::isfinite(ly_) && ly_ > 0.0, "Grid: ly must be positive");
            const double hy = ly_ / static_cast<double>(ny_ - 1);
            require(std::abs(h_ - hy) <= 1e-12 * h_, "Grid: spacing must be equal along both axes");
        }
    }

    static Grid interval(std::size_t nx, double length, double x0 = 0.0) {
        return Grid(nx, 1, length, 0.0, x0, 0.0);
    }

    /// Square [0,side]^2 with the given spacing; side/h must be (close to) an integer.
    static Grid square(double side, double h) {
        const auto cells = static_cast<std::size_t>(std::llround(side / h));
        return Grid(cells + 1, cells + 1, side, side);
    }

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    double lx() const { return lx_; }
    double ly() const { return ly_; }
    double x0() const { return x0_; }
    double y0() const { return y0_; }
    double h() const { return h_; }
    bool is_1d() const { return ny_ == 1; }
    int dim() const { return is_1d() ? 1 : 2; }
    std::size_t size() const { return nx_ * ny_; }

    std::size_t index(std::size_t i, std::size_t j) const { return j * nx_ + i; }
    std::size_t col(std::size_t node) const { return node % nx_; }
    std::size_t row(std::size_t node) const { return node / nx_; }

    double x(std::size_t i) const { return i == nx_ - 1 ? x0_ + lx_ : x0_ + static_cast<double>(i) * h_; }
    double y(std::size_t j) const {
        if (is_1d()) return 0.0;
        return j == ny_ - 1 ? y0_ + ly_ : y0_ + static_cast<double>(j) * h_;
    }
    Point point(std::size_t node) const { return {x(col(node)), y(row(node))}; }

    bool on_boundary(std::size_t node) const {
        const std::size_t i = col(node);
        if (i == 0 || i == nx_ - 1) return true;
        if (is_1d()) return false;
        const std::size_t j = row(node);
        return j == 0 || j == ny_ - 1;
    }

    /// Distance of a node to the rectangle boundary, computed in index space.
    double boundary_distance(std::size_t node) const {
        const std::size_t i = col(node);
        std::size_t steps = std::min(i, nx_ - 1 - i);
        if (!is_1d()) {
            const std::size_t j = row(node);
            steps = std::min({steps, j, ny_ - 1 - j});
        }
        return static_cast<double>(steps) * h_;
    }

    double inradius() const { return is_1d() ? 0.5 * lx_ : 0.5 * std::min(lx_, ly_); }
    double measure() const { return is_1d() ? lx_ : lx_ * ly_; }

    bool same_shape(const Grid& other) const {
        return nx_ == other.nx_ && ny_ == other.ny_ && lx_ == other.lx_ && ly_ == other.ly_ &&
               x0_ == other.x0_ && y0_ == other.y0_;
    }

    friend bool operator==(const Grid& a, const Grid& b) { return a.same_shape(b); }

private:
    std::size_t nx_;
    std::size_t ny_;
    double lx_;
    double ly_;
    double x0_;
    double y0_;
    double h_ = 0.0;
};

/// Rectangle (or interval) together with its Lipschitz-class constants.
/// The chart function is not represented; only the constants are stored and validated.
struct DomainSpec {
    double lx = 1.0;
    double ly = 1.0;  // 0 for an interval
    double rho = 0.5;
    double m_lip = 1.0;

    DomainSpec(double lx_, double ly_, double rho_, double m_lip_) : lx(lx_), ly(ly_), rho(rho_), m_lip(m_lip_) {
        require(lx > 0.0 && ly >= 0.0, "DomainSpec: side lengths must be positive");
        require(m_lip >= 1.0, "DomainSpec: M must be >= 1 for a rectangle");
        const double min_side = ly > 0.0 ? std::min(lx, ly) : lx;
        require(rho > 0.0 && rho <= 0.5 * min_side, "DomainSpec: rho must lie in (0, min side / 2]");
    }

    static DomainSpec for_grid(const Grid& g) {
        const double min_side = g.is_1d() ? g.lx() : std::min(g.lx(), g.ly());
        return DomainSpec(g.lx(), g.ly(), 0.5 * min_side, 1.0);
    }

    double measure() const { return ly > 0.0 ? lx * ly : lx; }
};

/// A-priori constants: K^-1 <= q <= K, energy bound E, nondegeneracy H, interior margin d.
struct PriorBounds {
    double k_bound = 4.0;
    double e_bound = 2.0;
    double h_bound = 1.0;
    double d_margin = 0.1;

    PriorBounds() = default;
    PriorBounds(double k, double e, double h, double d) : k_bound(k), e_bound(e), h_bound(h), d_margin(d) {
        validate();
    }

    void validate() const {
        require(k_bound >= 1.0, "PriorBounds: K must be >= 1");
        require(e_bound > 0.0 && h_bound > 0.0 && d_margin > 0.0, "PriorBounds: E, H, d must be positive");
        require(h_bound <= e_bound * std::sqrt(k_bound) * (1.0 + 1e-12), "PriorBounds: H must not exceed E*sqrt(K)");
    }

    double q_min() const { return 1.0 / k_bound; }
    double q_max() const { return k_bound; }
};

/// Nodal values of a real function on a Grid. Immutable once constructed.
class ScalarField {
public:
    ScalarField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
        require(values_.size() == grid_.size(), "ScalarField: value count does not match grid");
        for (double v : values_) require(std::isfinite(v), "ScalarField: non-finite value");
    }

    static ScalarField constant(const Grid& grid, double c) { return ScalarField(grid, std::vector<double>(grid.size(), c)); }

    template <class Fn>
    static ScalarField sample(const Grid& grid, Fn&& fn) {
        std::vector<double> v(grid.size());
        for (std::size_t n = 0; n < v.size(); ++n) {
            const Point p = grid.point(n);
            v[n] = fn(p.x, p.y);
        }
        return ScalarField(grid, std::move(v));
    }

    const Grid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t node) const { return values_[node]; }
    std::size_t size() const { return values_.size(); }

    template <class Fn>
    ScalarField map(Fn&& fn) const {
        std::vector<double> v(values_.size());
        std::transform(values_.begin(), values_.end(), v.begin(), fn);
        return ScalarField(grid_, std::move(v));
    }

    double max() const { return *std::max_element(values_.begin(), values_.end()); }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double abs_max() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

inline void require_same_grid(const ScalarField& a, const ScalarField& b, const char* what) {
    require(a.grid() == b.grid(), std::string(what) + ": fields live on different grids");
}

/// Nodewise combination of two fields on the same grid.
template <class Fn>
ScalarField zip(const ScalarField& a, const ScalarField& b, Fn&& fn) {
    require_same_grid(a, b, "zip");
    std::vector<double> v(a.size());
    for (std::size_t n = 0; n < v.size(); ++n) v[n] = fn(a[n], b[n]);
    return ScalarField(a.grid(), std::move(v));
}

inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    return zip(a, b, [](double x, double y) { return x - y; });
}
inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    return zip(a, b, [](double x, double y) { return x + y; });
}
inline ScalarField operator*(double s, const ScalarField& a) {
    return a.map([s](double x) { return s * x; });
}

/// Node selection on a grid. Node n is selected iff on[n] != 0.
struct NodeMask {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<std::uint8_t> on;

    static NodeMask full(const Grid& g) { return {g.nx(), g.ny(), std::vector<std::uint8_t>(g.size(), 1)}; }
    static NodeMask none(const Grid& g) { return {g.nx(), g.ny(), std::vector<std::uint8_t>(g.size(), 0)}; }

    bool compatible(const Grid& g) const { return nx == g.nx() && ny == g.ny() && on.size() == g.size(); }
    bool operator[](std::size_t n) const { return on[n] != 0; }
    std::size_t count() const { return static_cast<std::size_t>(std::count(on.begin(), on.end(), std::uint8_t{1})); }
    bool empty() const { return count() == 0; }

    friend NodeMask operator&(const NodeMask& a, const NodeMask& b) {
        require(a.nx == b.nx && a.ny == b.ny, "NodeMask: shape mismatch");
        NodeMask m{a.nx, a.ny, std::vector<std::uint8_t>(a.on.size(), 0)};
        for (std::size_t n = 0; n < m.on.size(); ++n) m.on[n] = (a.on[n] && b.on[n]) ? 1 : 0;
        return m;
    }
};

/// Omega_d: nodes whose distance to the boundary exceeds d. Too large a d yields an empty mask.
inline NodeMask interior_mask(const Grid& g, double d) {
    require(std::isfinite(d) && d >= 0.0, "interior_mask: d must be >= 0");
    NodeMask m = NodeMask::none(g);
    const double cut = d + 1e-12 * g.h();
    for (std::size_t n = 0; n < g.size(); ++n) m.on[n] = g.boundary_distance(n) > cut ? 1 : 0;
    return m;
}

/// B_r(c) as the set of nodes whose centers lie strictly inside the ball.
inline NodeMask ball_mask(const Grid& g, Point c, double r) {
    require(r > 0.0, "ball_mask: radius must be positive");
    NodeMask m = NodeMask::none(g);
    const double r2 = r * r;
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Point p = g.point(n);
        const double dx = p.x - c.x;
        const double dy = g.is_1d() ? 0.0 : p.y - c.y;
        m.on[n] = dx * dx + dy * dy < r2 ? 1 : 0;
    }
    return m;
}

/// Nodes where the predicate holds.
template <class Pred>
NodeMask mask_where(const ScalarField& f, Pred&& pred) {
    const Grid& g = f.grid();
    NodeMask m = NodeMask::none(g);
    for (std::size_t n = 0; n < g.size(); ++n) m.on[n] = pred(f[n]) ? 1 : 0;
    return m;
}

} // namespace qstab
