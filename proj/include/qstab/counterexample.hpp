#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qstab/errors.hpp"
#include "qstab/grid.hpp"

namespace qstab {

/// The 1D oscillatory family on (-R, R):
///   q_m = A_m on |x| < r, 1 on r <= |x| <= R,   A_m = (π/2 + 2mπ)^2 / r^2
///   u_m = cos(√A_m x)/√A_m on |x| < r,  -sin(|x| - r) on r <= |x| <= R
/// Each u_m solves u'' + q_m u = 0, and q_m u_m^2 stays O(1) while q_m blows up with m.
class OscillatoryFamily {
public:
    OscillatoryFamily(double r, double rr, int m) : r_(r), rr_(rr), m_(m) {
        require(r > 0.0 && r < rr, "OscillatoryFamily: need 0 < r < R");
        require(m >= 1, "OscillatoryFamily: m must be >= 1");
        a_m_ = amplitude(r, m);
        sqrt_a_ = std::sqrt(a_m_);
    }

    static double amplitude(double r, int m) {
        const double phase = M_PI / 2.0 + 2.0 * M_PI * static_cast<double>(m);
        return phase * phase / (r * r);
    }

    double r() const { return r_; }
    double rr() const { return rr_; }
    int m() const { return m_; }
    double a_m() const { return a_m_; }
    double frequency() const { return sqrt_a_; }

    double q(double x) const {
        check(x);
        return std::abs(x) < r_ ? a_m_ : 1.0;
    }
    double u(double x) const {
        check(x);
        return std::abs(x) < r_ ? std::cos(sqrt_a_ * x) / sqrt_a_ : -std::sin(std::abs(x) - r_);
    }
    /// u' by branch; at |x| = r the outer formula is used.
    double du(double x) const {
        check(x);
        if (std::abs(x) < r_) return -std::sin(sqrt_a_ * x);
        const double s = x < 0.0 ? -1.0 : 1.0;
        return -s * std::cos(std::abs(x) - r_);
    }
    double inner_u(double x) const { return std::cos(sqrt_a_ * x) / sqrt_a_; }
    double inner_du(double x) const { return -std::sin(sqrt_a_ * x); }

    /// q_m u_m^2, evaluated without forming A_m · (1/A_m).
    double data(double x) const {
        check(x);
        if (std::abs(x) < r_) {
            const double c = std::cos(sqrt_a_ * x);
            return c * c;
        }
        const double s = std::sin(std::abs(x) - r_);
        return s * s;
    }

private:
    void check(double x) const {
        if (!(std::abs(x) <= rr_ * (1.0 + 1e-15))) throw ContractViolation("OscillatoryFamily: |x| exceeds R");
    }

    double r_, rr_;
    int m_;
    double a_m_ = 0.0, sqrt_a_ = 0.0;
};

/// ∫_{-R}^{R} q_m u_m^2 = r + (R - r) - sin(2(R - r))/2, independent of m.
inline double family_mass(double r, double rr) {
    const double s = rr - r;
    return r + s - 0.5 * std::sin(2.0 * s);
}

struct PathologyRow {
    int m = 0;
    double a_m = 0.0;
    double data_gap = 0.0;                // sup |q_2m u_2m^2 - q_m u_m^2| on the sample grid
    std::vector<double> coef_gap;         // ||q_2m - q_m||_p for each requested p
    double coef_gap_p1 = 0.0;
    double coef_gap_pinf = 0.0;
    double h_integral = 0.0;              // ∫ q_m u_m^2
    double k_required = 0.0;              // smallest K with K^-1 <= q_m <= K
    std::size_t samples = 0;
};

/// Closed-form ||q_2m - q_m||_p on (-R, R): the difference is A_2m - A_m on |x| < r and 0 elsewhere.
inline double coef_gap(double r, int m, double p) {
    const double diff = OscillatoryFamily::amplitude(r, 2 * m) - OscillatoryFamily::amplitude(r, m);
    if (std::isinf(p)) return diff;
    require(p >= 1.0, "coef_gap: p must be >= 1");
    return diff * std::pow(2.0 * r, 1.0 / p);
}

/// Number of uniform samples on [-R, R] with at least `per_period` points per period of u_2m.
inline std::size_t sample_count(double r, double rr, int m, std::size_t per_period = 40) {
    const double period = 2.0 * M_PI / std::sqrt(OscillatoryFamily::amplitude(r, 2 * m));
    const double cells = std::ceil(2.0 * rr / period * static_cast<double>(per_period));
    return static_cast<std::size_t>(cells) + 1;
}

inline std::vector<PathologyRow> pathology_table(double r, double rr, int m_max, const std::vector<double>& p_list,
                                                 std::size_t per_period = 40) {
    require(m_max >= 1, "pathology_table: m_max must be >= 1");
    require(per_period >= 40, "pathology_table: at least 40 samples per period");
    std::vector<PathologyRow> rows;
    for (int m = 1; m <= m_max; ++m) {
        const OscillatoryFamily lo(r, rr, m), hi(r, rr, 2 * m);
        PathologyRow row;
        row.m = m;
        row.a_m = lo.a_m();
        const std::size_t n = sample_count(r, rr, m, per_period);
        row.samples = n;
        for (std::size_t k = 0; k < n; ++k) {
            const double x = k + 1 == n ? rr : -rr + 2.0 * rr * static_cast<double>(k) / static_cast<double>(n - 1);
            row.data_gap = std::max(row.data_gap, std::abs(hi.data(x) - lo.data(x)));
        }
        for (double p : p_list) row.coef_gap.push_back(coef_gap(r, m, p));
        row.coef_gap_p1 = coef_gap(r, m, 1.0);
        row.coef_gap_pinf = coef_gap(r, m, std::numeric_limits<double>::infinity());
        row.h_integral = family_mass(r, rr);
        row.k_required = std::max(lo.a_m(), 1.0);
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Fit coef_gap_{m,1} = c m^2 + b m by least squares; c > 0 witnesses quadratic growth.
struct QuadraticGrowthFit {
    double c = 0.0;
    double b = 0.0;
};

inline QuadraticGrowthFit fit_quadratic_growth(const std::vector<PathologyRow>& rows) {
    require(rows.size() >= 2, "fit_quadratic_growth: need at least two rows");
    double s44 = 0.0, s43 = 0.0, s22 = 0.0, y2 = 0.0, y1 = 0.0;
    for (const auto& row : rows) {
        const double m = row.m;
        s44 += m * m * m * m;
        s43 += m * m * m;
        s22 += m * m;
        y2 += row.coef_gap_p1 * m * m;
        y1 += row.coef_gap_p1 * m;
    }
    const double det = s44 * s22 - s43 * s43;
    return {(y2 * s22 - y1 * s43) / det, (s44 * y1 - s43 * y2) / det};
}

struct ResidualCheck {
    double max_residual = 0.0;
    double inner_max = 0.0;
    double outer_max = 0.0;
    std::size_t nodes = 0;
};

/// max |D_h^2 u_m + q_m u_m| over the nodes x = k h in (-R, R), skipping nodes whose
/// three-point stencil straddles a matching point ±r (which includes ±r themselves).
inline ResidualCheck residual_check(const OscillatoryFamily& fam, double h) {
    require(h > 0.0 && h < fam.rr(), "residual_check: need 0 < h < R");
    ResidualCheck out;
    const auto kmax = static_cast<long>(std::floor((fam.rr() - h) / h + 1e-9));
    for (long k = -kmax; k <= kmax; ++k) {
        const double x = static_cast<double>(k) * h;
        if (std::abs(std::abs(x) - fam.r()) < h * (1.0 - 1e-9)) continue;
        const double d2 = (fam.u(x + h) - 2.0 * fam.u(x) + fam.u(x - h)) / (h * h);
        const double res = std::abs(d2 + fam.q(x) * fam.u(x));
        if (std::abs(x) < fam.r())
            out.inner_max = std::max(out.inner_max, res);
        else
            out.outer_max = std::max(out.outer_max, res);
        ++out.nodes;
    }
    out.max_residual = std::max(out.inner_max, out.outer_max);
    return out;
}

/// u_m sampled on a 1D grid over [-R, R]; the shared x grid has nx nodes.
inline std::pair<ScalarField, ScalarField> family_on_grid(const OscillatoryFamily& fam, std::size_t nx) {
    const Grid g = Grid::interval(nx, 2.0 * fam.rr(), -fam.rr());
    return {ScalarField::sample(g, [&](double x, double) { return fam.q(std::clamp(x, -fam.rr(), fam.rr())); }),
            ScalarField::sample(g, [&](double x, double) { return fam.u(std::clamp(x, -fam.rr(), fam.rr())); })};
}

} // namespace qstab
