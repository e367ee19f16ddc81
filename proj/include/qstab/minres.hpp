#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Sparse>

namespace qstab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct MinresResult {
    Vector x;
    int iterations = 0;
    bool converged = false;
    /// Recurrence estimate of ||b - A x||_2 after each iteration (index 0 = initial).
    std::vector<double> residual_history{};
};

/// Minimum-residual iteration (Paige & Saunders) for symmetric, possibly indefinite A.
/// Stops once the estimated 2-norm residual drops to abs_tol; the estimate is
/// non-increasing by construction.
inline MinresResult minres(const SparseMatrix& a, const Vector& b, const Vector& x0, double abs_tol, int max_iter) {
    MinresResult out;
    out.x = x0;
    Vector r1 = b - a * x0;
    double beta1 = r1.norm();
    out.residual_history.push_back(beta1);
    if (beta1 <= abs_tol) {
        out.converged = true;
        return out;
    }

    const double eps = std::numeric_limits<double>::epsilon();
    const Eigen::Index n = b.size();
    Vector y = r1, r2 = r1, v(n), w = Vector::Zero(n), w1(n), w2 = Vector::Zero(n);
    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
    double cs = -1.0, sn = 0.0;

    for (int itn = 1; itn <= max_iter; ++itn) {
        v = y / beta;
        y = a * v;
        if (itn >= 2) y -= (beta / oldb) * r1;
        const double alfa = v.dot(y);
        y -= (alfa / beta) * r2;
        r1.swap(r2);
        r2 = y;
        oldb = beta;
        beta = r2.norm();

        const double oldeps = epsln;
        const double delta = cs * dbar + sn * alfa;
        const double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        const double gamma = std::max(std::hypot(gbar, beta), eps);
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;

        w1.swap(w2);
        w2.swap(w);
        w = (v - oldeps * w1 - delta * w2) / gamma;
        out.x += phi * w;

        out.iterations = itn;
        out.residual_history.push_back(std::abs(phibar));
        if (std::abs(phibar) <= abs_tol) {
            out.converged = true;
            break;
        }
        // Krylov space exhausted: x is the exact minimiser over the whole space.
        if (beta <= eps * beta1) break;
    }
    return out;
}

} // namespace qstab
