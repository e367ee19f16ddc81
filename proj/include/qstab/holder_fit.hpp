#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

namespace qstab {

struct StabilitySample {
    double epsilon = 0.0;
    double error = 0.0;
};

enum class FitStatus {
    ok,
    underdetermined,   // fewer than 3 usable points; a 2-point fit is still returned (exact line)
    no_fit,            // fewer than 2 usable points or all abscissae equal
};

inline const char* to_string(FitStatus s) {
    switch (s) {
        case FitStatus::ok: return "ok";
        case FitStatus::underdetermined: return "underdetermined";
        case FitStatus::no_fit: return "no_fit";
    }
    return "?";
}

/// Least-squares fit of log(err) = log C + η log(ε^{1/2} + ε).
struct HolderFit {
    FitStatus status = FitStatus::no_fit;
    double c_hat = 0.0;
    double eta_hat = 0.0;
    double residual = 0.0;          // RMS of the log residuals
    double eta_stderr = std::numeric_limits<double>::quiet_NaN();
    double eta_ci_low = std::numeric_limits<double>::quiet_NaN();
    double eta_ci_high = std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    std::size_t excluded_zero = 0;  // samples dropped because ε = 0 or err = 0

    bool has_line() const { return status != FitStatus::no_fit; }
    double predict(double epsilon) const { return c_hat * std::pow(holder_variable(epsilon), eta_hat); }
    /// Fitted curve scaled by exp(sigmas · residual).
    double envelope(double epsilon, double sigmas = 3.0) const { return predict(epsilon) * std::exp(sigmas * residual); }

    static double holder_variable(double epsilon) { return std::sqrt(epsilon) + epsilon; }
};

inline HolderFit fit_holder(const std::vector<StabilitySample>& samples, double confidence = 0.95) {
    HolderFit fit;
    std::vector<double> xs, ys;
    for (const auto& s : samples) {
        if (!(s.epsilon > 0.0) || !(s.error > 0.0) || !std::isfinite(s.epsilon) || !std::isfinite(s.error)) {
            ++fit.excluded_zero;
            continue;
        }
        xs.push_back(std::log(HolderFit::holder_variable(s.epsilon)));
        ys.push_back(std::log(s.error));
    }
    const auto n = static_cast<Eigen::Index>(xs.size());
    fit.used = xs.size();
    bool distinct = false;
    for (std::size_t i = 1; i < xs.size(); ++i) distinct = distinct || xs[i] != xs[0];
    if (n < 2 || !distinct) return fit;

    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = xs[static_cast<std::size_t>(i)];
        rhs[i] = ys[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(rhs);
    fit.c_hat = std::exp(beta[0]);
    fit.eta_hat = beta[1];
    const Eigen::VectorXd res = rhs - design * beta;
    fit.residual = std::sqrt(res.squaredNorm() / static_cast<double>(n));
    if (n < 3) {
        fit.status = FitStatus::underdetermined;
        return fit;
    }
    fit.status = FitStatus::ok;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double sxx = 0.0;
    for (double x : xs) sxx += (x - mean) * (x - mean);
    const double s2 = res.squaredNorm() / static_cast<double>(n - 2);
    fit.eta_stderr = std::sqrt(s2 / sxx);
    const boost::math::students_t dist(static_cast<double>(n - 2));
    const double t = boost::math::quantile(boost::math::complement(dist, 0.5 * (1.0 - confidence)));
    fit.eta_ci_low = fit.eta_hat - t * fit.eta_stderr;
    fit.eta_ci_high = fit.eta_hat + t * fit.eta_stderr;
    return fit;
}

} // namespace qstab
