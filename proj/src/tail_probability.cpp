#include "latecount/tail_probability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "latecount/csv.hpp"
#include "latecount/errors.hpp"

namespace latecount::tail {

namespace {

constexpr double kLn10 = 2.302585092994045684;
constexpr double kLnSqrt2Pi = 0.918938533204672742;  // ln sqrt(2*pi)
constexpr double kAsymptoticCut = 8.0;

// ln of the upper normal tail, natural log.
double ln_normal_tail(double z) {
    if (std::isinf(z)) {
        return z > 0 ? -std::numeric_limits<double>::infinity() : 0.0;
    }
    if (z <= kAsymptoticCut) {
        return std::log(0.5 * std::erfc(z / std::sqrt(2.0)));
    }
    // Mills-ratio expansion: Q(z) = phi(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6).
    const double z2 = z * z;
    const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - kLnSqrt2Pi - std::log(z) + std::log(series);
}

}  // namespace

double LogProb::probability() const {
    return std::pow(10.0, log10_value);
}

std::string LogProb::to_string() const {
    if (std::isinf(log10_value)) return "0";
    if (log10_value == 0.0) return "1";
    return "1e" + csv::format_double(log10_value);
}

LogProb log10_normal_tail(double z) {
    LogProb lp;
    lp.used_asymptotic = std::isfinite(z) && z > kAsymptoticCut;
    lp.log10_value = ln_normal_tail(z) / kLn10;
    if (lp.log10_value > 0.0) lp.log10_value = 0.0;  // clamp rounding noise
    return lp;
}

LogProb fair_win_probability(std::int64_t v_H, std::int64_t v_N) {
    if (v_H < 0 || v_N < 0) throw DataError("vote counts must be nonnegative");
    const double v = static_cast<double>(v_H + v_N);
    if (v <= 0.0) throw DataError("fair_win_probability: v_H + v_N must be positive");
    const double p = static_cast<double>(v_H) / v;
    const double q = static_cast<double>(v_N) / v;
    return fair_win_probability_shares(p, q, v);
}

LogProb fair_win_probability_shares(double share_H, double share_N, double v) {
    if (v <= 0.0) throw DataError("fair_win_probability: v must be positive");
    const double p = share_H;
    const double q = share_N;
    const double var = (p * (1.0 - p) + q * (1.0 - q)) / v;
    if (var <= 0.0) {
        // Both estimators degenerate; the outcome is already decided.
        LogProb lp;
        lp.log10_value = (q > p) ? -std::numeric_limits<double>::infinity()
                                 : 0.0;
        return lp;
    }
    const double z = (q - p) / std::sqrt(var);
    return log10_normal_tail(z);
}

LogProb fair_win_log10_quadrature(double share_H, double share_N, double v,
                                  int grid_points) {
    if (v <= 0.0) throw DataError("quadrature: v must be positive");
    if (grid_points < 51) throw ConfigError("quadrature grid too small");
    const double p = share_H;
    const double q = share_N;
    const double sigma_p = std::sqrt(std::max(p * (1.0 - p), 0.0) / v);
    const double sigma_q = std::sqrt(std::max(q * (1.0 - q), 0.0) / v);
    if (sigma_q == 0.0 || sigma_p == 0.0) {
        // One estimator is a point mass; the integral collapses to a tail.
        const double s = std::max(sigma_p, sigma_q);
        LogProb lp;
        if (s == 0.0) {
            lp.log10_value = (q > p) ? -std::numeric_limits<double>::infinity() : 0.0;
            return lp;
        }
        return log10_normal_tail((q - p) / s);
    }

    // Log-integrand of  ∫ Q((t-p)/sigma_p) * phi((t-q)/sigma_q)/sigma_q dt.
    const auto log_integrand = [&](double t) {
        const double y = (t - p) / sigma_p;
        const double z = (t - q) / sigma_q;
        return ln_normal_tail(y) - 0.5 * z * z - kLnSqrt2Pi - std::log(sigma_q);
    };

    // The log-integrand is concave; golden-section search finds its peak.
    const double spread = sigma_p + sigma_q;
    double lo = std::min(p, q) - 60.0 * spread;
    double hi = std::max(p, q) + 60.0 * spread;
    const double phi_ratio = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - phi_ratio * (b - a);
    double x2 = a + phi_ratio * (b - a);
    double f1 = log_integrand(x1), f2 = log_integrand(x2);
    for (int i = 0; i < 300 && (b - a) > 1e-14 * spread; ++i) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + phi_ratio * (b - a);
            f2 = log_integrand(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - phi_ratio * (b - a);
            f1 = log_integrand(x1);
        }
    }
    const double t_star = 0.5 * (a + b);

    // Laplace width from the numeric second derivative at the peak.
    const double dh = 1e-3 * spread;
    const double curv = (log_integrand(t_star + dh) - 2.0 * log_integrand(t_star) +
                         log_integrand(t_star - dh)) / (dh * dh);
    double width = (std::isfinite(curv) && curv < 0.0)
                       ? 1.0 / std::sqrt(-curv)
                       : std::min(sigma_p, sigma_q);
    width = std::min(width, 4.0 * spread);

    const double left = t_star - 14.0 * width;
    const double right = t_star + 14.0 * width;
    const double step = (right - left) / (grid_points - 1);
    std::vector<double> values(grid_points);
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_points; ++i) {
        values[i] = log_integrand(left + step * i);
        peak = std::max(peak, values[i]);
    }
    if (!std::isfinite(peak)) {
        LogProb lp;
        lp.log10_value = -std::numeric_limits<double>::infinity();
        return lp;
    }
    double sum = 0.0;
    for (int i = 0; i < grid_points; ++i) {
        const double w = (i == 0 || i == grid_points - 1) ? 0.5 : 1.0;
        sum += w * std::exp(values[i] - peak);
    }
    LogProb lp;
    lp.log10_value = (peak + std::log(sum * step)) / kLn10;
    if (lp.log10_value > 0.0) lp.log10_value = 0.0;
    lp.used_asymptotic = true;
    return lp;
}

}  // namespace latecount::tail
