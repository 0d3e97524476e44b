#pragma once

#include <cstdint>
#include <string>

namespace latecount::tail {

// A probability carried as log10, so values like 10^-1770 stay exact-ish
// far below double underflow. Exponentiate only on demand.
struct LogProb {
    double log10_value = 0.0;     // <= 0; -inf means probability zero
    bool used_asymptotic = false; // tail evaluated via the asymptotic series

    double probability() const;   // 10^log10_value (may underflow to 0)
    std::string to_string() const;  // "1e-1770.31" style, or "0" / "1"
};

// log10 of the upper tail 1 - Phi(z) of the unit normal. Below z = 8 this
// goes through erfc; above, through the asymptotic expansion
// phi(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6), whose relative error in log10
// is under 1e-6 there.
LogProb log10_normal_tail(double z);

// Probability that the incumbent's final two-candidate share exceeds the
// challenger's, given half-time counts and treating both shares as
// binomial-sampling estimators with normal approximations:
//
//   p = v_H / v,  q = v_N / v,  v = v_H + v_N
//   p_hat ~ N(p, p(1-p)/v),  q_hat ~ N(q, q(1-q)/v)  independent
//   P{fair win} = P{p_hat - q_hat > 0} = 1 - Phi((q - p) / sigma),
//   sigma^2 = (p(1-p) + q(1-q)) / v.
LogProb fair_win_probability(std::int64_t v_H, std::int64_t v_N);

// Same closed form for externally supplied shares (which need not sum
// to 1) and an explicit sample size v.
LogProb fair_win_probability_shares(double share_H, double share_N, double v);

// Validation path: the defining integral  ∫ (1 - Phi_Y) dPhi_Z  evaluated
// by a log-space trapezoid over a grid centered on the integrand's peak
// (located by a Laplace analysis). Agrees with the closed form within
// 0.1% in log10 across the supported range.
LogProb fair_win_log10_quadrature(double share_H, double share_N, double v,
                                  int grid_points = 4001);

}  // namespace latecount::tail
