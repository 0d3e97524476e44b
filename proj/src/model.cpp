#include "latecount/model.hpp"

#include <algorithm>
#include <cmath>

#include "latecount/errors.hpp"

namespace latecount::model {

std::string form_name(Form form) {
    switch (form) {
        case Form::Linear: return "linear";
        case Form::Logarithmic: return "log";
        case Form::PowerLaw: return "power";
        case Form::Exp1: return "exp1";
        case Form::Exp2: return "exp2";
    }
    return "?";
}

std::optional<Form> parse_form(const std::string& name) {
    if (name == "linear") return Form::Linear;
    if (name == "log" || name == "logarithmic") return Form::Logarithmic;
    if (name == "power" || name == "powerlaw") return Form::PowerLaw;
    if (name == "exp1") return Form::Exp1;
    if (name == "exp2") return Form::Exp2;
    return std::nullopt;
}

FormEval::FormEval(const ModelSpec& spec, double x_max)
    : form_(spec.form), x_max_(x_max), c_(spec.c), eps_(spec.epsilon) {
    if (c_ <= 0.0 || c_ >= 1.0) {
        throw ConfigError("model c must lie in (0, 1)");
    }
    if (x_max_ <= 0.0) {
        // No geography to act on: h vanishes, every vote is counted.
        form_ = Form::Linear;
        slope_ = 0.0;
        g_slope_ = 0.0;
        return;
    }
    const double s = x_max_;
    switch (form_) {
        case Form::Linear:
            slope_ = spec.slope;
            if (spec.g_vanishes_at_xmax) {
                g_slope_ = 1.0 / s;
            } else {
                g_slope_ = spec.g_slope;
                if (g_slope_ < 0.0 || g_slope_ * s > 1.0 + 1e-12) {
                    throw ConfigError("linear g slope must keep g within [0,1]");
                }
            }
            return;
        case Form::Exp1:
        case Form::Exp2: {
            rate_h_ = spec.rate_h;
            rate_g_ = (form_ == Form::Exp1) ? spec.rate_h : spec.rate_g;
            if (rate_h_ <= 0.0 || rate_g_ <= 0.0) {
                throw ConfigError("exponential rates must be positive");
            }
            // Core e^{(x-s)/r} stays in (0, 1]; its exact mean over [0, s]
            // is (r/s)(1 - e^{-s/r}).
            const double tail = std::exp(-s / rate_h_);
            core_mean_ = rate_h_ / s * (1.0 - tail);
            core_span_ = std::max(core_mean_ - tail, 1.0 - core_mean_);
            g_tail_ = std::exp(-s / rate_g_);
            g_norm_ = 1.0 - g_tail_;
            break;
        }
        case Form::Logarithmic: {
            scale_ = spec.scale;
            if (scale_ <= 0.0) {
                throw ConfigError("logarithmic scale must be positive");
            }
            const double top = std::log1p(s / scale_);
            core_mean_ = ((scale_ + s) * top - s) / s;
            core_span_ = std::max(core_mean_, top - core_mean_);
            break;
        }
        case Form::PowerLaw: {
            exponent_ = spec.exponent;
            if (exponent_ <= 0.0) {
                throw ConfigError("power-law exponent must be positive");
            }
            core_mean_ = 1.0 / (exponent_ + 1.0);
            core_span_ = std::max(core_mean_, 1.0 - core_mean_);
            break;
        }
    }
    amp_ = std::min(c_, 1.0 - c_) - std::abs(eps_);
    if (amp_ < 0.0) {
        throw ConfigError("epsilon too large: f_H/f_N cannot stay in [0,1]");
    }
}

double FormEval::core(double x) const {
    switch (form_) {
        case Form::Exp1:
        case Form::Exp2:
            return std::exp((x - x_max_) / rate_h_);
        case Form::Logarithmic:
            return std::log1p(x / scale_);
        case Form::PowerLaw:
            return std::pow(x / x_max_, exponent_);
        default:
            return 0.0;
    }
}

double FormEval::h(double x) const {
    if (x_max_ <= 0.0) return 0.0;
    if (form_ == Form::Linear) return slope_ * (x - 0.5 * x_max_);
    return amp_ * (core(x) - core_mean_) / core_span_;
}

double FormEval::g(double x) const {
    if (x_max_ <= 0.0) return 1.0;
    switch (form_) {
        case Form::Linear:
            return 1.0 - g_slope_ * x;
        case Form::Exp1:
        case Form::Exp2:
            return (std::exp(-x / rate_g_) - g_tail_) / g_norm_;
        case Form::Logarithmic:
            return std::log1p((x_max_ - x) / scale_) / std::log1p(x_max_ / scale_);
        case Form::PowerLaw:
            return 1.0 - std::pow(x / x_max_, exponent_);
    }
    return 0.0;
}

double FormEval::h_regressor(double x) const {
    if (x_max_ <= 0.0) return x;
    if (form_ == Form::Linear) return x;
    const double lo = core(0.0);
    const double hi = core(x_max_);
    return x_max_ * (core(x) - lo) / (hi - lo);
}

std::vector<std::string> validate_spec(const ModelSpec& spec, double x_max) {
    std::vector<std::string> violations;
    if (x_max <= 0.0) {
        violations.push_back("x_max must be positive");
        return violations;
    }
    std::optional<FormEval> eval;
    try {
        eval.emplace(spec, x_max);
    } catch (const ConfigError& e) {
        violations.push_back(e.what());
        return violations;
    }

    constexpr int kGrid = 1024;
    constexpr double kRangeTol = 1e-9;
    double h_abs_max = 0.0;
    bool f_ok = true, g_ok = true;
    for (int i = 0; i < kGrid; ++i) {
        const double x = x_max * static_cast<double>(i) / (kGrid - 1);
        const double fh = eval->f_H(x);
        const double fn = eval->f_N(x);
        const double gv = eval->g(x);
        h_abs_max = std::max(h_abs_max, std::abs(eval->h(x)));
        if (fh < -kRangeTol || fh > 1.0 + kRangeTol) f_ok = false;
        if (fn < -kRangeTol || fn > 1.0 + kRangeTol) f_ok = false;
        if (gv < -kRangeTol || gv > 1.0 + kRangeTol) g_ok = false;
    }
    if (!f_ok) violations.push_back("f_H or f_N leaves [0,1] on [0, x_max]");
    if (!g_ok) violations.push_back("g leaves [0,1] on [0, x_max]");

    // Composite Simpson for the zero-mean check; 1024 panels are not enough
    // for sharply curved cores at the 1e-9 tolerance.
    constexpr int kPanels = 1 << 16;
    const double step = x_max / kPanels;
    double integral = eval->h(0.0) + eval->h(x_max);
    for (int i = 1; i < kPanels; ++i) {
        integral += eval->h(step * i) * (i % 2 == 0 ? 2.0 : 4.0);
    }
    integral *= step / 3.0;
    if (h_abs_max > 0.0 &&
        std::abs(integral) > 1e-9 * x_max * h_abs_max) {
        violations.push_back("h does not integrate to zero over [0, x_max]");
    }
    if (h_abs_max > 0.0 && eval->h(x_max) - eval->h(0.0) <= 0.0) {
        violations.push_back("h is not net-increasing");
    }
    if (spec.g_vanishes_at_xmax && std::abs(eval->g(x_max)) > 1e-9) {
        violations.push_back("g(x_max) must be zero");
    }
    return violations;
}

std::optional<double> fair_win_moment(const geo::DistanceDistribution& dist) {
    if (dist.degenerate()) return std::nullopt;
    const double half = 0.5 * dist.x_max;
    double m = 0.0;
    for (const auto& a : dist.atoms) m += a.weight * (a.distance_km - half);
    return m;
}

std::optional<double> halftime_lead_moment(
    const geo::DistanceDistribution& dist) {
    if (dist.degenerate()) return std::nullopt;
    const double s = dist.x_max;
    double m = 0.0;
    for (const auto& a : dist.atoms) {
        m += a.weight * (a.distance_km - 0.5 * s) * (a.distance_km - s);
    }
    return m;
}

bool conjecture_all_geo(const geo::DistanceDistribution& dist) {
    const auto m1 = fair_win_moment(dist);
    const auto m2 = halftime_lead_moment(dist);
    return m1 && m2 && *m1 > 0.0 && *m2 > 0.0;
}

std::optional<double> gip_lower_bound(const geo::DistanceDistribution& dist) {
    if (dist.degenerate()) return std::nullopt;
    const double s = dist.x_max;
    double num = 0.0, den = 0.0, m1 = 0.0;
    for (const auto& a : dist.atoms) {
        const double x = a.distance_km;
        num += a.weight * (x - 0.5 * s) * (x - s);
        den += a.weight * (x - s);
        m1 += a.weight * (x - 0.5 * s);
    }
    if (den == 0.0) return std::nullopt;  // all mass at x_max
    return num / den - m1;
}

SharePair eval_halftime_shares(const ModelSpec& spec,
                               const geo::DistanceDistribution& dist) {
    FormEval eval(spec, dist.x_max);
    SharePair out{0.0, 0.0};
    for (const auto& a : dist.atoms) {
        const double gv = eval.g(a.distance_km);
        out.share_H += a.weight * eval.f_H(a.distance_km) * gv;
        out.share_N += a.weight * eval.f_N(a.distance_km) * gv;
    }
    return out;
}

SharePair eval_final_shares(const ModelSpec& spec,
                            const geo::DistanceDistribution& dist) {
    FormEval eval(spec, dist.x_max);
    SharePair out{0.0, 0.0};
    for (const auto& a : dist.atoms) {
        out.share_H += a.weight * eval.f_H(a.distance_km);
        out.share_N += a.weight * eval.f_N(a.distance_km);
    }
    return out;
}

std::optional<double> gip_estimate(const ModelSpec& spec,
                                   const geo::DistanceDistribution& dist,
                                   double delta) {
    FormEval eval(spec, dist.x_max);
    double e_g = 0.0, e_hg = 0.0;
    for (const auto& a : dist.atoms) {
        const double gv = eval.g(a.distance_km);
        e_g += a.weight * gv;
        e_hg += a.weight * eval.h(a.distance_km) * gv;
    }
    if (e_g == 0.0) return std::nullopt;
    return spec.c * delta - e_hg / e_g;
}

bool general_win_condition(const ModelSpec& spec,
                           const geo::DistanceDistribution& dist,
                           double delta) {
    FormEval eval(spec, dist.x_max);
    double e_g = 0.0, e_h = 0.0, e_hg = 0.0;
    for (const auto& a : dist.atoms) {
        const double gv = eval.g(a.distance_km);
        const double hv = eval.h(a.distance_km);
        e_g += a.weight * gv;
        e_h += a.weight * hv;
        e_hg += a.weight * hv * gv;
    }
    return spec.c * delta * e_g > e_hg - e_h * e_g;
}

std::vector<SweepRow> sweep_model_params(Form form,
                                         const std::vector<SweepPoint>& grid,
                                         const geo::DistanceDistribution& dist,
                                         double c) {
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (const auto& point : grid) {
        ModelSpec spec;
        spec.form = form;
        spec.c = c;
        switch (form) {
            case Form::Linear: spec.slope = point.param1; break;
            case Form::Exp1: spec.rate_h = point.param1; break;
            case Form::Exp2:
                spec.rate_h = point.param1;
                spec.rate_g = point.param2;
                break;
            case Form::Logarithmic: spec.scale = point.param1; break;
            case Form::PowerLaw: spec.exponent = point.param1; break;
        }
        SweepRow row;
        row.param1 = point.param1;
        row.param2 = point.param2;
        row.has_param2 = (form == Form::Exp2);
        if (!dist.degenerate()) {
            FormEval eval(spec, dist.x_max);
            for (const auto& a : dist.atoms) {
                const double hv = eval.h(a.distance_km);
                row.e_h += a.weight * hv;
                row.e_gh += a.weight * hv * eval.g(a.distance_km);
            }
        }
        row.flag = row.e_h > 0.0 && row.e_gh < 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace latecount::model
