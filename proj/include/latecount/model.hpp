#pragma once

#include <optional>
#include <string>
#include <vector>

#include "latecount/ballots.hpp"
#include "latecount/geodata.hpp"

namespace latecount::model {

enum class Form { Linear, Logarithmic, PowerLaw, Exp1, Exp2 };

std::string form_name(Form form);
std::optional<Form> parse_form(const std::string& name);

// Voting-preference model on distances x in [0, x_max]:
//
//   f_H(x) = c + epsilon + h(x)        probability of a vote for the incumbent
//   f_N(x) = c - epsilon - h(x)        probability of a vote for the challenger
//   g(x)   = P{vote counted by half-time | x}, decreasing, g(x_max) = 0
//
// h is the distance-dependent preference component: zero mean over
// [0, x_max] and net-increasing (h(x_max) - h(0) > 0 for positive
// amplitude). For the non-linear forms the amplitude is normalized so that
// f_H and f_N stay inside [0, 1]; for Linear the slope is user-chosen.
struct ModelSpec {
    Form form = Form::Linear;
    double c = 0.5;        // axis of reflection of f_H/f_N
    double epsilon = 0.0;  // distance-independent preference, < 0 favors N
    bool g_vanishes_at_xmax = true;

    // Linear: h(x) = slope * (x - x_max/2); g(x) = 1 - x/x_max, or
    // 1 - g_slope*x when g_vanishes_at_xmax is false.
    double slope = 0.0;
    double g_slope = 0.0;

    // Exp1/Exp2: h(x) ~ e^{x/rate_h} shifted to zero mean;
    // g(x) = (e^{-x/rate_g} - e^{-x_max/rate_g}) / (1 - e^{-x_max/rate_g}).
    // Exp1 uses rate_h for both.
    double rate_h = 0.0;
    double rate_g = 0.0;

    // Logarithmic: cores log(1 + x/scale) for h and log(1 + (x_max-x)/scale)
    // for g. PowerLaw: cores (x/x_max)^exponent.
    double scale = 0.0;
    double exponent = 1.0;
};

// h and g evaluated with all per-x_max constants precomputed.
class FormEval {
public:
    FormEval(const ModelSpec& spec, double x_max);

    double h(double x) const;
    double g(double x) const;
    double f_H(double x) const { return c_ + eps_ + h(x); }
    double f_N(double x) const { return c_ - eps_ - h(x); }
    double x_max() const { return x_max_; }

    // The form's increasing core rescaled to run from 0 to x_max, in km.
    // Share-vs-distance fits regress on this, so the linear window test
    // generalizes unchanged: Linear gives back x itself.
    double h_regressor(double x) const;

private:
    Form form_;
    double x_max_;
    double c_, eps_;
    // Linear
    double slope_ = 0.0, g_slope_ = 0.0;
    // shared by the non-linear forms: h = amp * (core(x) - core_mean) / core_span
    double amp_ = 0.0, core_mean_ = 0.0, core_span_ = 1.0;
    double rate_h_ = 0.0, rate_g_ = 0.0, scale_ = 0.0, exponent_ = 1.0;
    double g_tail_ = 0.0, g_norm_ = 1.0;  // exp g constants

    double core(double x) const;
};

// Numeric validation of a spec against a given x_max: f_H, f_N, g within
// [0,1] on a 1024-point grid, trapezoid integral of h equal to zero within
// 1e-9 * x_max * max|h|, h net-increasing, g(x_max) = 0 when required.
// Returns human-readable violations; empty means valid.
std::vector<std::string> validate_spec(const ModelSpec& spec, double x_max);

// E[X - x_max/2]. Positive means the geography alone could produce an
// incumbent win in the distance-only extreme. Empty on x_max == 0.
std::optional<double> fair_win_moment(const geo::DistanceDistribution& dist);

// E[(X - x_max/2)(X - x_max)]. Positive means the geography could produce a
// challenger half-time lead in the distance-only extreme.
std::optional<double> halftime_lead_moment(const geo::DistanceDistribution& dist);

// Both moment conditions strictly positive. Degenerate distributions fail.
bool conjecture_all_geo(const geo::DistanceDistribution& dist);

// Lower bound of the window the distance-independent preference must fall
// into: E[(X - x_max/2)(X - x_max)] / E[X - x_max] - E[X - x_max/2].
// Algebraically equals Var(X)/(E[X] - x_max), hence always <= 0.
// Empty when all mass sits at x_max or the distribution is degenerate.
std::optional<double> gip_lower_bound(const geo::DistanceDistribution& dist);

struct SharePair {
    double share_H;
    double share_N;
};

// E[f_i(X) g(X)]: expected half-time share of each candidate.
SharePair eval_halftime_shares(const ModelSpec& spec,
                               const geo::DistanceDistribution& dist);

// E[f_i(X)]: expected final share of each candidate.
SharePair eval_final_shares(const ModelSpec& spec,
                            const geo::DistanceDistribution& dist);

// Distance-independent preference implied by a half-time margin delta:
// epsilon = c*delta - E[h(X)g(X)] / E[g(X)]. Empty when E[g(X)] == 0.
std::optional<double> gip_estimate(const ModelSpec& spec,
                                   const geo::DistanceDistribution& dist,
                                   double delta);

// General win condition for arbitrary h and g given the half-time margin:
// c * delta * E[g(X)] > E[h(X)g(X)] - E[h(X)]E[g(X)].
bool general_win_condition(const ModelSpec& spec,
                           const geo::DistanceDistribution& dist,
                           double delta);

// One grid point of a parameter sweep: the two expectations whose signs
// decide whether the distance-only turnaround scenario is possible.
struct SweepRow {
    double param1 = 0.0;
    double param2 = 0.0;  // only used by Exp2
    bool has_param2 = false;
    double e_h = 0.0;    // E[h(X)]
    double e_gh = 0.0;   // E[g(X)h(X)]
    bool flag = false;   // E[h(X)] > 0 and E[g(X)h(X)] < 0
};

struct SweepPoint {
    double param1;
    double param2;  // ignored unless the form takes two parameters
};

std::vector<SweepRow> sweep_model_params(Form form,
                                         const std::vector<SweepPoint>& grid,
                                         const geo::DistanceDistribution& dist,
                                         double c = 0.5);

}  // namespace latecount::model
