#include "latecount/resampling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "latecount/errors.hpp"
#include "latecount/random.hpp"

namespace latecount::resample {

namespace {

// Exact enumeration of subsample subsets is worthwhile only for tiny
// supports; beyond this the subset DP table stops paying for itself.
constexpr int kExactMaxAtoms = 16;

void check_plan(const geo::DistanceDistribution& dist,
                const ResamplePlan& plan) {
    if (plan.sample_size < 2) throw ConfigError("sample_size must be >= 2");
    if (plan.replicates < 1) throw ConfigError("replicates must be >= 1");
    if (plan.mode == Mode::Subsample &&
        plan.sample_size > static_cast<int>(dist.atoms.size())) {
        throw ConfigError("subsample size exceeds the number of atoms");
    }
}

std::vector<double> cumulative_weights(const geo::DistanceDistribution& dist) {
    std::vector<double> cum(dist.atoms.size());
    double total = 0.0;
    for (std::size_t i = 0; i < dist.atoms.size(); ++i) {
        total += dist.atoms[i].weight;
        cum[i] = total;
    }
    cum.back() = 1.0;
    return cum;
}

geo::DistanceDistribution from_distances(std::span<const double> xs) {
    geo::DistanceDistribution rep;
    rep.atoms.reserve(xs.size());
    const double w = 1.0 / static_cast<double>(xs.size());
    for (double x : xs) {
        rep.atoms.push_back({x, w});
        rep.x_max = std::max(rep.x_max, x);
    }
    rep.total_population = static_cast<std::int64_t>(xs.size());
    return rep;
}

std::vector<double> draw_distances(const geo::DistanceDistribution& dist,
                                   const std::vector<double>& cum,
                                   const ResamplePlan& plan,
                                   int replicate_index) {
    rng::SplitMix64 gen(rng::stream_at(plan.seed, replicate_index));
    std::vector<double> xs;
    xs.reserve(plan.sample_size);
    if (plan.mode == Mode::Bootstrap) {
        for (int k = 0; k < plan.sample_size; ++k) {
            const double u = gen.next_double();
            auto it = std::upper_bound(cum.begin(), cum.end(), u);
            if (it == cum.end()) --it;
            xs.push_back(dist.atoms[it - cum.begin()].distance_km);
        }
    } else {
        // Weighted sampling without replacement via exponential races:
        // atom i gets key -ln(u_i)/w_i; the N smallest keys win, which
        // matches drawing atoms one by one with probability proportional
        // to weight among those remaining.
        std::vector<std::pair<double, int>> keys;
        keys.reserve(dist.atoms.size());
        for (std::size_t i = 0; i < dist.atoms.size(); ++i) {
            const double u = gen.next_double();
            const double key = -std::log1p(-u) / dist.atoms[i].weight;
            keys.emplace_back(key, static_cast<int>(i));
        }
        std::nth_element(keys.begin(), keys.begin() + plan.sample_size - 1,
                         keys.end());
        std::sort(keys.begin(), keys.begin() + plan.sample_size);
        for (int k = 0; k < plan.sample_size; ++k) {
            xs.push_back(dist.atoms[keys[k].second].distance_km);
        }
    }
    return xs;
}

}  // namespace

geo::DistanceDistribution draw_replicate(const geo::DistanceDistribution& dist,
                                         const ResamplePlan& plan,
                                         int replicate_index) {
    check_plan(dist, plan);
    const auto cum = cumulative_weights(dist);
    return from_distances(draw_distances(dist, cum, plan, replicate_index));
}

std::vector<geo::DistanceDistribution> resample(
    const geo::DistanceDistribution& dist, const ResamplePlan& plan) {
    check_plan(dist, plan);
    const auto cum = cumulative_weights(dist);
    std::vector<geo::DistanceDistribution> reps;
    reps.reserve(plan.replicates);
    for (int b = 0; b < plan.replicates; ++b) {
        reps.push_back(from_distances(draw_distances(dist, cum, plan, b)));
    }
    return reps;
}

namespace {

// Subset DP over the weighted without-replacement law: prob[mask] is the
// probability that the first popcount(mask) draws produce exactly the set
// `mask`. Conditions are evaluated once per size-N subset and weighted by
// that probability, giving the exact value the Monte Carlo loop estimates.
ConditionEstimate enumerate_subsamples(const geo::DistanceDistribution& dist,
                                       int sample_size,
                                       const ConditionFn& conditions) {
    const int n = static_cast<int>(dist.atoms.size());
    const std::uint32_t full = (n == 32) ? 0xFFFFFFFFu : ((1u << n) - 1u);
    std::vector<double> prob(full + 1, 0.0);
    std::vector<double> wsum(full + 1, 0.0);
    prob[0] = 1.0;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        const int bits = std::popcount(mask);
        const int low = std::countr_zero(mask);
        wsum[mask] = wsum[mask & (mask - 1)] + dist.atoms[low].weight;
        if (bits > sample_size) continue;
        double p = 0.0;
        std::uint32_t rest = mask;
        while (rest) {
            const int i = std::countr_zero(rest);
            rest &= rest - 1;
            const std::uint32_t prev = mask & ~(1u << i);
            const double remaining = 1.0 - wsum[prev];
            if (remaining > 0.0) {
                p += prob[prev] * dist.atoms[i].weight / remaining;
            }
        }
        prob[mask] = p;
    }

    ConditionEstimate est;
    est.exact = true;
    est.replicates = 0;
    std::vector<double> xs;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        if (std::popcount(mask) != sample_size) continue;
        ++est.replicates;
        if (prob[mask] == 0.0) continue;
        xs.clear();
        std::uint32_t rest = mask;
        while (rest) {
            const int i = std::countr_zero(rest);
            rest &= rest - 1;
            xs.push_back(dist.atoms[i].distance_km);
        }
        const auto rep = from_distances(xs);
        const auto [first, second] = conditions(rep);
        if (first) est.fraction_first += prob[mask];
        if (second) est.fraction_second += prob[mask];
        if (first && second) est.fraction_both += prob[mask];
    }
    return est;
}

}  // namespace

ConditionEstimate estimate_conditions(const geo::DistanceDistribution& dist,
                                      const ResamplePlan& plan,
                                      const ConditionFn& conditions) {
    check_plan(dist, plan);
    if (plan.mode == Mode::Subsample &&
        static_cast<int>(dist.atoms.size()) <= kExactMaxAtoms) {
        return enumerate_subsamples(dist, plan.sample_size, conditions);
    }
    const auto cum = cumulative_weights(dist);
    ConditionEstimate est;
    est.replicates = plan.replicates;
    long n_first = 0, n_second = 0, n_both = 0;
    for (int b = 0; b < plan.replicates; ++b) {
        const auto rep = from_distances(draw_distances(dist, cum, plan, b));
        const auto [first, second] = conditions(rep);
        n_first += first;
        n_second += second;
        n_both += (first && second);
    }
    const double denom = static_cast<double>(plan.replicates);
    est.fraction_first = n_first / denom;
    est.fraction_second = n_second / denom;
    est.fraction_both = n_both / denom;
    return est;
}

ConditionEstimate probability_all_geo(const geo::DistanceDistribution& dist,
                                      const ResamplePlan& plan) {
    return estimate_conditions(
        dist, plan, [](const geo::DistanceDistribution& rep) -> ConditionPair {
            const auto m1 = model::fair_win_moment(rep);
            const auto m2 = model::halftime_lead_moment(rep);
            return {m1 && *m1 > 0.0, m2 && *m2 > 0.0};
        });
}

ConditionEstimate probability_all_geo_general(
    const geo::DistanceDistribution& dist, const ResamplePlan& plan,
    const model::ModelSpec& spec) {
    return estimate_conditions(
        dist, plan,
        [&spec](const geo::DistanceDistribution& rep) -> ConditionPair {
            if (rep.degenerate()) return {false, false};
            model::FormEval eval(spec, rep.x_max);
            double e_h = 0.0, e_gh = 0.0;
            for (const auto& a : rep.atoms) {
                const double hv = eval.h(a.distance_km);
                e_h += a.weight * hv;
                e_gh += a.weight * hv * eval.g(a.distance_km);
            }
            return {e_h > 0.0, e_gh < 0.0};
        });
}

std::vector<ReplicateMoments> replicate_moments(
    const geo::DistanceDistribution& dist, const ResamplePlan& plan) {
    check_plan(dist, plan);
    const auto cum = cumulative_weights(dist);
    std::vector<ReplicateMoments> rows;
    rows.reserve(plan.replicates);
    for (int b = 0; b < plan.replicates; ++b) {
        const auto rep = from_distances(draw_distances(dist, cum, plan, b));
        const auto m1 = model::fair_win_moment(rep);
        const auto m2 = model::halftime_lead_moment(rep);
        rows.push_back({m1 ? *m1 : 0.0, m2 ? *m2 : 0.0});
    }
    return rows;
}

FitResult fit_h_linear(std::span<const FitPoint> points, bool weighted) {
    if (points.size() < 2) {
        throw DataError("linear fit needs at least 2 points");
    }
    double wsum = 0.0, xbar = 0.0, ybar = 0.0;
    for (const auto& p : points) {
        const double w = weighted ? p.weight : 1.0;
        if (w <= 0.0) throw DataError("fit weights must be positive");
        wsum += w;
        xbar += w * p.x;
        ybar += w * p.share;
    }
    xbar /= wsum;
    ybar /= wsum;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : points) {
        const double w = weighted ? p.weight : 1.0;
        sxx += w * (p.x - xbar) * (p.x - xbar);
        sxy += w * (p.x - xbar) * (p.share - ybar);
    }
    if (sxx == 0.0) {
        throw DataError("linear fit needs at least 2 distinct x values");
    }
    FitResult fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    if (std::abs(fit.slope) >= 1e-15) {
        fit.ratio = fit.intercept / fit.slope;
    }
    return fit;
}

RatioSet bootstrap_c_over_m(std::span<const FitPoint> points,
                            const ResamplePlan& plan, bool weighted) {
    if (points.size() < 2) {
        throw DataError("ratio bootstrap needs at least 2 points");
    }
    const int n = static_cast<int>(points.size());
    int draw = n;
    if (plan.mode == Mode::Subsample) {
        draw = plan.sample_size;
        if (draw > n) throw ConfigError("subsample size exceeds the number of points");
        if (draw < 2) throw ConfigError("sample_size must be >= 2");
    }
    RatioSet out;
    out.replicates = plan.replicates;
    out.ratios.reserve(plan.replicates);
    std::vector<FitPoint> sample;
    std::vector<int> index(n);
    for (int b = 0; b < plan.replicates; ++b) {
        rng::SplitMix64 gen(rng::stream_at(plan.seed, b));
        sample.clear();
        if (plan.mode == Mode::Bootstrap) {
            for (int k = 0; k < draw; ++k) {
                sample.push_back(points[gen.next_below(n)]);
            }
        } else {
            std::iota(index.begin(), index.end(), 0);
            // partial Fisher-Yates
            for (int k = 0; k < draw; ++k) {
                const int j = k + static_cast<int>(gen.next_below(n - k));
                std::swap(index[k], index[j]);
                sample.push_back(points[index[k]]);
            }
        }
        try {
            const FitResult fit = fit_h_linear(sample, weighted);
            if (fit.ratio) {
                out.ratios.push_back(*fit.ratio);
            } else {
                ++out.undefined_count;
            }
        } catch (const DataError&) {
            ++out.undefined_count;  // replicate collapsed onto one x
        }
    }
    return out;
}

WindowResult probability_gip_window(std::span<const double> ratios,
                                    double lower_bound, double delta) {
    if (lower_bound > 0.0) {
        throw ConfigError("gip window lower bound must be <= 0");
    }
    WindowResult res;
    if (delta >= 0.0) return res;  // no half-time deficit to explain
    res.applicable = true;
    if (ratios.empty()) return res;
    long inside = 0;
    for (double rho : ratios) {
        const double mid = rho * delta;
        if (mid > lower_bound && mid < 0.0) ++inside;
    }
    res.fraction = static_cast<double>(inside) / static_cast<double>(ratios.size());
    return res;
}

}  // namespace latecount::resample
