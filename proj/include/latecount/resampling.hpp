#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "latecount/geodata.hpp"
#include "latecount/model.hpp"

namespace latecount::resample {

enum class Mode {
    Bootstrap,  // population-weighted draws with replacement
    Subsample   // population-weighted draws without replacement
};

struct ResamplePlan {
    Mode mode = Mode::Subsample;
    int sample_size = 100;    // N, atoms per replicate
    int replicates = 10000;   // B
    std::uint64_t seed = 42;
};

// Replicate k is driven by a SplitMix64 generator seeded with the k-th
// output of SplitMix64(plan.seed), so replicates are independent of
// evaluation order and can run in parallel bit-exactly.
geo::DistanceDistribution draw_replicate(const geo::DistanceDistribution& dist,
                                         const ResamplePlan& plan,
                                         int replicate_index);

std::vector<geo::DistanceDistribution> resample(
    const geo::DistanceDistribution& dist, const ResamplePlan& plan);

// Fraction of replicates satisfying each of the two turnaround conditions
// and both at once. When the subsample support is small enough the result
// is computed by exact enumeration over all subsets (weighted by their
// sampling probability) instead of Monte Carlo; `exact` reports which.
struct ConditionEstimate {
    double fraction_both = 0.0;
    double fraction_first = 0.0;   // fair-win condition
    double fraction_second = 0.0;  // half-time-lead condition
    int replicates = 0;
    bool exact = false;
};

// conditions(replicate) -> {first, second}; both strict sign tests.
using ConditionPair = std::pair<bool, bool>;
using ConditionFn = std::function<ConditionPair(const geo::DistanceDistribution&)>;

ConditionEstimate estimate_conditions(const geo::DistanceDistribution& dist,
                                      const ResamplePlan& plan,
                                      const ConditionFn& conditions);

// The distance-only turnaround test: replicate fractions of
// E[X - x_max/2] > 0 (first) and E[(X - x_max/2)(X - x_max)] > 0 (second).
ConditionEstimate probability_all_geo(const geo::DistanceDistribution& dist,
                                      const ResamplePlan& plan);

// Same per-replicate test in its general form for an arbitrary model:
// E[h(X)] > 0 (first) and E[g(X)h(X)] < 0 (second), with h and g built on
// each replicate's own x_max.
ConditionEstimate probability_all_geo_general(
    const geo::DistanceDistribution& dist, const ResamplePlan& plan,
    const model::ModelSpec& spec);

// Per-replicate values behind the fractions, for external plotting.
// Always Monte Carlo, one row per replicate.
struct ReplicateMoments {
    double mean_excess;   // E[X - x_max/2] on the replicate
    double lead_moment;   // E[(X - x_max/2)(X - x_max)] on the replicate
};

std::vector<ReplicateMoments> replicate_moments(
    const geo::DistanceDistribution& dist, const ResamplePlan& plan);

// One share-vs-distance observation.
struct FitPoint {
    double x;       // km
    double share;   // incumbent two-candidate share, [0, 1]
    double weight;  // > 0; ignored by unweighted fits
};

struct FitResult {
    double intercept = 0.0;        // share at x = 0
    double slope = 0.0;            // share per km
    std::optional<double> ratio;   // intercept/slope; empty when |slope| < 1e-15
};

// Weighted least squares of share on distance. Needs >= 2 distinct x.
FitResult fit_h_linear(std::span<const FitPoint> points, bool weighted = true);

struct RatioSet {
    std::vector<double> ratios;  // defined intercept/slope ratios only
    int undefined_count = 0;     // dropped: |slope| < 1e-15 or degenerate fit
    int replicates = 0;
};

// B intercept/slope ratios from resampled point sets. The resampling unit
// is the point (tally unit): Bootstrap draws points.size() rows uniformly
// with replacement, Subsample draws plan.sample_size rows uniformly
// without replacement.
RatioSet bootstrap_c_over_m(std::span<const FitPoint> points,
                            const ResamplePlan& plan, bool weighted = true);

struct WindowResult {
    bool applicable = false;  // false when delta >= 0: no turnaround premise
    double fraction = 0.0;    // P{ lower_bound < ratio*delta < 0 }
};

// Fraction of ratios that put ratio*delta inside (lower_bound, 0).
WindowResult probability_gip_window(std::span<const double> ratios,
                                    double lower_bound, double delta);

}  // namespace latecount::resample
