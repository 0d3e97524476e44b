#pragma once

#include <algorithm>
#include <vector>

#include "latecount/geodata.hpp"
#include "latecount/random.hpp"

namespace test_support {

// Distribution from explicit (distance, weight) pairs; weights normalized.
inline latecount::geo::DistanceDistribution dist_from_pairs(
    const std::vector<std::pair<double, double>>& pairs) {
    latecount::geo::DistanceDistribution dist;
    double total = 0.0;
    for (const auto& [x, w] : pairs) total += w;
    for (const auto& [x, w] : pairs) {
        dist.atoms.push_back({x, w / total});
        dist.x_max = std::max(dist.x_max, x);
    }
    dist.total_population = static_cast<std::int64_t>(pairs.size());
    return dist;
}

// Dense approximation of the continuous uniform law on [0, x_max]:
// inclusive grid with trapezoid weights, so x_max is hit exactly and
// weighted sums converge to the integrals at O(n^-2).
inline latecount::geo::DistanceDistribution uniform_grid_dist(double x_max,
                                                              int n = 20001) {
    latecount::geo::DistanceDistribution dist;
    dist.x_max = x_max;
    dist.total_population = n;
    const double denom = static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        dist.atoms.push_back({x_max * static_cast<double>(i) / denom,
                              w / denom});
    }
    return dist;
}

// Random weighted distribution with atom distances in [0, 200] km.
inline latecount::geo::DistanceDistribution random_dist(
    latecount::rng::SplitMix64& gen, int min_atoms, int max_atoms) {
    const int n = min_atoms +
                  static_cast<int>(gen.next_below(max_atoms - min_atoms + 1));
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(n);
    for (int i = 0; i < n; ++i) {
        pairs.emplace_back(200.0 * gen.next_double(),
                           0.05 + gen.next_double());
    }
    return dist_from_pairs(pairs);
}

}  // namespace test_support
