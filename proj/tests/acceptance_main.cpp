// Acceptance suite: prints one PASS/FAIL line per criterion and exits with
// the number of failures. Tolerances are pinned in code next to each check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "latecount/analysis.hpp"
#include "latecount/fixture.hpp"
#include "latecount/model.hpp"
#include "latecount/random.hpp"
#include "latecount/resampling.hpp"
#include "latecount/tail_probability.hpp"

using namespace latecount;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

geo::DistanceDistribution random_dist(rng::SplitMix64& gen, int min_atoms,
                                      int max_atoms) {
    const int n = min_atoms +
                  static_cast<int>(gen.next_below(max_atoms - min_atoms + 1));
    geo::DistanceDistribution dist;
    double total = 0.0;
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < n; ++i) {
        pairs.emplace_back(200.0 * gen.next_double(), 0.05 + gen.next_double());
        total += pairs.back().second;
    }
    for (const auto& [x, w] : pairs) {
        dist.atoms.push_back({x, w / total});
        dist.x_max = std::max(dist.x_max, x);
    }
    dist.total_population = n;
    return dist;
}

// ---------------------------------------------------------------------------
// 1. Prong-1 symmetry: equal half-time counts give probability 1/2.

bool criterion_1() {
    for (std::int64_t v : {2LL, 100LL, 1000000LL}) {
        (void)tail::fair_win_probability(v / 2, v / 2);  // warm up
        const auto start = Clock::now();
        const auto lp = tail::fair_win_probability(v / 2, v / 2);
        const double elapsed = seconds_since(start);
        if (std::abs(lp.probability() - 0.5) > 1e-12) return false;
        if (elapsed >= 1e-3) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 2. Prong-1 oracle equivalence: closed form vs the defining integral.

long double oracle_integral(long double p, long double q, long double v) {
    const long double sp = sqrtl(p * (1.0L - p) / v);
    const long double sq = sqrtl(q * (1.0L - q) / v);
    const long double lo = std::min(p, q) - 30.0L * (sp + sq);
    const long double hi = std::max(p, q) + 30.0L * (sp + sq);
    const int n = 200000;
    const long double step = (hi - lo) / n;
    long double sum = 0.0L;
    for (int i = 0; i <= n; ++i) {
        const long double t = lo + step * i;
        const long double tail_val =
            0.5L * erfcl((t - p) / (sp * sqrtl(2.0L)));
        const long double zq = (t - q) / sq;
        sum += ((i == 0 || i == n) ? 0.5L : 1.0L) * tail_val *
               expl(-0.5L * zq * zq) / (sq * sqrtl(2.0L * M_PIl));
    }
    return sum * step;
}

bool criterion_2() {
    rng::SplitMix64 gen(101);
    for (int i = 0; i < 100; ++i) {
        const auto v = static_cast<std::int64_t>(20 + gen.next_below(981));
        const auto v_H = static_cast<std::int64_t>(
            std::llround(v * (0.25 + 0.5 * gen.next_double())));
        const auto v_N = v - v_H;
        const long double p =
            static_cast<long double>(v_H) / static_cast<long double>(v);
        const long double oracle =
            oracle_integral(p, 1.0L - p, static_cast<long double>(v));
        const double got = tail::fair_win_probability(v_H, v_N).probability();
        if (std::abs(got - static_cast<double>(oracle)) >
            0.01 * static_cast<double>(oracle)) {
            return false;
        }
    }
    for (int i = 0; i < 100; ++i) {
        const double v = std::pow(10.0, 1.0 + 6.0 * gen.next_double());
        const double p = 0.05 + 0.44 * gen.next_double();
        const auto closed = tail::fair_win_probability_shares(p, 1.0 - p, v);
        const auto quad = tail::fair_win_log10_quadrature(p, 1.0 - p, v);
        const double tol = std::max(1e-3 * std::abs(closed.log10_value), 1e-9);
        if (std::abs(closed.log10_value - quad.log10_value) > tol) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 3. Paper-scale reproduction. Calibration: half-time shares 0.41/0.46 of
// all counted ballots, normalized to the two-candidate subtotal; v is the
// two-candidate half-time count 0.57 * 0.87 * ~2.48M valid votes =
// 1,230,000. The log10 must land within 20% of -1770.

bool criterion_3() {
    const auto start = Clock::now();
    const std::int64_t v = 1230000;
    const auto v_H = static_cast<std::int64_t>(std::llround(v * 0.41 / 0.87));
    const auto lp = tail::fair_win_probability(v_H, v - v_H);
    const double elapsed = seconds_since(start);
    std::printf("       log10 fair-win probability = %.2f (target -1770 +/- 20%%)\n",
                lp.log10_value);
    return lp.log10_value > -1770.0 * 1.2 && lp.log10_value < -1770.0 * 0.8 &&
           elapsed < 1.0;
}

// ---------------------------------------------------------------------------
// 4. Jensen identity: the window lower bound equals Var(X)/(E[X]-x_max)
// and is never positive.

bool criterion_4() {
    const auto start = Clock::now();
    rng::SplitMix64 gen(103);
    for (int i = 0; i < 1000; ++i) {
        const auto dist = random_dist(gen, 10, 10000);
        const auto lower = model::gip_lower_bound(dist);
        if (!lower) return false;
        const double oracle = dist.variance() / (dist.mean() - dist.x_max);
        if (std::abs(*lower - oracle) > 1e-9 * std::abs(oracle)) return false;
        if (*lower > 0.0) return false;
    }
    return seconds_since(start) < 5.0;
}

// ---------------------------------------------------------------------------
// 5. Subsample probabilities match exhaustive enumeration on small
// supports: every ordered draw sequence walked independently.

struct PathEnumerator {
    const geo::DistanceDistribution& dist;
    int target;
    double p_both = 0.0;

    void recurse(std::vector<int>& picked, double prob, double picked_weight) {
        if (static_cast<int>(picked.size()) == target) {
            double s = 0.0;
            for (int i : picked) s = std::max(s, dist.atoms[i].distance_km);
            double m1 = 0.0, m2 = 0.0;
            for (int i : picked) {
                const double x = dist.atoms[i].distance_km;
                m1 += (x - 0.5 * s) / target;
                m2 += (x - 0.5 * s) * (x - s) / target;
            }
            if (m1 > 0.0 && m2 > 0.0) p_both += prob;
            return;
        }
        for (int i = 0; i < static_cast<int>(dist.atoms.size()); ++i) {
            if (std::find(picked.begin(), picked.end(), i) != picked.end()) {
                continue;
            }
            const double w = dist.atoms[i].weight;
            picked.push_back(i);
            recurse(picked, prob * w / (1.0 - picked_weight), picked_weight + w);
            picked.pop_back();
        }
    }
};

bool criterion_5() {
    const auto start = Clock::now();
    rng::SplitMix64 gen(107);
    resample::ResamplePlan plan;
    plan.mode = resample::Mode::Subsample;
    plan.sample_size = 5;
    plan.replicates = 1;
    for (int trial = 0; trial < 8; ++trial) {
        // mix of far-heavy and near-heavy ten-atom supports
        geo::DistanceDistribution dist;
        double total = 0.0;
        std::vector<std::pair<double, double>> pairs;
        for (int i = 0; i < 10; ++i) {
            const bool far = (trial + i) % 3 != 0;
            pairs.emplace_back(far ? 80.0 + 40.0 * gen.next_double()
                                   : 15.0 * gen.next_double(),
                               0.2 + gen.next_double());
            total += pairs.back().second;
        }
        for (const auto& [x, w] : pairs) {
            dist.atoms.push_back({x, w / total});
            dist.x_max = std::max(dist.x_max, x);
        }
        dist.total_population = 10;

        const auto est = resample::probability_all_geo(dist, plan);
        if (!est.exact) return false;
        PathEnumerator oracle{dist, plan.sample_size};
        std::vector<int> picked;
        oracle.recurse(picked, 1.0, 0.0);
        if (std::abs(est.fraction_both - oracle.p_both) > 1e-12) return false;
    }
    return seconds_since(start) < 10.0;
}

// ---------------------------------------------------------------------------
// 6. The compact moment conditions agree with the general sign conditions
// E[h] > 0 and E[gh] < 0 for linear models with g(x_max) = 0.

bool criterion_6() {
    rng::SplitMix64 gen(109);
    for (int i = 0; i < 1000; ++i) {
        const auto dist = random_dist(gen, 4, 80);
        model::ModelSpec spec;
        spec.form = model::Form::Linear;
        spec.c = 0.2 + 0.6 * gen.next_double();
        spec.slope = (0.05 + 0.9 * gen.next_double()) / dist.x_max;
        model::FormEval eval(spec, dist.x_max);
        double e_h = 0.0, e_gh = 0.0;
        for (const auto& a : dist.atoms) {
            const double hv = eval.h(a.distance_km);
            e_h += a.weight * hv;
            e_gh += a.weight * hv * eval.g(a.distance_km);
        }
        const bool general = e_h > 0.0 && e_gh < 0.0;
        if (general != model::conjecture_all_geo(dist)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 7. Fixture reproduction: country-wide prong-3 essentially zero, at least
// one sparse region clearly positive, full nvc x N sweep under 60 s.

bool criterion_7() {
    const auto start = Clock::now();
    const auto fx = fixture::make_country_fixture();
    bool country_ok = true;
    double best_region_fraction = 0.0;
    for (int sample_size : {20, 50, 100}) {
        analysis::RunConfig config;
        config.scope = analysis::Scope::Both;
        config.nvc = {1, 3, 5};
        config.plan.mode = resample::Mode::Subsample;
        config.plan.sample_size = sample_size;
        config.plan.replicates = 10000;
        config.plan.seed = 42;
        const auto report =
            analysis::run_analysis(config, fx.settlements, fx.tallies);
        for (const auto& scope : report.scopes) {
            for (const auto& cell : scope.cells) {
                if (scope.is_country) {
                    if (cell.prong3_fraction >= 1e-4) country_ok = false;
                } else {
                    best_region_fraction =
                        std::max(best_region_fraction, cell.prong3_fraction);
                }
            }
        }
    }
    const double elapsed = seconds_since(start);
    std::printf("       country prong-3 < 1e-4: %s; best region prong-3 = %.3f; "
                "%.1f s\n",
                country_ok ? "yes" : "NO", best_region_fraction, elapsed);
    return country_ok && best_region_fraction > 0.01 && elapsed < 60.0;
}

// ---------------------------------------------------------------------------
// 8. Determinism: byte-identical reports across runs and thread counts.

bool criterion_8() {
    const auto fx = fixture::make_country_fixture();
    analysis::RunConfig config;
    config.scope = analysis::Scope::Both;
    config.nvc = {1, 3, 5};
    config.plan.sample_size = 100;
    config.plan.replicates = 10000;
    config.plan.seed = 42;

    config.threads = 1;
    const std::string serial = analysis::report_to_json(
        analysis::run_analysis(config, fx.settlements, fx.tallies));
    const std::string serial_again = analysis::report_to_json(
        analysis::run_analysis(config, fx.settlements, fx.tallies));
    config.threads = 4;
    const std::string parallel = analysis::report_to_json(
        analysis::run_analysis(config, fx.settlements, fx.tallies));
    return serial == serial_again && serial == parallel;
}

// ---------------------------------------------------------------------------
// 9. Parameter sweeps over the linear and exponential families never raise
// the turnaround flag on the fixture.

bool criterion_9() {
    const auto fx = fixture::make_country_fixture();
    for (int nvc : {1, 3, 5}) {
        std::vector<geo::DistanceDistribution> parts;
        for (const auto& region : fx.settlements.regions) {
            parts.push_back(geo::distance_distribution(
                region, geo::place_voting_centers(
                            region, nvc, geo::Placement::TopPopulation)));
        }
        const auto dist = geo::pool_distributions(parts);

        std::vector<model::SweepPoint> linear_grid;
        for (int i = 0; i <= 40; ++i) linear_grid.push_back({-1.0 + 0.05 * i, 0.0});
        for (const auto& row :
             model::sweep_model_params(model::Form::Linear, linear_grid, dist)) {
            if (row.flag) return false;
        }

        std::vector<model::SweepPoint> exp_grid;
        for (int i = 0; i <= 40; ++i) {
            exp_grid.push_back({std::pow(10.0, -1.0 + 0.1 * i), 0.0});
        }
        for (const auto& row :
             model::sweep_model_params(model::Form::Exp1, exp_grid, dist)) {
            if (row.flag) return false;
        }

        std::vector<model::SweepPoint> exp2_grid;
        for (int i = 0; i <= 20; ++i) {
            for (int k = 0; k <= 20; ++k) {
                exp2_grid.push_back({std::pow(10.0, -1.0 + 0.2 * i),
                                     std::pow(10.0, -1.0 + 0.2 * k)});
            }
        }
        for (const auto& row :
             model::sweep_model_params(model::Form::Exp2, exp2_grid, dist)) {
            if (row.flag) return false;
        }
    }
    return true;
}

struct Criterion {
    int number;
    const char* label;
    bool (*run)();
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {1, "prong-1 symmetry at v in {2, 100, 1e6}", criterion_1},
        {2, "prong-1 closed form vs integral oracles", criterion_2},
        {3, "paper-scale fair-win probability ~ 1e-1770", criterion_3},
        {4, "window lower bound = Var/(mean - x_max) <= 0", criterion_4},
        {5, "subsample fractions = exhaustive enumeration", criterion_5},
        {6, "moment conditions = general sign conditions", criterion_6},
        {7, "fixture: country ~ 0, sparse regions > 0.01, < 60 s", criterion_7},
        {8, "byte-identical reports, serial and parallel", criterion_8},
        {9, "linear/exponential sweeps never raise the flag", criterion_9},
    };
    int failures = 0;
    for (const auto& criterion : criteria) {
        const bool ok = criterion.run();
        std::printf("%s - criterion %d: %s\n", ok ? "PASS" : "FAIL",
                    criterion.number, criterion.label);
        std::fflush(stdout);
        failures += !ok;
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
    }
    return failures;
}
