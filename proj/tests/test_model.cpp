#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "latecount/errors.hpp"
#include "latecount/fixture.hpp"
#include "latecount/model.hpp"
#include "latecount/random.hpp"
#include "test_support.hpp"

using namespace latecount;
using test_support::dist_from_pairs;
using test_support::random_dist;
using test_support::uniform_grid_dist;

namespace {

model::ModelSpec linear_spec(double slope, double c = 0.5, double eps = 0.0) {
    model::ModelSpec spec;
    spec.form = model::Form::Linear;
    spec.slope = slope;
    spec.c = c;
    spec.epsilon = eps;
    return spec;
}

model::ModelSpec spec_for(model::Form form, double x_max, double c = 0.5) {
    model::ModelSpec spec;
    spec.form = form;
    spec.c = c;
    switch (form) {
        case model::Form::Linear: spec.slope = 0.8 / x_max; break;
        case model::Form::Exp1: spec.rate_h = x_max / 5.0; break;
        case model::Form::Exp2:
            spec.rate_h = x_max / 5.0;
            spec.rate_g = x_max / 3.0;
            break;
        case model::Form::Logarithmic: spec.scale = x_max / 8.0; break;
        case model::Form::PowerLaw: spec.exponent = 2.5; break;
    }
    return spec;
}

const std::vector<model::Form> kAllForms = {
    model::Form::Linear, model::Form::Logarithmic, model::Form::PowerLaw,
    model::Form::Exp1, model::Form::Exp2};

}  // namespace

TEST_CASE("fair-win moment examples") {
    SUBCASE("symmetric grid vanishes") {
        const auto dist = dist_from_pairs(
            {{0.0, 1.0}, {25.0, 1.0}, {50.0, 1.0}, {75.0, 1.0}, {100.0, 1.0}});
        CHECK(*model::fair_win_moment(dist) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("point mass at the maximum distance") {
        const auto dist = dist_from_pairs({{60.0, 1.0}});
        CHECK(*model::fair_win_moment(dist) == doctest::Approx(30.0));
    }
    SUBCASE("two-atom arithmetic") {
        const auto dist = dist_from_pairs({{10.0, 0.3}, {20.0, 0.7}});
        CHECK(*model::fair_win_moment(dist) == doctest::Approx(7.0).epsilon(1e-12));
    }
    SUBCASE("degenerate distribution has no moment") {
        const auto dist = dist_from_pairs({{0.0, 1.0}});
        CHECK(!model::fair_win_moment(dist));
    }
}

TEST_CASE("half-time lead moment examples") {
    SUBCASE("continuous uniform gives x_max^2/12") {
        const auto dist = uniform_grid_dist(90.0);
        CHECK(*model::halftime_lead_moment(dist) ==
              doctest::Approx(90.0 * 90.0 / 12.0).epsilon(1e-3));
    }
    SUBCASE("point mass at x_max vanishes") {
        const auto dist = dist_from_pairs({{42.0, 1.0}});
        CHECK(*model::halftime_lead_moment(dist) == 0.0);
    }
    SUBCASE("mass at the midpoint vanishes too") {
        const auto dist = dist_from_pairs({{50.0, 1.0 - 1e-12}, {100.0, 1e-12}});
        CHECK(*model::halftime_lead_moment(dist) ==
              doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("distance-only conjecture test") {
    SUBCASE("point mass fails") {
        CHECK(!model::conjecture_all_geo(dist_from_pairs({{42.0, 1.0}})));
    }
    SUBCASE("symmetric distribution fails") {
        CHECK(!model::conjecture_all_geo(
            dist_from_pairs({{0.0, 1.0}, {50.0, 1.0}, {100.0, 1.0}})));
    }
    SUBCASE("far-heavy two-point distribution passes") {
        // 0.6 at 90 km, 0.4 at 0, so x_max = 90. By hand:
        // E[X - 45] = 0.6*90 - 45 = 9;
        // E[(X-45)(X-90)] = 0.6*45*0 + 0.4*(-45)*(-90) = 1620.
        const auto dist = dist_from_pairs({{90.0, 0.6}, {0.0, 0.4}});
        CHECK(*model::fair_win_moment(dist) == doctest::Approx(9.0));
        CHECK(*model::halftime_lead_moment(dist) == doctest::Approx(1620.0));
        CHECK(model::conjecture_all_geo(dist));
    }
    SUBCASE("degenerate distribution fails") {
        CHECK(!model::conjecture_all_geo(dist_from_pairs({{0.0, 1.0}})));
    }
}

TEST_CASE("gip lower bound examples") {
    SUBCASE("continuous uniform gives -x_max/6") {
        const auto dist = uniform_grid_dist(120.0);
        CHECK(*model::gip_lower_bound(dist) ==
              doctest::Approx(-20.0).epsilon(1e-3));
    }
    SUBCASE("near point mass below x_max gives ~0") {
        const auto dist = dist_from_pairs({{30.0, 1.0 - 1e-12}, {100.0, 1e-12}});
        CHECK(std::abs(*model::gip_lower_bound(dist)) <= 1e-9 * 100.0);
    }
    SUBCASE("all mass at x_max is degenerate") {
        CHECK(!model::gip_lower_bound(dist_from_pairs({{42.0, 1.0}})));
    }
}

TEST_CASE("gip lower bound equals Var(X)/(E[X]-x_max) and stays nonpositive") {
    rng::SplitMix64 gen(31);
    for (int i = 0; i < 1000; ++i) {
        const auto dist = random_dist(gen, 10, 200);
        const auto lower = model::gip_lower_bound(dist);
        REQUIRE(lower);
        const double oracle = dist.variance() / (dist.mean() - dist.x_max);
        CHECK(std::abs(*lower - oracle) <= 1e-9 * std::abs(oracle));
        CHECK(*lower <= 0.0);
    }
}

TEST_CASE("half-time shares reduce to final shares when g is constant") {
    rng::SplitMix64 gen(37);
    for (int i = 0; i < 50; ++i) {
        const auto dist = random_dist(gen, 3, 50);
        auto spec = linear_spec(0.6 / dist.x_max, 0.5, 0.03);
        spec.g_vanishes_at_xmax = false;
        spec.g_slope = 0.0;  // g == 1
        const auto half = model::eval_halftime_shares(spec, dist);
        const auto fin = model::eval_final_shares(spec, dist);
        CHECK(half.share_H == doctest::Approx(fin.share_H).epsilon(1e-12));
        CHECK(half.share_N == doctest::Approx(fin.share_N).epsilon(1e-12));
    }
}

TEST_CASE("flat preference splits the half-time count evenly") {
    const auto dist = dist_from_pairs({{5.0, 1.0}, {40.0, 2.0}, {80.0, 1.0}});
    const auto spec = linear_spec(0.0);  // h == 0, epsilon == 0
    const auto half = model::eval_halftime_shares(spec, dist);
    CHECK(half.share_H == doctest::Approx(half.share_N).epsilon(1e-14));
}

TEST_CASE("linear shares on the uniform law match the symbolic integrals") {
    const double s = 100.0;
    const double m = 0.004, c = 0.5, eps = 0.01;
    const auto dist = uniform_grid_dist(s);
    const auto spec = linear_spec(m, c, eps);
    const auto half = model::eval_halftime_shares(spec, dist);
    const auto fin = model::eval_final_shares(spec, dist);
    // E[f_H] = c + eps;  E[f_H g] = (c + eps)/2 - m s / 12 for g = 1 - x/s.
    CHECK(fin.share_H == doctest::Approx(c + eps).epsilon(1e-9));
    CHECK(fin.share_N == doctest::Approx(c - eps).epsilon(1e-9));
    CHECK(half.share_H ==
          doctest::Approx((c + eps) / 2.0 - m * s / 12.0).epsilon(1e-6));
    CHECK(half.share_N ==
          doctest::Approx((c - eps) / 2.0 + m * s / 12.0).epsilon(1e-6));
}

TEST_CASE("epsilon shifts the final gap by 2*epsilon") {
    const auto dist = dist_from_pairs({{10.0, 1.0}, {70.0, 3.0}});
    const double eps = 0.07;
    const auto base = model::eval_final_shares(linear_spec(0.002), dist);
    const auto shifted =
        model::eval_final_shares(linear_spec(0.002, 0.5, eps), dist);
    const double gap0 = base.share_H - base.share_N;
    const double gap1 = shifted.share_H - shifted.share_N;
    CHECK(gap1 - gap0 == doctest::Approx(2.0 * eps).epsilon(1e-12));
}

TEST_CASE("gip estimate") {
    const double s = 100.0;
    const auto dist = uniform_grid_dist(s);
    SUBCASE("h == 0 leaves c*delta") {
        const double delta = -0.0575;
        const auto eps = model::gip_estimate(linear_spec(0.0), dist, delta);
        CHECK(*eps == doctest::Approx(0.5 * delta).epsilon(1e-12));
    }
    SUBCASE("delta == 0 leaves -E[hg]/E[g], uniform closed form m*s/6") {
        const double m = 0.003;
        const auto eps = model::gip_estimate(linear_spec(m), dist, 0.0);
        CHECK(*eps == doctest::Approx(m * s / 6.0).epsilon(1e-6));
    }
    SUBCASE("degenerate when g has no mass") {
        // all atoms at x_max, where g vanishes
        const auto point = dist_from_pairs({{42.0, 1.0}});
        CHECK(!model::gip_estimate(linear_spec(0.001), point, -0.1));
    }
}

TEST_CASE("general win condition basics") {
    const auto dist = dist_from_pairs({{10.0, 1.0}, {60.0, 1.0}});
    SUBCASE("h == 0: sign of delta decides") {
        CHECK(model::general_win_condition(linear_spec(0.0), dist, 0.2));
        CHECK(!model::general_win_condition(linear_spec(0.0), dist, -0.2));
    }
}

TEST_CASE("window test and general condition agree for linear specs") {
    rng::SplitMix64 gen(41);
    int applicable = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto dist = random_dist(gen, 4, 60);
        const double m = (0.1 + 0.9 * gen.next_double()) / dist.x_max;
        const double c = 0.2 + 0.6 * gen.next_double();
        const double delta = -1.0 + 2.0 * gen.next_double();
        const auto spec = linear_spec(m, c);
        const auto lower = model::gip_lower_bound(dist);
        REQUIRE(lower);
        const double mid = (c / m) * delta;
        const bool window = *lower < mid && mid < 0.0;
        const bool general =
            model::general_win_condition(spec, dist, delta) && delta < 0.0;
        CHECK(window == general);
        applicable += window;
    }
    CHECK(applicable > 0);  // the comparison saw both outcomes
}

TEST_CASE("linear half-time deficit has the sign of the lead moment") {
    rng::SplitMix64 gen(43);
    for (int i = 0; i < 1000; ++i) {
        const auto dist = random_dist(gen, 3, 40);
        const double m = (0.05 + 0.9 * gen.next_double()) / dist.x_max;
        const auto spec = linear_spec(m);
        const auto shares = model::eval_halftime_shares(spec, dist);
        const auto lead = model::halftime_lead_moment(dist);
        REQUIRE(lead);
        // v_N - v_H = (2m/x_max) E[(X-x_max/2)(X-x_max)], so the deficit
        // carries the lead moment's sign whenever m > 0.
        const double diff = shares.share_N - shares.share_H;
        if (std::abs(*lead) > 1e-12) {
            CHECK((diff > 0.0) == (*lead > 0.0));
            CHECK(diff == doctest::Approx(2.0 * m / dist.x_max * *lead)
                              .epsilon(1e-9));
        }
    }
}

TEST_CASE("all five forms validate: zero-mean h, ranges, g endpoint") {
    for (const auto form : kAllForms) {
        const double s = 137.0;
        const auto spec = spec_for(form, s);
        const auto violations = model::validate_spec(spec, s);
        CAPTURE(model::form_name(form));
        CHECK(violations.empty());
        // mirrored preferences: f_H + f_N == 2c everywhere
        model::FormEval eval(spec, s);
        for (int i = 0; i <= 64; ++i) {
            const double x = s * i / 64.0;
            CHECK(eval.f_H(x) + eval.f_N(x) ==
                  doctest::Approx(2.0 * spec.c).epsilon(1e-12));
            CHECK(eval.g(x) >= -1e-12);
            CHECK(eval.g(x) <= 1.0 + 1e-12);
        }
        CHECK(eval.g(s) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(eval.h(s) - eval.h(0.0) > 0.0);
    }
}

TEST_CASE("validation catches a slope that pushes f outside [0,1]") {
    const double s = 100.0;
    const auto violations = model::validate_spec(linear_spec(0.5), s);
    CHECK(!violations.empty());
}

TEST_CASE("validation catches bad shape parameters") {
    model::ModelSpec spec;
    spec.form = model::Form::Exp1;
    spec.rate_h = -3.0;
    CHECK(!model::validate_spec(spec, 50.0).empty());
    CHECK_THROWS_AS(model::FormEval(spec, 50.0), ConfigError);
}

TEST_CASE("sharp exponential stays zero-mean and in range") {
    model::ModelSpec spec;
    spec.form = model::Form::Exp2;
    spec.rate_h = 0.5;  // x_max / 600: extreme curvature
    spec.rate_g = 2.0;
    CHECK(model::validate_spec(spec, 300.0).empty());
}

TEST_CASE("regressor transform pins the endpoints and stays monotone") {
    const double s = 150.0;
    for (const auto form : kAllForms) {
        const auto spec = spec_for(form, s);
        model::FormEval eval(spec, s);
        CHECK(eval.h_regressor(0.0) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(eval.h_regressor(s) == doctest::Approx(s).epsilon(1e-12));
        double prev = -1.0;
        for (int i = 0; i <= 100; ++i) {
            const double u = eval.h_regressor(s * i / 100.0);
            CHECK(u > prev);
            prev = u;
        }
        // h is affine in the regressor: fitting shares against u recovers
        // the same window test for every form.
        const double q = eval.h(s) - eval.h(0.0);
        for (int i = 0; i <= 10; ++i) {
            const double x = s * i / 10.0;
            CHECK(eval.h(x) == doctest::Approx(eval.h(0.0) +
                                               q * eval.h_regressor(x) / s)
                                   .epsilon(1e-9));
        }
    }
    // Linear regressor is the identity
    model::FormEval linear(linear_spec(0.001), s);
    CHECK(linear.h_regressor(42.0) == 42.0);
}

TEST_CASE("covariance window bound reduces to Var/(mean - x_max) for linear") {
    rng::SplitMix64 gen(97);
    for (int i = 0; i < 200; ++i) {
        const auto dist = random_dist(gen, 5, 80);
        model::FormEval eval(linear_spec(0.3 / dist.x_max), dist.x_max);
        double e_g = 0.0, e_u = 0.0, e_ug = 0.0;
        for (const auto& a : dist.atoms) {
            const double u = eval.h_regressor(a.distance_km);
            const double gv = eval.g(a.distance_km);
            e_g += a.weight * gv;
            e_u += a.weight * u;
            e_ug += a.weight * u * gv;
        }
        const double window_lower = (e_ug - e_u * e_g) / e_g;
        const auto lower = model::gip_lower_bound(dist);
        REQUIRE(lower);
        CHECK(window_lower == doctest::Approx(*lower).epsilon(1e-9));
        CHECK(window_lower <= 0.0);
    }
}

TEST_CASE("covariance window bound is nonpositive for every form") {
    rng::SplitMix64 gen(113);
    for (int i = 0; i < 100; ++i) {
        const auto dist = random_dist(gen, 5, 60);
        for (const auto form : kAllForms) {
            model::FormEval eval(spec_for(form, dist.x_max), dist.x_max);
            double e_g = 0.0, e_u = 0.0, e_ug = 0.0;
            for (const auto& a : dist.atoms) {
                const double u = eval.h_regressor(a.distance_km);
                const double gv = eval.g(a.distance_km);
                e_g += a.weight * gv;
                e_u += a.weight * u;
                e_ug += a.weight * u * gv;
            }
            CAPTURE(model::form_name(form));
            CHECK(e_ug - e_u * e_g <= 1e-12);
        }
    }
}

TEST_CASE("sweep rows carry the two expectations and the flag") {
    SUBCASE("h == 0 grid point reports zeros") {
        const auto dist = dist_from_pairs({{10.0, 1.0}, {80.0, 1.0}});
        const auto rows =
            model::sweep_model_params(model::Form::Linear, {{0.0, 0.0}}, dist);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].e_h == 0.0);
        CHECK(rows[0].e_gh == 0.0);
        CHECK(!rows[0].flag);
    }
    SUBCASE("point-mass distribution can never raise the flag") {
        const auto point = dist_from_pairs({{42.0, 1.0}});
        for (const auto form : kAllForms) {
            std::vector<model::SweepPoint> grid;
            for (int i = 1; i <= 20; ++i) {
                grid.push_back({form == model::Form::Linear
                                    ? -0.01 + 0.001 * i
                                    : 2.0 * i,
                                2.0 * i});
            }
            const auto rows = model::sweep_model_params(form, grid, point);
            for (const auto& row : rows) {
                CAPTURE(model::form_name(form));
                CHECK(!row.flag);
            }
        }
    }
}

TEST_CASE("linear sweep over slopes finds no turnaround on the fixture") {
    const auto fixture = fixture::make_country_fixture();
    std::vector<geo::DistanceDistribution> parts;
    for (const auto& region : fixture.settlements.regions) {
        const auto centers = geo::place_voting_centers(
            region, 1, geo::Placement::TopPopulation);
        parts.push_back(geo::distance_distribution(region, centers));
    }
    const auto dist = geo::pool_distributions(parts);
    std::vector<model::SweepPoint> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back({-1.0 + 0.05 * i, 0.0});
    const auto rows = model::sweep_model_params(model::Form::Linear, grid, dist);
    REQUIRE(rows.size() == 41);
    for (const auto& row : rows) {
        CAPTURE(row.param1);
        CHECK(!row.flag);
    }
}
