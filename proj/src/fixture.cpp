#include "latecount/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "latecount/errors.hpp"
#include "latecount/random.hpp"

namespace latecount::fixture {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::uint64_t kFixtureSeed = 20171126;

struct Builder {
    rng::SplitMix64 gen{kFixtureSeed};
    std::map<std::string, std::vector<geo::Settlement>> regions;
    std::vector<ballots::TallyRow> tallies;
    int next_settlement = 1;
    int next_unit = 1;

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * gen.next_double();
    }

    // Offset `km` from (lat, lon) along a bearing, small-angle approximation
    // (plenty for synthetic data a few degrees wide).
    geo::LatLon offset(geo::LatLon origin, double km, double bearing_rad) {
        const double dlat = km * std::cos(bearing_rad) / 111.2;
        const double dlon = km * std::sin(bearing_rad) /
                            (111.2 * std::cos(origin.latitude * kPi / 180.0));
        return {origin.latitude + dlat, origin.longitude + dlon};
    }

    std::string add_settlement(const std::string& region_id,
                               const std::string& name, geo::LatLon at,
                               std::int64_t population) {
        geo::Settlement s;
        char id[16];
        std::snprintf(id, sizeof(id), "S%04d", next_settlement++);
        s.id = id;
        s.name = name;
        s.region_id = region_id;
        s.latitude = at.latitude;
        s.longitude = at.longitude;
        s.population = population;
        regions[region_id].push_back(s);
        return s.id;
    }

    // One tally unit; large units are split into an early and a late row so
    // the half-time cut runs through them the way a halted count would.
    void add_unit(const std::string& region_id, const std::string& settlement_id,
                  std::int64_t electorate, double share_early,
                  double share_late, bool single_row_early) {
        const std::int64_t votes =
            std::max<std::int64_t>(20, static_cast<std::int64_t>(
                                           std::llround(electorate * 0.55)));
        const auto emit = [&](std::int64_t total, double share_h, bool early) {
            if (total <= 0) return;
            ballots::TallyRow row;
            char id[16];
            std::snprintf(id, sizeof(id), "U%04d", next_unit++);
            row.region_id = region_id;
            row.unit_id = id;
            row.settlement_id = settlement_id;
            row.counted_by_halftime = early;
            const auto other = static_cast<std::int64_t>(std::llround(total * 0.10));
            const std::int64_t two_cand = total - other;
            row.votes_other = other;
            row.votes_H = static_cast<std::int64_t>(
                std::llround(two_cand * std::clamp(share_h, 0.02, 0.98)));
            row.votes_N = two_cand - row.votes_H;
            tallies.push_back(std::move(row));
        };
        if (votes >= 2000) {
            const auto early_votes = static_cast<std::int64_t>(
                std::llround(votes * 0.55));
            emit(early_votes, share_early, true);
            emit(votes - early_votes, share_late, false);
        } else {
            emit(votes, single_row_early ? share_early : share_late,
                 single_row_early);
        }
    }
};

void build_concentrated_region(Builder& b, const std::string& region_id,
                               geo::LatLon anchor, int salt) {
    // Almost everyone lives in the main city or close to it.
    const std::int64_t city_pop = 140000 + 3517 * salt;
    const auto city = b.add_settlement(region_id, region_id + " city", anchor,
                                       city_pop);
    // Incumbent share drops gently with distance; the late-counted slice of
    // every unit leans to the incumbent regardless of where it is.
    const auto share_early = [&](double x) {
        return 0.468 - 0.0005 * x + b.uniform(-0.012, 0.012);
    };
    const auto share_late = [&](double x) {
        return 0.556 - 0.0005 * x + b.uniform(-0.012, 0.012);
    };
    b.add_unit(region_id, city, city_pop, share_early(0.0), share_late(0.0), true);

    const double town_bearing = b.uniform(0.0, 2.0 * kPi);
    const double town_km = b.uniform(14.0, 20.0);
    const std::int64_t town_pop = 24000 + 311 * salt;
    const auto town = b.add_settlement(
        region_id, region_id + " town", b.offset(anchor, town_km, town_bearing),
        town_pop);
    b.add_unit(region_id, town, town_pop, share_early(town_km),
               share_late(town_km), true);

    for (int cluster = 0; cluster < 6; ++cluster) {
        std::string link;
        std::int64_t cluster_pop = 0;
        double link_km = 0.0;
        for (int v = 0; v < 4; ++v) {
            const double km = b.uniform(3.0, 18.0);
            const double bearing = b.uniform(0.0, 2.0 * kPi);
            const auto pop = static_cast<std::int64_t>(b.uniform(350, 900));
            const auto id = b.add_settlement(
                region_id, region_id + " village", b.offset(anchor, km, bearing),
                pop);
            cluster_pop += pop;
            if (v == 0) {
                link = id;
                link_km = km;
            }
        }
        b.add_unit(region_id, link, cluster_pop, share_early(link_km),
                   share_late(link_km), cluster % 2 == 0);
    }

    // A few remote hamlets stretch x_max without moving any real mass.
    std::string hamlet_link;
    std::int64_t hamlet_pop = 0;
    double hamlet_km = 0.0;
    for (int hamlet = 0; hamlet < 3; ++hamlet) {
        const double km = b.uniform(60.0, 90.0);
        const double bearing = b.uniform(0.0, 2.0 * kPi);
        const auto pop = static_cast<std::int64_t>(b.uniform(80, 200));
        const auto id = b.add_settlement(region_id, region_id + " hamlet",
                                         b.offset(anchor, km, bearing), pop);
        hamlet_pop += pop;
        if (hamlet == 0) {
            hamlet_link = id;
            hamlet_km = km;
        }
    }
    b.add_unit(region_id, hamlet_link, hamlet_pop, share_early(hamlet_km),
               share_late(hamlet_km), true);
}

void build_sparse_region(Builder& b, const std::string& region_id,
                         geo::LatLon anchor, int salt) {
    // Most of the (small) population lives in far settlements; the
    // incumbent share rises with distance here, noisily.
    const auto share_early = [&](double x) {
        return 0.430 + 0.0009 * x + b.uniform(-0.02, 0.02);
    };
    const auto share_late = [&](double x) {
        return 0.500 + 0.0009 * x + b.uniform(-0.02, 0.02);
    };

    const std::int64_t town_pop = 4000 + 97 * salt;
    const auto town = b.add_settlement(region_id, region_id + " town", anchor,
                                       town_pop);
    b.add_unit(region_id, town, town_pop, share_early(0.0), share_late(0.0), true);

    std::string near_link;
    std::int64_t near_pop = 0;
    double near_km = 0.0;
    for (int v = 0; v < 7; ++v) {
        const double km = b.uniform(4.0, 14.0);
        const double bearing = b.uniform(0.0, 2.0 * kPi);
        const auto pop = static_cast<std::int64_t>(b.uniform(180, 320));
        const auto id = b.add_settlement(region_id, region_id + " village",
                                         b.offset(anchor, km, bearing), pop);
        near_pop += pop;
        if (v == 0) {
            near_link = id;
            near_km = km;
        }
    }
    b.add_unit(region_id, near_link, near_pop, share_early(near_km),
               share_late(near_km), true);

    // Two far pockets of settlements around 95-125 km out.
    for (int pocket = 0; pocket < 2; ++pocket) {
        const double pocket_bearing = pocket == 0 ? 1.0 : 3.6;
        for (int unit = 0; unit < 3; ++unit) {
            std::string link;
            std::int64_t unit_pop = 0;
            double link_km = 0.0;
            for (int v = 0; v < 3 + (unit % 2); ++v) {
                const double km = b.uniform(95.0, 125.0);
                const double bearing = pocket_bearing + b.uniform(-0.25, 0.25);
                const auto pop = static_cast<std::int64_t>(b.uniform(700, 1300));
                const auto id = b.add_settlement(
                    region_id, region_id + " outpost",
                    b.offset(anchor, km, bearing), pop);
                unit_pop += pop;
                if (v == 0) {
                    link = id;
                    link_km = km;
                }
            }
            b.add_unit(region_id, link, unit_pop, share_early(link_km),
                       share_late(link_km), pocket == 0 && unit == 0);
        }
    }
}

}  // namespace

Fixture make_country_fixture() {
    Builder b;
    const bool sparse[18] = {false, false, false, false, true,  false,
                             false, false, false, false, true,  false,
                             false, false, false, true,  false, false};
    for (int i = 0; i < 18; ++i) {
        char id[8];
        std::snprintf(id, sizeof(id), "R%02d", i + 1);
        const geo::LatLon anchor{13.4 + 0.55 * (i / 6),
                                 -88.8 + 0.85 * (i % 6)};
        if (sparse[i]) {
            build_sparse_region(b, id, anchor, i);
        } else {
            build_concentrated_region(b, id, anchor, i);
        }
    }

    Fixture fx;
    for (auto& [region_id, settlements] : b.regions) {
        geo::Region r;
        r.id = region_id;
        r.name = region_id;
        r.settlements = std::move(settlements);
        fx.settlements.regions.push_back(std::move(r));
    }
    fx.tallies = std::move(b.tallies);
    return fx;
}

void write_fixture(const Fixture& fixture, const std::string& dir) {
    {
        std::ofstream out(dir + "/settlements.csv");
        if (!out) throw DataError("cannot write " + dir + "/settlements.csv");
        geo::write_settlements(out, fixture.settlements);
    }
    {
        std::ofstream out(dir + "/tallies.csv");
        if (!out) throw DataError("cannot write " + dir + "/tallies.csv");
        ballots::write_tallies(out, fixture.tallies);
    }
}

}  // namespace latecount::fixture
