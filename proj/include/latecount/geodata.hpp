#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace latecount::geo {

struct Settlement {
    std::string id;
    std::string name;
    std::string region_id;
    double latitude = 0.0;   // degrees, [-90, 90]
    double longitude = 0.0;  // degrees, [-180, 180]
    std::int64_t population = 0;
};

struct Region {
    std::string id;
    std::string name;
    std::vector<Settlement> settlements;

    std::int64_t total_population() const;
};

struct SettlementDataset {
    std::vector<Region> regions;  // sorted by region id

    std::size_t settlement_count() const;
    const Region* find_region(const std::string& region_id) const;
};

enum class Placement { TopPopulation, WeightedKMeans };

struct LatLon {
    double latitude;
    double longitude;
};

struct VotingCenters {
    std::string region_id;
    std::vector<LatLon> centers;  // distinct coordinates
    int nvc = 1;                  // requested number of centers
    Placement strategy = Placement::TopPopulation;
};

// Population-weighted empirical law of the distance between a voter and
// the nearest major voting center. Weights are normalized to sum to 1;
// atoms with zero population are dropped. x_max is the largest distance
// present in the samples.
struct DistanceDistribution {
    struct Atom {
        double distance_km;
        double weight;  // > 0
    };
    std::vector<Atom> atoms;
    double x_max = 0.0;
    std::int64_t total_population = 0;

    double mean() const;
    double variance() const;  // two-pass
    bool degenerate() const { return x_max <= 0.0; }
};

// Great-circle distance in km, Earth radius 6371.0 km.
double haversine_km(LatLon a, LatLon b);

// Parses the settlements CSV (header: id,name,region_id,latitude,longitude,
// population). Rejects malformed rows, out-of-range coordinates, negative
// populations and duplicate ids, naming the offending line. Settlements
// with population below min_population are dropped.
SettlementDataset load_settlements(std::istream& in,
                                   const std::string& source_name,
                                   std::int64_t min_population = 0);

void write_settlements(std::ostream& out, const SettlementDataset& dataset);

// Places up to nvc distinct centers in the region. TopPopulation takes the
// most populous settlements (ties by id, ascending). WeightedKMeans runs a
// population-weighted k-means on great-circle distance, initialized from
// the TopPopulation centers and snapped to settlements, so the result is
// deterministic.
VotingCenters place_voting_centers(const Region& region, int nvc,
                                   Placement strategy);

// Distance law for one region given its centers. Errors if all populations
// are zero.
DistanceDistribution distance_distribution(const Region& region,
                                           const VotingCenters& centers);

// Pools several per-region distributions into one, reweighting by each
// part's total population.
DistanceDistribution pool_distributions(
    const std::vector<DistanceDistribution>& parts);

// Nearest-center distance of one settlement.
double nearest_center_km(const Settlement& s, const VotingCenters& centers);

}  // namespace latecount::geo
