#include "latecount/geodata.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "latecount/csv.hpp"
#include "latecount/errors.hpp"

namespace latecount::geo {

namespace {

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

double parse_double(const std::string& s, const std::string& what,
                    long line, const std::string& source) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(source + " line " + std::to_string(line) + ": bad " +
                        what + " '" + s + "'");
    }
}

std::int64_t parse_int(const std::string& s, const std::string& what,
                       long line, const std::string& source) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(source + " line " + std::to_string(line) + ": bad " +
                        what + " '" + s + "'");
    }
}

}  // namespace

std::int64_t Region::total_population() const {
    std::int64_t total = 0;
    for (const auto& s : settlements) total += s.population;
    return total;
}

std::size_t SettlementDataset::settlement_count() const {
    std::size_t n = 0;
    for (const auto& r : regions) n += r.settlements.size();
    return n;
}

const Region* SettlementDataset::find_region(const std::string& region_id) const {
    for (const auto& r : regions) {
        if (r.id == region_id) return &r;
    }
    return nullptr;
}

double haversine_km(LatLon a, LatLon b) {
    const double lat1 = a.latitude * kDegToRad;
    const double lat2 = b.latitude * kDegToRad;
    const double dlat = (b.latitude - a.latitude) * kDegToRad;
    const double dlon = (b.longitude - a.longitude) * kDegToRad;
    const double sa = std::sin(dlat / 2.0);
    const double sb = std::sin(dlon / 2.0);
    double t = sa * sa + std::cos(lat1) * std::cos(lat2) * sb * sb;
    if (t > 1.0) t = 1.0;  // keep asin in range
    if (t < 0.0) t = 0.0;
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(t));
}

SettlementDataset load_settlements(std::istream& in,
                                   const std::string& source_name,
                                   std::int64_t min_population) {
    csv::Table table = csv::read(in, source_name);
    const std::size_t c_id = csv::column(table, "id", source_name);
    const std::size_t c_name = csv::column(table, "name", source_name);
    const std::size_t c_region = csv::column(table, "region_id", source_name);
    const std::size_t c_lat = csv::column(table, "latitude", source_name);
    const std::size_t c_lon = csv::column(table, "longitude", source_name);
    const std::size_t c_pop = csv::column(table, "population", source_name);

    if (table.rows.empty()) {
        throw DataError(source_name + ": no settlement rows");
    }

    std::set<std::string> seen_ids;
    std::map<std::string, std::vector<Settlement>> by_region;
    for (const auto& row : table.rows) {
        if (row.fields.size() != table.header.size()) {
            throw DataError(source_name + " line " + std::to_string(row.line) +
                            ": expected " + std::to_string(table.header.size()) +
                            " fields, got " + std::to_string(row.fields.size()));
        }
        Settlement s;
        s.id = row.fields[c_id];
        s.name = row.fields[c_name];
        s.region_id = row.fields[c_region];
        s.latitude = parse_double(row.fields[c_lat], "latitude", row.line, source_name);
        s.longitude = parse_double(row.fields[c_lon], "longitude", row.line, source_name);
        s.population = parse_int(row.fields[c_pop], "population", row.line, source_name);
        if (s.id.empty() || s.region_id.empty()) {
            throw DataError(source_name + " line " + std::to_string(row.line) +
                            ": empty id or region_id");
        }
        if (s.latitude < -90.0 || s.latitude > 90.0) {
            throw DataError(source_name + " line " + std::to_string(row.line) +
                            ": latitude out of range");
        }
        if (s.longitude < -180.0 || s.longitude > 180.0) {
            throw DataError(source_name + " line " + std::to_string(row.line) +
                            ": longitude out of range");
        }
        if (s.population < 0) {
            throw DataError(source_name + " line " + std::to_string(row.line) +
                            ": population must be nonnegative, got " +
                            row.fields[c_pop]);
        }
        if (!seen_ids.insert(s.id).second) {
            throw DataError(source_name + " line " + std::to_string(row.line) +
                            ": duplicate settlement id '" + s.id + "'");
        }
        if (s.population < min_population) continue;
        by_region[s.region_id].push_back(std::move(s));
    }

    SettlementDataset dataset;
    for (auto& [region_id, settlements] : by_region) {
        Region r;
        r.id = region_id;
        r.name = region_id;
        r.settlements = std::move(settlements);
        dataset.regions.push_back(std::move(r));
    }
    return dataset;
}

void write_settlements(std::ostream& out, const SettlementDataset& dataset) {
    out << "id,name,region_id,latitude,longitude,population\n";
    for (const auto& r : dataset.regions) {
        for (const auto& s : r.settlements) {
            out << csv::escape(s.id) << ',' << csv::escape(s.name) << ','
                << csv::escape(s.region_id) << ','
                << csv::format_double(s.latitude) << ','
                << csv::format_double(s.longitude) << ','
                << s.population << '\n';
        }
    }
}

namespace {

// Most populous settlements first; ties broken by id ascending.
std::vector<const Settlement*> by_population(const Region& region) {
    std::vector<const Settlement*> order;
    order.reserve(region.settlements.size());
    for (const auto& s : region.settlements) order.push_back(&s);
    std::sort(order.begin(), order.end(),
              [](const Settlement* a, const Settlement* b) {
                  if (a->population != b->population)
                      return a->population > b->population;
                  return a->id < b->id;
              });
    return order;
}

std::vector<LatLon> top_population_centers(const Region& region, int nvc) {
    auto order = by_population(region);
    std::vector<LatLon> centers;
    std::set<std::pair<double, double>> used;
    for (const Settlement* s : order) {
        if (static_cast<int>(centers.size()) >= nvc) break;
        auto key = std::make_pair(s->latitude, s->longitude);
        if (!used.insert(key).second) continue;  // skip coordinate duplicates
        centers.push_back(LatLon{s->latitude, s->longitude});
    }
    return centers;
}

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

Vec3 to_cartesian(LatLon p) {
    const double lat = p.latitude * kDegToRad;
    const double lon = p.longitude * kDegToRad;
    return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
            std::sin(lat)};
}

std::vector<LatLon> weighted_kmeans_centers(const Region& region, int nvc) {
    std::vector<LatLon> centers = top_population_centers(region, nvc);
    const int k = static_cast<int>(centers.size());
    const auto& pts = region.settlements;
    std::vector<int> assign(pts.size(), -1);

    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            LatLon p{pts[i].latitude, pts[i].longitude};
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                double d = haversine_km(p, centers[c]);
                if (d < best_d - 1e-12) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        // Population-weighted Cartesian centroid per cluster, snapped to the
        // nearest settlement not already holding another center.
        std::vector<Vec3> sums(k);
        std::vector<double> mass(k, 0.0);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double w = static_cast<double>(pts[i].population);
            if (w <= 0.0) continue;
            Vec3 v = to_cartesian(LatLon{pts[i].latitude, pts[i].longitude});
            sums[assign[i]].x += w * v.x;
            sums[assign[i]].y += w * v.y;
            sums[assign[i]].z += w * v.z;
            mass[assign[i]] += w;
        }
        std::set<std::string> taken;
        std::vector<LatLon> next(centers);
        for (int c = 0; c < k; ++c) {
            LatLon target = centers[c];
            if (mass[c] > 0.0) {
                const double norm = std::sqrt(sums[c].x * sums[c].x +
                                              sums[c].y * sums[c].y +
                                              sums[c].z * sums[c].z);
                if (norm > 0.0) {
                    target.latitude = std::asin(sums[c].z / norm) / kDegToRad;
                    target.longitude =
                        std::atan2(sums[c].y, sums[c].x) / kDegToRad;
                }
            }
            const Settlement* snap = nullptr;
            double snap_d = std::numeric_limits<double>::infinity();
            for (const auto& s : pts) {
                if (taken.count(s.id)) continue;
                double d = haversine_km(target, LatLon{s.latitude, s.longitude});
                if (d < snap_d - 1e-12 ||
                    (std::abs(d - snap_d) <= 1e-12 && snap && s.id < snap->id)) {
                    snap_d = d;
                    snap = &s;
                }
            }
            if (snap) {
                taken.insert(snap->id);
                next[c] = LatLon{snap->latitude, snap->longitude};
            }
        }
        centers = std::move(next);
    }
    return centers;
}

}  // namespace

VotingCenters place_voting_centers(const Region& region, int nvc,
                                   Placement strategy) {
    if (region.settlements.empty()) {
        throw DataError("region '" + region.id + "' has no settlements");
    }
    if (nvc < 1) throw ConfigError("nvc must be >= 1");
    const int effective =
        std::min<int>(nvc, static_cast<int>(region.settlements.size()));
    VotingCenters vc;
    vc.region_id = region.id;
    vc.nvc = nvc;
    vc.strategy = strategy;
    if (strategy == Placement::TopPopulation ||
        effective == static_cast<int>(region.settlements.size())) {
        vc.centers = top_population_centers(region, effective);
    } else {
        vc.centers = weighted_kmeans_centers(region, effective);
    }
    return vc;
}

double nearest_center_km(const Settlement& s, const VotingCenters& centers) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centers.centers) {
        best = std::min(best, haversine_km(LatLon{s.latitude, s.longitude}, c));
    }
    return best;
}

double DistanceDistribution::mean() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.weight * a.distance_km;
    return m;
}

double DistanceDistribution::variance() const {
    const double m = mean();
    double v = 0.0;
    for (const auto& a : atoms) {
        const double d = a.distance_km - m;
        v += a.weight * d * d;
    }
    return v;
}

DistanceDistribution distance_distribution(const Region& region,
                                           const VotingCenters& centers) {
    DistanceDistribution dist;
    double total = 0.0;
    for (const auto& s : region.settlements) {
        dist.total_population += s.population;
        total += static_cast<double>(s.population);
    }
    if (total <= 0.0) {
        throw DataError("region '" + region.id +
                        "' has zero total population: no distance mass");
    }
    for (const auto& s : region.settlements) {
        if (s.population <= 0) continue;  // zero weight, not an atom
        const double x = nearest_center_km(s, centers);
        dist.atoms.push_back({x, static_cast<double>(s.population) / total});
        dist.x_max = std::max(dist.x_max, x);
    }
    // Pin the weight sum to 1 exactly up to rounding.
    double sum = 0.0;
    for (const auto& a : dist.atoms) sum += a.weight;
    for (auto& a : dist.atoms) a.weight /= sum;
    return dist;
}

DistanceDistribution pool_distributions(
    const std::vector<DistanceDistribution>& parts) {
    DistanceDistribution pooled;
    double total = 0.0;
    for (const auto& p : parts) {
        pooled.total_population += p.total_population;
        total += static_cast<double>(p.total_population);
    }
    if (total <= 0.0) {
        throw DataError("pooled distribution has zero total population");
    }
    for (const auto& p : parts) {
        const double share = static_cast<double>(p.total_population) / total;
        for (const auto& a : p.atoms) {
            pooled.atoms.push_back({a.distance_km, a.weight * share});
            pooled.x_max = std::max(pooled.x_max, a.distance_km);
        }
    }
    double sum = 0.0;
    for (const auto& a : pooled.atoms) sum += a.weight;
    for (auto& a : pooled.atoms) a.weight /= sum;
    return pooled;
}

}  // namespace latecount::geo
