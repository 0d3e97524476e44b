#include "latecount/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "latecount/csv.hpp"
#include "latecount/errors.hpp"
#include "latecount/random.hpp"

namespace latecount::analysis {

namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string placement_name(geo::Placement p) {
    return p == geo::Placement::TopPopulation ? "top" : "kmeans";
}

std::string mode_name(resample::Mode m) {
    return m == resample::Mode::Bootstrap ? "bootstrap" : "subsample";
}

// Shape parameters for each form: configured overrides where given,
// otherwise defaults relative to the scope distribution's largest distance.
model::ModelSpec make_form_spec(model::Form form, double c,
                                const FormParams& params, double x_max) {
    model::ModelSpec spec;
    spec.form = form;
    spec.c = c;
    spec.epsilon = params.epsilon.value_or(0.0);
    switch (form) {
        case model::Form::Linear:
            // Default: steepest slope keeping f_H/f_N inside [0,1]; prong-2
            // signs do not depend on it, prong-3 for Linear is fitted from
            // data.
            spec.slope = params.slope.value_or(
                x_max > 0.0 ? 2.0 * (std::min(c, 1.0 - c) -
                                     std::abs(spec.epsilon)) / x_max
                            : 0.0);
            break;
        case model::Form::Exp1:
            spec.rate_h = params.rate_h.value_or(x_max / 4.0);
            break;
        case model::Form::Exp2:
            spec.rate_h = params.rate_h.value_or(x_max / 4.0);
            spec.rate_g = params.rate_g.value_or(x_max / 4.0);
            break;
        case model::Form::Logarithmic:
            spec.scale = params.scale.value_or(x_max / 10.0);
            break;
        case model::Form::PowerLaw:
            spec.exponent = params.exponent.value_or(2.0);
            break;
    }
    return spec;
}

struct ScopeUnit {
    bool is_country = false;
    std::string id;  // region id, or "country"
    std::vector<const geo::Region*> regions;
};

struct LinkedRow {
    const ballots::TallyRow* row;
    const geo::Settlement* settlement;
};

struct PreparedData {
    std::vector<ScopeUnit> units;
    std::vector<LinkedRow> linked_rows;  // rows with a settlement link
};

PreparedData prepare(const RunConfig& config,
                     const geo::SettlementDataset& dataset,
                     const std::vector<ballots::TallyRow>& tallies) {
    std::map<std::string, const geo::Region*> regions_by_id;
    std::map<std::string, std::pair<const geo::Region*, const geo::Settlement*>>
        settlements_by_id;
    for (const auto& r : dataset.regions) {
        regions_by_id[r.id] = &r;
        for (const auto& s : r.settlements) {
            settlements_by_id[s.id] = {&r, &s};
        }
    }

    std::set<std::string> unmatched;
    std::set<std::string> regions_with_tallies;
    PreparedData prep;
    for (const auto& row : tallies) {
        if (!regions_by_id.count(row.region_id)) {
            unmatched.insert("tally region '" + row.region_id + "'");
            continue;
        }
        regions_with_tallies.insert(row.region_id);
        if (row.settlement_id) {
            auto it = settlements_by_id.find(*row.settlement_id);
            if (it == settlements_by_id.end() ||
                it->second.first->id != row.region_id) {
                unmatched.insert("tally settlement '" + *row.settlement_id + "'");
            } else {
                prep.linked_rows.push_back({&row, it->second.second});
            }
        }
    }
    for (const auto& r : dataset.regions) {
        if (!regions_with_tallies.count(r.id)) {
            unmatched.insert("settlement region '" + r.id + "'");
        }
    }
    if (!unmatched.empty()) {
        std::string msg = "settlements/tallies linkage mismatch:";
        for (const auto& u : unmatched) msg += " " + u + ";";
        throw DataError(msg);
    }

    if (config.scope != Scope::Country) {
        for (const auto& r : dataset.regions) {
            prep.units.push_back({false, r.id, {&r}});
        }
    }
    if (config.scope != Scope::PerRegion) {
        ScopeUnit country;
        country.is_country = true;
        country.id = "country";
        for (const auto& r : dataset.regions) country.regions.push_back(&r);
        prep.units.push_back(std::move(country));
    }
    return prep;
}

// Everything one (scope unit, nvc) pair needs for all its form cells.
struct UnitNvcInputs {
    geo::DistanceDistribution dist;
    std::vector<resample::FitPoint> fit_points;
};

UnitNvcInputs build_inputs(const RunConfig& config, const ScopeUnit& unit,
                           int nvc, const std::vector<LinkedRow>& linked_rows) {
    UnitNvcInputs inputs;
    std::vector<geo::DistanceDistribution> parts;
    std::map<std::string, double> distance_by_settlement;
    for (const geo::Region* region : unit.regions) {
        const auto centers =
            geo::place_voting_centers(*region, nvc, config.placement);
        parts.push_back(geo::distance_distribution(*region, centers));
        for (const auto& s : region->settlements) {
            distance_by_settlement[s.id] = geo::nearest_center_km(s, centers);
        }
    }
    inputs.dist = (parts.size() == 1) ? std::move(parts.front())
                                      : geo::pool_distributions(parts);

    for (const auto& lr : linked_rows) {
        if (!unit.is_country && lr.row->region_id != unit.id) continue;
        const std::int64_t two_cand = lr.row->votes_H + lr.row->votes_N;
        if (two_cand <= 0) continue;
        auto it = distance_by_settlement.find(lr.settlement->id);
        if (it == distance_by_settlement.end()) continue;
        inputs.fit_points.push_back(
            {it->second,
             static_cast<double>(lr.row->votes_H) / static_cast<double>(two_cand),
             static_cast<double>(two_cand)});
    }
    return inputs;
}

std::uint64_t task_seed(std::uint64_t base, const std::string& unit_id, int nvc) {
    return rng::splitmix64_mix(base ^ rng::splitmix64_mix(
                                          fnv1a(unit_id) +
                                          static_cast<std::uint64_t>(nvc)));
}

std::vector<CellResult> run_unit_nvc(const RunConfig& config,
                                     const ScopeUnit& unit, int nvc,
                                     const UnitNvcInputs& inputs,
                                     double delta, int* degeneracies) {
    const auto& dist = inputs.dist;
    const std::uint64_t seed = task_seed(config.plan.seed, unit.id, nvc);

    resample::ResamplePlan prong2_plan = config.plan;
    prong2_plan.seed = seed;
    if (prong2_plan.mode == resample::Mode::Subsample) {
        prong2_plan.sample_size = std::min(
            prong2_plan.sample_size, static_cast<int>(dist.atoms.size()));
        prong2_plan.sample_size = std::max(prong2_plan.sample_size, 2);
    }

    const auto m1 = model::fair_win_moment(dist);
    const auto m2 = model::halftime_lead_moment(dist);
    const auto lower = model::gip_lower_bound(dist);
    if (!m1 || !lower) ++*degeneracies;

    // Linear prong 3: the preference gradient is measured from the data, so
    // the window test runs on bootstrapped share-vs-distance fits.
    bool fit_ok = inputs.fit_points.size() >= 2;
    if (fit_ok) {
        const double x0 = inputs.fit_points.front().x;
        fit_ok = std::any_of(inputs.fit_points.begin(), inputs.fit_points.end(),
                             [&](const resample::FitPoint& p) {
                                 return p.x != x0;
                             });
    }

    std::vector<CellResult> cells;
    for (model::Form form : config.forms) {
        CellResult cell;
        cell.nvc = nvc;
        cell.form = form;
        cell.sample_size_used = prong2_plan.sample_size;
        cell.fair_win_moment = m1;
        cell.halftime_lead_moment = m2;
        cell.gip_lower_bound = lower;
        cell.prong3_points = static_cast<int>(inputs.fit_points.size());

        const model::ModelSpec spec =
            make_form_spec(form, config.c, config.form_params, dist.x_max);

        if (dist.atoms.size() < 2 || dist.degenerate()) {
            // No geography to resample; every probability is zero.
            cell.prong2.replicates = 0;
            cells.push_back(std::move(cell));
            continue;
        }

        cell.prong2 =
            (form == model::Form::Linear)
                ? resample::probability_all_geo(dist, prong2_plan)
                : resample::probability_all_geo_general(dist, prong2_plan, spec);

        // Prong 3: regress shares on the form's regressor u (u = x for
        // Linear) and test the bootstrapped intercept/slope ratio against
        // the window (Cov(u,g)/E[g], 0). For Linear that bound equals
        // Var(X)/(E[X]-x_max).
        if (delta < 0.0) {
            const model::FormEval eval(spec, dist.x_max);
            double e_g = 0.0, e_u = 0.0, e_ug = 0.0;
            for (const auto& a : dist.atoms) {
                const double u = eval.h_regressor(a.distance_km);
                const double gv = eval.g(a.distance_km);
                e_g += a.weight * gv;
                e_u += a.weight * u;
                e_ug += a.weight * u * gv;
            }
            if (fit_ok && e_g > 0.0) {
                const double window_lower = (e_ug - e_u * e_g) / e_g;
                cell.prong3_lower_bound = window_lower;
                std::vector<resample::FitPoint> points;
                points.reserve(inputs.fit_points.size());
                for (const auto& p : inputs.fit_points) {
                    points.push_back(
                        {eval.h_regressor(p.x), p.share, p.weight});
                }
                resample::ResamplePlan fit_plan;
                fit_plan.mode = resample::Mode::Bootstrap;
                fit_plan.sample_size = static_cast<int>(points.size());
                fit_plan.replicates = config.plan.replicates;
                fit_plan.seed = rng::splitmix64_mix(seed ^ 0x70726F6E6733ULL);
                const auto ratios = resample::bootstrap_c_over_m(
                    points, fit_plan, config.weighted_fit);
                const auto window = resample::probability_gip_window(
                    ratios.ratios, std::min(window_lower, 0.0), delta);
                cell.prong3_applicable = window.applicable;
                cell.prong3_fraction = window.fraction;
                cell.prong3_undefined_ratios = ratios.undefined_count;
            } else {
                ++*degeneracies;  // no usable fit or no counted mass
            }
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

}  // namespace

AnalysisReport run_analysis(const RunConfig& config_in,
                            const geo::SettlementDataset& dataset,
                            const std::vector<ballots::TallyRow>& tallies) {
    if (config_in.nvc.empty()) throw ConfigError("nvc list must not be empty");
    for (int nvc : config_in.nvc) {
        if (nvc < 1) throw ConfigError("nvc must be >= 1");
    }
    if (config_in.forms.empty()) throw ConfigError("form list must not be empty");
    if (config_in.c <= 0.0 || config_in.c >= 1.0) {
        throw ConfigError("c must lie in (0, 1)");
    }
    RunConfig config = config_in;  // report rows keep nvc ascending
    std::sort(config.nvc.begin(), config.nvc.end());
    config.nvc.erase(std::unique(config.nvc.begin(), config.nvc.end()),
                     config.nvc.end());

    const PreparedData prep = prepare(config, dataset, tallies);

    AnalysisReport report;
    report.seed = config.plan.seed;
    report.nvc = config.nvc;
    report.forms = config.forms;
    report.placement = placement_name(config.placement);
    report.mode = mode_name(config.plan.mode);
    report.sample_size = config.plan.sample_size;
    report.replicates = config.plan.replicates;
    report.c = config.c;
    report.form_params = config.form_params;
    report.min_population = config.min_population;
    report.weighted_fit = config.weighted_fit;

    report.scopes.resize(prep.units.size());
    for (std::size_t u = 0; u < prep.units.size(); ++u) {
        auto& scope = report.scopes[u];
        scope.is_country = prep.units[u].is_country;
        scope.region_id = prep.units[u].is_country ? "" : prep.units[u].id;
        scope.summary = ballots::summarize(
            tallies, prep.units[u].is_country
                         ? std::nullopt
                         : std::optional<std::string>(prep.units[u].id));
        scope.prong1 =
            tail::fair_win_probability(scope.summary.v_H, scope.summary.v_N);
        const double total = static_cast<double>(
            scope.summary.v_H + scope.summary.v_N + scope.summary.v_other);
        scope.prong1_raw = tail::fair_win_probability_shares(
            static_cast<double>(scope.summary.v_H) / total,
            static_cast<double>(scope.summary.v_N) / total, total);
        scope.cells.resize(config.nvc.size() * config.forms.size());
    }

    // (unit, nvc) tasks are independent; results land in fixed slots so the
    // report is identical however the tasks are scheduled.
    struct Task {
        std::size_t unit;
        std::size_t nvc_index;
    };
    std::vector<Task> tasks;
    for (std::size_t u = 0; u < prep.units.size(); ++u) {
        for (std::size_t k = 0; k < config.nvc.size(); ++k) {
            tasks.push_back({u, k});
        }
    }

    std::vector<int> degeneracies(tasks.size(), 0);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    const auto worker = [&]() {
        while (true) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size() || failed.load()) break;
            const auto& task = tasks[t];
            const auto& unit = prep.units[task.unit];
            const int nvc = config.nvc[task.nvc_index];
            try {
                const auto inputs =
                    build_inputs(config, unit, nvc, prep.linked_rows);
                const double delta = report.scopes[task.unit].summary.delta();
                auto cells = run_unit_nvc(config, unit, nvc, inputs, delta,
                                          &degeneracies[t]);
                for (std::size_t f = 0; f < cells.size(); ++f) {
                    report.scopes[task.unit]
                        .cells[task.nvc_index * config.forms.size() + f] =
                        std::move(cells[f]);
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failed.store(true);
                if (failure.empty()) failure = e.what();
            }
        }
    };

    int thread_count = config.threads;
    if (thread_count <= 0) {
        thread_count = static_cast<int>(std::thread::hardware_concurrency());
        if (thread_count <= 0) thread_count = 1;
    }
    thread_count = std::min<int>(thread_count, static_cast<int>(tasks.size()));
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(thread_count);
        for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw DataError(failure);

    for (int d : degeneracies) report.degeneracy_count += d;
    return report;
}

AnalysisReport run_analysis(const RunConfig& config) {
    std::ifstream settlements_in(config.settlements_path);
    if (!settlements_in) {
        throw DataError("cannot open settlements file '" +
                        config.settlements_path + "'");
    }
    const auto dataset = geo::load_settlements(
        settlements_in, config.settlements_path, config.min_population);

    std::ifstream tallies_in(config.tallies_path);
    if (!tallies_in) {
        throw DataError("cannot open tallies file '" + config.tallies_path + "'");
    }
    const auto tallies = ballots::load_tallies(tallies_in, config.tallies_path);
    return run_analysis(config, dataset, tallies);
}

geo::DistanceDistribution scope_distance_distribution(
    const geo::SettlementDataset& dataset,
    const std::optional<std::string>& region_id, int nvc,
    geo::Placement placement) {
    std::vector<geo::DistanceDistribution> parts;
    for (const auto& region : dataset.regions) {
        if (region_id && region.id != *region_id) continue;
        const auto centers = geo::place_voting_centers(region, nvc, placement);
        parts.push_back(geo::distance_distribution(region, centers));
    }
    if (parts.empty()) {
        throw DataError("no region matches scope '" +
                        region_id.value_or("country") + "'");
    }
    return parts.size() == 1 ? parts.front() : geo::pool_distributions(parts);
}

std::vector<resample::FitPoint> share_distance_points(
    const geo::SettlementDataset& dataset,
    const std::vector<ballots::TallyRow>& tallies,
    const std::optional<std::string>& region_id, int nvc,
    geo::Placement placement) {
    std::map<std::string, double> distance_by_settlement;
    for (const auto& region : dataset.regions) {
        if (region_id && region.id != *region_id) continue;
        const auto centers = geo::place_voting_centers(region, nvc, placement);
        for (const auto& s : region.settlements) {
            distance_by_settlement[s.id] = geo::nearest_center_km(s, centers);
        }
    }
    std::vector<resample::FitPoint> points;
    for (const auto& row : tallies) {
        if (region_id && row.region_id != *region_id) continue;
        if (!row.settlement_id) continue;
        const auto it = distance_by_settlement.find(*row.settlement_id);
        if (it == distance_by_settlement.end()) continue;
        const std::int64_t two_cand = row.votes_H + row.votes_N;
        if (two_cand <= 0) continue;
        points.push_back({it->second,
                          static_cast<double>(row.votes_H) /
                              static_cast<double>(two_cand),
                          static_cast<double>(two_cand)});
    }
    return points;
}

namespace {

ordered_json optional_to_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

ordered_json prong1_to_json(const tail::LogProb& two_cand,
                            const tail::LogProb& raw) {
    ordered_json j;
    j["log10"] = std::isinf(two_cand.log10_value)
                     ? ordered_json(nullptr)
                     : ordered_json(two_cand.log10_value);
    j["string"] = two_cand.to_string();
    j["asymptotic"] = two_cand.used_asymptotic;
    j["raw_log10"] = std::isinf(raw.log10_value)
                         ? ordered_json(nullptr)
                         : ordered_json(raw.log10_value);
    j["raw_string"] = raw.to_string();
    return j;
}

}  // namespace

std::string report_to_json(const AnalysisReport& report) {
    ordered_json j;
    j["schema_version"] = report.schema_version;
    j["seed"] = report.seed;
    ordered_json cfg;
    cfg["nvc"] = report.nvc;
    ordered_json forms = ordered_json::array();
    for (auto f : report.forms) forms.push_back(model::form_name(f));
    cfg["forms"] = forms;
    cfg["placement"] = report.placement;
    cfg["mode"] = report.mode;
    cfg["sample_size"] = report.sample_size;
    cfg["replicates"] = report.replicates;
    cfg["c"] = report.c;
    ordered_json model_params;
    model_params["epsilon"] = optional_to_json(report.form_params.epsilon);
    model_params["slope"] = optional_to_json(report.form_params.slope);
    model_params["rate_h"] = optional_to_json(report.form_params.rate_h);
    model_params["rate_g"] = optional_to_json(report.form_params.rate_g);
    model_params["scale"] = optional_to_json(report.form_params.scale);
    model_params["exponent"] = optional_to_json(report.form_params.exponent);
    cfg["model"] = model_params;
    cfg["min_population"] = report.min_population;
    cfg["weighted_fit"] = report.weighted_fit;
    j["config"] = cfg;
    j["degeneracies"] = report.degeneracy_count;

    ordered_json scopes = ordered_json::array();
    for (const auto& s : report.scopes) {
        ordered_json js;
        js["scope"] = s.is_country ? "country" : "region";
        js["region_id"] = s.region_id;
        ordered_json ballots_json;
        ballots_json["v_H"] = s.summary.v_H;
        ballots_json["v_N"] = s.summary.v_N;
        ballots_json["v_other"] = s.summary.v_other;
        ballots_json["V_H"] = s.summary.V_H;
        ballots_json["V_N"] = s.summary.V_N;
        ballots_json["V_other"] = s.summary.V_other;
        ballots_json["delta"] = s.summary.delta();
        const auto r = s.summary.r();
        ballots_json["r"] = r ? ordered_json(*r) : ordered_json(nullptr);
        js["ballots"] = ballots_json;
        js["prong1"] = prong1_to_json(s.prong1, s.prong1_raw);

        ordered_json cells = ordered_json::array();
        for (const auto& c : s.cells) {
            ordered_json jc;
            jc["nvc"] = c.nvc;
            jc["form"] = model::form_name(c.form);
            jc["sample_size"] = c.sample_size_used;
            ordered_json moments;
            moments["fair_win"] = optional_to_json(c.fair_win_moment);
            moments["halftime_lead"] = optional_to_json(c.halftime_lead_moment);
            moments["gip_lower_bound"] = optional_to_json(c.gip_lower_bound);
            jc["moments"] = moments;
            ordered_json p2;
            p2["fraction"] = c.prong2.fraction_both;
            p2["fraction_fair_win"] = c.prong2.fraction_first;
            p2["fraction_halftime_lead"] = c.prong2.fraction_second;
            p2["replicates"] = c.prong2.replicates;
            p2["exact"] = c.prong2.exact;
            jc["prong2"] = p2;
            ordered_json p3;
            p3["applicable"] = c.prong3_applicable;
            p3["fraction"] = c.prong3_fraction;
            p3["window_lower_bound"] = optional_to_json(c.prong3_lower_bound);
            p3["undefined_ratios"] = c.prong3_undefined_ratios;
            p3["points"] = c.prong3_points;
            jc["prong3"] = p3;
            cells.push_back(jc);
        }
        js["cells"] = cells;
        scopes.push_back(js);
    }
    j["scopes"] = scopes;
    return j.dump(2) + "\n";
}

std::string emit_choropleth(const AnalysisReport& report, Scope scope,
                            int prong) {
    if (prong != 2 && prong != 3) throw ConfigError("choropleth prong must be 2 or 3");
    std::ostringstream out;
    out << "region_id,nvc,form,p_conjecture\n";
    const auto emit_scope = [&](const ScopeResult& s, const std::string& id) {
        for (const auto& c : s.cells) {
            const double p =
                (prong == 3) ? c.prong3_fraction : c.prong2.fraction_both;
            out << csv::escape(id) << ',' << c.nvc << ','
                << model::form_name(c.form) << ',' << csv::format_double(p)
                << '\n';
        }
    };
    for (const auto& s : report.scopes) {
        if (s.is_country) continue;
        if (scope == Scope::Country) continue;
        emit_scope(s, s.region_id);
    }
    if (scope != Scope::PerRegion) {
        for (const auto& s : report.scopes) {
            if (s.is_country) emit_scope(s, "country");
        }
    }
    return out.str();
}

std::string emit_sweep(const std::vector<model::SweepRow>& rows,
                       model::Form form) {
    std::ostringstream out;
    out << "form,param1,param2,E_h,E_gh,flag\n";
    for (const auto& r : rows) {
        out << model::form_name(form) << ',' << csv::format_double(r.param1)
            << ',' << (r.has_param2 ? csv::format_double(r.param2) : "") << ','
            << csv::format_double(r.e_h) << ',' << csv::format_double(r.e_gh)
            << ',' << (r.flag ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace latecount::analysis
