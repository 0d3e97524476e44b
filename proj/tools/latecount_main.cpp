// latecount - tests the "remote voters were counted late" defense of a
// two-candidate vote-count turnaround against settlement and tally data.

#include <cmath>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "latecount/analysis.hpp"
#include "latecount/csv.hpp"
#include "latecount/errors.hpp"
#include "latecount/fixture.hpp"

namespace {

using latecount::ConfigError;
using latecount::DataError;
namespace analysis = latecount::analysis;
namespace model = latecount::model;

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitDegenerate = 3;

struct AnalyzeOptions {
    std::string config_path;
    std::string settlements;
    std::string tallies;
    std::vector<int> nvc{1, 3, 5};
    std::string placement = "top";
    std::vector<std::string> forms{"linear"};
    std::string scope = "both";
    std::string mode = "subsample";
    int sample_size = 100;
    int replicates = 10000;
    std::uint64_t seed = 42;
    double c = 0.5;
    std::int64_t min_population = 0;
    bool unweighted_fit = false;
    int threads = 0;
    std::string out = "-";
    std::string choropleth;
    int choropleth_prong = 3;
    analysis::FormParams form_params;  // config-file only ("model" block)
};

struct SweepOptions {
    std::string settlements;
    int nvc = 1;
    std::string placement = "top";
    std::string form;
    double grid_min = 0.0;
    double grid_max = 0.0;
    int grid_points = 41;
    bool log_grid = false;
    double c = 0.5;
    std::int64_t min_population = 0;
    std::string out = "-";
};

struct StreamOptions {
    std::string settlements;
    std::string tallies;  // ratios only
    std::string region;   // empty = country
    int nvc = 1;
    std::string placement = "top";
    std::string mode = "subsample";
    int sample_size = 100;
    int replicates = 10000;
    std::uint64_t seed = 42;
    std::int64_t min_population = 0;
    bool unweighted_fit = false;
    std::string out = "-";
};

std::vector<model::Form> parse_forms(const std::vector<std::string>& names) {
    std::vector<model::Form> forms;
    for (const auto& name : names) {
        const auto form = model::parse_form(name);
        if (!form) throw ConfigError("unknown form '" + name + "'");
        forms.push_back(*form);
    }
    return forms;
}

analysis::Scope parse_scope(const std::string& name) {
    if (name == "region") return analysis::Scope::PerRegion;
    if (name == "country") return analysis::Scope::Country;
    if (name == "both") return analysis::Scope::Both;
    throw ConfigError("unknown scope '" + name + "'");
}

latecount::geo::Placement parse_placement(const std::string& name) {
    if (name == "top") return latecount::geo::Placement::TopPopulation;
    if (name == "kmeans") return latecount::geo::Placement::WeightedKMeans;
    throw ConfigError("unknown placement '" + name + "'");
}

latecount::resample::Mode parse_mode(const std::string& name) {
    if (name == "bootstrap") return latecount::resample::Mode::Bootstrap;
    if (name == "subsample") return latecount::resample::Mode::Subsample;
    throw ConfigError("unknown mode '" + name + "'");
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << content;
}

// Fills options not given on the command line from a JSON config file.
// Keys mirror the long flag names with '-' replaced by '_'.
void apply_config_file(const std::string& path, const CLI::App* cmd,
                       AnalyzeOptions* opts) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json cfg;
    try {
        in >> cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config file must be a JSON object");

    const auto given = [&](const std::string& flag) {
        return cmd->get_option(flag)->count() > 0;
    };
    try {
        for (const auto& [key, value] : cfg.items()) {
            if (key == "settlements") {
                if (!given("--settlements")) opts->settlements = value;
            } else if (key == "tallies") {
                if (!given("--tallies")) opts->tallies = value;
            } else if (key == "nvc") {
                if (!given("--nvc")) opts->nvc = value.get<std::vector<int>>();
            } else if (key == "placement") {
                if (!given("--placement")) opts->placement = value;
            } else if (key == "form") {
                if (!given("--form")) {
                    opts->forms = value.is_array()
                                      ? value.get<std::vector<std::string>>()
                                      : std::vector<std::string>{value};
                }
            } else if (key == "scope") {
                if (!given("--scope")) opts->scope = value;
            } else if (key == "mode") {
                if (!given("--mode")) opts->mode = value;
            } else if (key == "sample_size") {
                if (!given("--sample-size")) opts->sample_size = value;
            } else if (key == "replicates") {
                if (!given("--replicates")) opts->replicates = value;
            } else if (key == "seed") {
                if (!given("--seed")) opts->seed = value;
            } else if (key == "c") {
                if (!given("--c")) opts->c = value;
            } else if (key == "min_population") {
                if (!given("--min-population")) opts->min_population = value;
            } else if (key == "unweighted_fit") {
                if (!given("--unweighted-fit")) opts->unweighted_fit = value;
            } else if (key == "threads") {
                if (!given("--threads")) opts->threads = value;
            } else if (key == "out") {
                if (!given("--out")) opts->out = value;
            } else if (key == "choropleth") {
                if (!given("--choropleth")) opts->choropleth = value;
            } else if (key == "choropleth_prong") {
                if (!given("--choropleth-prong")) opts->choropleth_prong = value;
            } else if (key == "model") {
                if (!value.is_object()) {
                    throw ConfigError("config file: 'model' must be an object");
                }
                for (const auto& [pkey, pvalue] : value.items()) {
                    if (pkey == "epsilon") opts->form_params.epsilon = pvalue;
                    else if (pkey == "slope") opts->form_params.slope = pvalue;
                    else if (pkey == "rate_h") opts->form_params.rate_h = pvalue;
                    else if (pkey == "rate_g") opts->form_params.rate_g = pvalue;
                    else if (pkey == "scale") opts->form_params.scale = pvalue;
                    else if (pkey == "exponent") opts->form_params.exponent = pvalue;
                    else throw ConfigError("config file: unknown model key '" +
                                           pkey + "'");
                }
            } else {
                throw ConfigError("config file: unknown key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
}

int run_analyze(const AnalyzeOptions& opts) {
    if (opts.settlements.empty() || opts.tallies.empty()) {
        throw ConfigError("--settlements and --tallies are required");
    }
    analysis::RunConfig config;
    config.settlements_path = opts.settlements;
    config.tallies_path = opts.tallies;
    config.nvc = opts.nvc;
    config.placement = parse_placement(opts.placement);
    config.forms = parse_forms(opts.forms);
    config.scope = parse_scope(opts.scope);
    config.plan.mode = parse_mode(opts.mode);
    config.plan.sample_size = opts.sample_size;
    config.plan.replicates = opts.replicates;
    config.plan.seed = opts.seed;
    config.c = opts.c;
    config.form_params = opts.form_params;
    config.min_population = opts.min_population;
    config.weighted_fit = !opts.unweighted_fit;
    config.threads = opts.threads;

    const auto report = analysis::run_analysis(config);
    const std::string json = analysis::report_to_json(report);
    if (opts.out.empty() || opts.out == "-") {
        std::cout << json;
    } else {
        write_file(opts.out, json);
    }
    if (!opts.choropleth.empty()) {
        write_file(opts.choropleth,
                   analysis::emit_choropleth(report, config.scope,
                                             opts.choropleth_prong));
    }
    if (report.degeneracy_count > 0) {
        std::cerr << "warning: " << report.degeneracy_count
                  << " cell(s) hit a numeric degeneracy (see report)\n";
        return kExitDegenerate;
    }
    return kExitOk;
}

int run_sweep(const SweepOptions& opts) {
    const auto form = model::parse_form(opts.form);
    if (!form) throw ConfigError("unknown form '" + opts.form + "'");
    if (opts.grid_points < 2) throw ConfigError("--grid-points must be >= 2");
    if (opts.log_grid && (opts.grid_min <= 0.0 || opts.grid_max <= 0.0)) {
        throw ConfigError("--log-grid needs positive grid bounds");
    }

    std::ifstream in(opts.settlements);
    if (!in) {
        throw DataError("cannot open settlements file '" + opts.settlements + "'");
    }
    const auto dataset = latecount::geo::load_settlements(
        in, opts.settlements, opts.min_population);
    std::vector<latecount::geo::DistanceDistribution> parts;
    for (const auto& region : dataset.regions) {
        const auto centers = latecount::geo::place_voting_centers(
            region, opts.nvc, parse_placement(opts.placement));
        parts.push_back(latecount::geo::distance_distribution(region, centers));
    }
    const auto dist = parts.size() == 1
                          ? parts.front()
                          : latecount::geo::pool_distributions(parts);

    const auto value_at = [&](int i) {
        const double t = static_cast<double>(i) / (opts.grid_points - 1);
        if (opts.log_grid) {
            return opts.grid_min * std::pow(opts.grid_max / opts.grid_min, t);
        }
        return opts.grid_min + (opts.grid_max - opts.grid_min) * t;
    };
    std::vector<model::SweepPoint> grid;
    if (*form == model::Form::Exp2) {
        for (int i = 0; i < opts.grid_points; ++i) {
            for (int k = 0; k < opts.grid_points; ++k) {
                grid.push_back({value_at(i), value_at(k)});
            }
        }
    } else {
        for (int i = 0; i < opts.grid_points; ++i) {
            grid.push_back({value_at(i), 0.0});
        }
    }

    const auto rows = model::sweep_model_params(*form, grid, dist, opts.c);
    const std::string csv = analysis::emit_sweep(rows, *form);
    if (opts.out.empty() || opts.out == "-") {
        std::cout << csv;
    } else {
        write_file(opts.out, csv);
    }
    return kExitOk;
}

std::string emit_or_print(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        write_file(out_path, text);
    }
    return out_path;
}

latecount::geo::SettlementDataset load_dataset(const StreamOptions& opts) {
    std::ifstream in(opts.settlements);
    if (!in) {
        throw DataError("cannot open settlements file '" + opts.settlements + "'");
    }
    return latecount::geo::load_settlements(in, opts.settlements,
                                            opts.min_population);
}

std::optional<std::string> scope_of(const StreamOptions& opts) {
    return opts.region.empty() ? std::nullopt
                               : std::optional<std::string>(opts.region);
}

// Per-replicate moments of the resampled distance law, one CSV row each.
int run_diagnostics(const StreamOptions& opts) {
    const auto dataset = load_dataset(opts);
    const auto dist = analysis::scope_distance_distribution(
        dataset, scope_of(opts), opts.nvc, parse_placement(opts.placement));
    latecount::resample::ResamplePlan plan;
    plan.mode = parse_mode(opts.mode);
    plan.sample_size = opts.sample_size;
    plan.replicates = opts.replicates;
    plan.seed = opts.seed;
    const auto rows = latecount::resample::replicate_moments(dist, plan);
    std::string csv = "replicate,mean_excess,lead_moment,fair_win,halftime_lead\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        csv += std::to_string(i) + ',' +
               latecount::csv::format_double(rows[i].mean_excess) + ',' +
               latecount::csv::format_double(rows[i].lead_moment) + ',' +
               (rows[i].mean_excess > 0.0 ? '1' : '0') + std::string(1, ',') +
               (rows[i].lead_moment > 0.0 ? '1' : '0') + '\n';
    }
    emit_or_print(opts.out, csv);
    return kExitOk;
}

// Bootstrapped intercept/slope ratios from the share-vs-distance fits.
int run_ratios(const StreamOptions& opts) {
    if (opts.tallies.empty()) throw ConfigError("--tallies is required");
    const auto dataset = load_dataset(opts);
    std::ifstream in(opts.tallies);
    if (!in) throw DataError("cannot open tallies file '" + opts.tallies + "'");
    const auto tallies = latecount::ballots::load_tallies(in, opts.tallies);
    const auto points = analysis::share_distance_points(
        dataset, tallies, scope_of(opts), opts.nvc,
        parse_placement(opts.placement));
    latecount::resample::ResamplePlan plan;
    plan.mode = parse_mode(opts.mode);
    plan.sample_size = opts.sample_size;
    plan.replicates = opts.replicates;
    plan.seed = opts.seed;
    const auto set = latecount::resample::bootstrap_c_over_m(
        points, plan, !opts.unweighted_fit);
    std::string csv = "ratio\n";
    for (double rho : set.ratios) {
        csv += latecount::csv::format_double(rho) + '\n';
    }
    emit_or_print(opts.out, csv);
    if (set.undefined_count > 0) {
        std::cerr << set.undefined_count << " of " << set.replicates
                  << " replicates had no defined ratio\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "latecount: probability that a late-count turnaround between two "
        "candidates was fair, from settlement and tally data"};
    app.require_subcommand(1);

    AnalyzeOptions aopts;
    CLI::App* analyze = app.add_subcommand(
        "analyze", "run the three-pronged analysis and emit a JSON report");
    analyze->add_option("--config", aopts.config_path,
                        "JSON config file; explicit flags override it");
    analyze->add_option("--settlements", aopts.settlements, "settlements CSV");
    analyze->add_option("--tallies", aopts.tallies, "tallies CSV");
    analyze->add_option("--nvc", aopts.nvc, "voting centers per region")
        ->delimiter(',');
    analyze->add_option("--placement", aopts.placement, "top | kmeans");
    analyze->add_option("--form", aopts.forms,
                        "model forms: linear,log,power,exp1,exp2")
        ->delimiter(',');
    analyze->add_option("--scope", aopts.scope, "region | country | both");
    analyze->add_option("--mode", aopts.mode, "bootstrap | subsample");
    analyze->add_option("--sample-size", aopts.sample_size,
                        "atoms per replicate (N)");
    analyze->add_option("--replicates", aopts.replicates, "replicates (B)");
    analyze->add_option("--seed", aopts.seed, "resampling seed");
    analyze->add_option("--c", aopts.c, "axis of reflection for f_H/f_N");
    analyze->add_option("--min-population", aopts.min_population,
                        "drop settlements below this size");
    analyze->add_flag("--unweighted-fit", aopts.unweighted_fit,
                      "ignore vote totals in share fits");
    analyze->add_option("--threads", aopts.threads, "worker threads (0 = auto)");
    analyze->add_option("--out", aopts.out, "report path ('-' = stdout)");
    analyze->add_option("--choropleth", aopts.choropleth,
                        "also write this per-region CSV");
    analyze->add_option("--choropleth-prong", aopts.choropleth_prong,
                        "probability column: 2 or 3");

    SweepOptions sopts;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "tabulate E[h] and E[gh] over a model parameter grid");
    sweep->add_option("--settlements", sopts.settlements, "settlements CSV")
        ->required();
    sweep->add_option("--nvc", sopts.nvc, "voting centers per region");
    sweep->add_option("--placement", sopts.placement, "top | kmeans");
    sweep->add_option("--form", sopts.form, "linear|log|power|exp1|exp2")
        ->required();
    sweep->add_option("--grid-min", sopts.grid_min, "first grid value")
        ->required();
    sweep->add_option("--grid-max", sopts.grid_max, "last grid value")
        ->required();
    sweep->add_option("--grid-points", sopts.grid_points, "points per axis");
    sweep->add_flag("--log-grid", sopts.log_grid, "log-spaced grid");
    sweep->add_option("--c", sopts.c, "axis of reflection");
    sweep->add_option("--min-population", sopts.min_population,
                      "drop settlements below this size");
    sweep->add_option("--out", sopts.out, "CSV path ('-' = stdout)");

    const auto add_stream_options = [](CLI::App* cmd, StreamOptions* opts,
                                       bool with_tallies) {
        cmd->add_option("--settlements", opts->settlements, "settlements CSV")
            ->required();
        if (with_tallies) {
            cmd->add_option("--tallies", opts->tallies, "tallies CSV");
        }
        cmd->add_option("--region", opts->region,
                        "region id (omit for the whole country)");
        cmd->add_option("--nvc", opts->nvc, "voting centers per region");
        cmd->add_option("--placement", opts->placement, "top | kmeans");
        cmd->add_option("--mode", opts->mode, "bootstrap | subsample");
        cmd->add_option("--sample-size", opts->sample_size,
                        "atoms per replicate (N)");
        cmd->add_option("--replicates", opts->replicates, "replicates (B)");
        cmd->add_option("--seed", opts->seed, "resampling seed");
        cmd->add_option("--min-population", opts->min_population,
                        "drop settlements below this size");
        if (with_tallies) {
            cmd->add_flag("--unweighted-fit", opts->unweighted_fit,
                          "ignore vote totals in share fits");
        }
        cmd->add_option("--out", opts->out, "CSV path ('-' = stdout)");
    };

    StreamOptions dopts;
    CLI::App* diagnostics = app.add_subcommand(
        "diagnostics", "dump per-replicate distance-law moments as CSV");
    add_stream_options(diagnostics, &dopts, false);

    StreamOptions ropts;
    ropts.mode = "bootstrap";
    CLI::App* ratios = app.add_subcommand(
        "ratios", "dump bootstrapped intercept/slope ratios as CSV");
    add_stream_options(ratios, &ropts, true);

    std::string fixture_dir = ".";
    CLI::App* make_fixture = app.add_subcommand(
        "make-fixture", "write the bundled synthetic dataset");
    make_fixture->add_option("--dir", fixture_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (analyze->parsed()) {
            if (!aopts.config_path.empty()) {
                apply_config_file(aopts.config_path, analyze, &aopts);
            }
            return run_analyze(aopts);
        }
        if (sweep->parsed()) return run_sweep(sopts);
        if (diagnostics->parsed()) return run_diagnostics(dopts);
        if (ratios->parsed()) return run_ratios(ropts);
        if (make_fixture->parsed()) {
            latecount::fixture::write_fixture(
                latecount::fixture::make_country_fixture(), fixture_dir);
            std::cout << "wrote " << fixture_dir << "/settlements.csv and "
                      << fixture_dir << "/tallies.csv\n";
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitConfigError;
}
