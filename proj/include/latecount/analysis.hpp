#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latecount/ballots.hpp"
#include "latecount/geodata.hpp"
#include "latecount/model.hpp"
#include "latecount/resampling.hpp"
#include "latecount/tail_probability.hpp"

namespace latecount::analysis {

inline constexpr int kSchemaVersion = 1;

enum class Scope { PerRegion, Country, Both };

// Optional overrides for the model shape parameters. Anything unset falls
// back to a default relative to the scope's largest distance: exponential
// rates x_max/4, logarithmic scale x_max/10, power-law exponent 2, linear
// slope at the steepest value keeping f_H/f_N inside [0,1].
struct FormParams {
    std::optional<double> epsilon;
    std::optional<double> slope;     // share per km (Linear)
    std::optional<double> rate_h;    // km (Exp1/Exp2)
    std::optional<double> rate_g;    // km (Exp2)
    std::optional<double> scale;     // km (Logarithmic)
    std::optional<double> exponent;  // (PowerLaw)
};

struct RunConfig {
    std::string settlements_path;
    std::string tallies_path;
    std::vector<int> nvc = {1, 3, 5};
    geo::Placement placement = geo::Placement::TopPopulation;
    std::vector<model::Form> forms = {model::Form::Linear};
    Scope scope = Scope::Both;
    resample::ResamplePlan plan;   // drives the prong-2 resampling
    double c = 0.5;                // axis of reflection for f_H/f_N
    FormParams form_params;
    std::int64_t min_population = 0;
    bool weighted_fit = true;      // weight share fits by unit vote totals
    int threads = 0;               // 0 = hardware concurrency
};

// One (nvc, form) cell of a scope unit.
struct CellResult {
    int nvc = 1;
    model::Form form = model::Form::Linear;
    int sample_size_used = 0;  // subsample N after clamping to the atom count

    // Distance-law moments for this scope unit at this nvc.
    std::optional<double> fair_win_moment;
    std::optional<double> halftime_lead_moment;
    std::optional<double> gip_lower_bound;

    // Prong 2: replicate fractions of the two turnaround conditions.
    resample::ConditionEstimate prong2;

    // Prong 3: probability that the distance-independent preference lands
    // in the window that would make the turnaround fair.
    bool prong3_applicable = false;
    double prong3_fraction = 0.0;
    std::optional<double> prong3_lower_bound;  // Cov(u,g)/E[g], <= 0
    int prong3_undefined_ratios = 0;
    int prong3_points = 0;
};

struct ScopeResult {
    bool is_country = false;
    std::string region_id;  // empty for the country row
    ballots::BallotSummary summary;
    tail::LogProb prong1;      // two-candidate share convention
    tail::LogProb prong1_raw;  // raw shares over all valid votes, reported too
    std::vector<CellResult> cells;
};

struct AnalysisReport {
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 0;
    int degeneracy_count = 0;  // cells that hit a numeric degeneracy
    std::vector<ScopeResult> scopes;

    // config echo for provenance
    std::vector<int> nvc;
    std::vector<model::Form> forms;
    std::string placement;
    std::string mode;
    int sample_size = 0;
    int replicates = 0;
    double c = 0.5;
    FormParams form_params;
    std::int64_t min_population = 0;
    bool weighted_fit = true;
};

// Loads both inputs, checks the settlement/tally linkage (unmatched ids are
// an error), and runs prongs 1-3 for every (scope unit x nvc x form) cell.
// Deterministic for a given config, including across thread counts.
AnalysisReport run_analysis(const RunConfig& config);

// Same, on already-loaded data (used by tests and the fixture path).
AnalysisReport run_analysis(const RunConfig& config,
                            const geo::SettlementDataset& dataset,
                            const std::vector<ballots::TallyRow>& tallies);

// Distance law for one scope (a region id, or the whole country when
// region_id is empty) at the given number of centers per region.
geo::DistanceDistribution scope_distance_distribution(
    const geo::SettlementDataset& dataset,
    const std::optional<std::string>& region_id, int nvc,
    geo::Placement placement);

// Share-vs-distance points for one scope, from tally rows that carry a
// settlement link. Weight = the unit's two-candidate vote total.
std::vector<resample::FitPoint> share_distance_points(
    const geo::SettlementDataset& dataset,
    const std::vector<ballots::TallyRow>& tallies,
    const std::optional<std::string>& region_id, int nvc,
    geo::Placement placement);

// Canonical JSON bytes; identical runs serialize identically.
std::string report_to_json(const AnalysisReport& report);

// CSV `region_id,nvc,form,p_conjecture`, ordered by region_id then nvc then
// form. `prong` selects which probability fills the last column (2 or 3).
std::string emit_choropleth(const AnalysisReport& report, Scope scope,
                            int prong = 3);

// CSV `form,param1,param2,E_h,E_gh,flag` at full precision.
std::string emit_sweep(const std::vector<model::SweepRow>& rows,
                       model::Form form);

}  // namespace latecount::analysis
