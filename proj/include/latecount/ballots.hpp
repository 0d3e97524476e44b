#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace latecount::ballots {

struct TallyRow {
    std::string region_id;
    std::string unit_id;  // municipality / mesa
    std::int64_t votes_H = 0;
    std::int64_t votes_N = 0;
    std::int64_t votes_other = 0;
    bool counted_by_halftime = false;
    std::optional<std::string> settlement_id;  // link into the geodata
};

// Half-time and final two-candidate aggregates with the derived margin
// delta = (v_H - v_N)/(v_H + v_N) and lead factor r = v_N/v_H.
struct BallotSummary {
    std::int64_t v_H = 0;  // counted by half-time
    std::int64_t v_N = 0;
    std::int64_t v_other = 0;
    std::int64_t V_H = 0;  // all rows
    std::int64_t V_N = 0;
    std::int64_t V_other = 0;

    std::int64_t v() const { return v_H + v_N; }
    std::int64_t V() const { return V_H + V_N; }
    double delta() const;
    std::optional<double> r() const;  // empty when v_H == 0
};

// Parses the tallies CSV (header: region_id,unit_id,votes_H,votes_N,
// votes_other,counted_by_halftime,settlement_id). Counts must be
// nonnegative; errors name the offending line.
std::vector<TallyRow> load_tallies(std::istream& in,
                                   const std::string& source_name);

void write_tallies(std::ostream& out, const std::vector<TallyRow>& rows);

// Sums the rows in scope (all rows, or one region when region_id is set).
// Requires at least one half-time row in scope.
BallotSummary summarize(const std::vector<TallyRow>& rows,
                        const std::optional<std::string>& region_id);

}  // namespace latecount::ballots
