#include "latecount/ballots.hpp"

#include <istream>
#include <ostream>

#include "latecount/csv.hpp"
#include "latecount/errors.hpp"

namespace latecount::ballots {

namespace {

std::int64_t parse_count(const std::string& s, const std::string& what,
                         long line, const std::string& source) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        if (v < 0) {
            throw DataError(source + " line " + std::to_string(line) + ": " +
                            what + " must be nonnegative, got " + s);
        }
        return v;
    } catch (const DataError&) {
        throw;
    } catch (const std::exception&) {
        throw DataError(source + " line " + std::to_string(line) + ": bad " +
                        what + " '" + s + "'");
    }
}

bool parse_bool(const std::string& s, long line, const std::string& source) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw DataError(source + " line " + std::to_string(line) +
                    ": bad counted_by_halftime '" + s + "'");
}

}  // namespace

double BallotSummary::delta() const {
    return static_cast<double>(v_H - v_N) / static_cast<double>(v_H + v_N);
}

std::optional<double> BallotSummary::r() const {
    if (v_H == 0) return std::nullopt;
    return static_cast<double>(v_N) / static_cast<double>(v_H);
}

std::vector<TallyRow> load_tallies(std::istream& in,
                                   const std::string& source_name) {
    csv::Table table = csv::read(in, source_name);
    const std::size_t c_region = csv::column(table, "region_id", source_name);
    const std::size_t c_unit = csv::column(table, "unit_id", source_name);
    const std::size_t c_h = csv::column(table, "votes_H", source_name);
    const std::size_t c_n = csv::column(table, "votes_N", source_name);
    const std::size_t c_other = csv::column(table, "votes_other", source_name);
    const std::size_t c_half = csv::column(table, "counted_by_halftime", source_name);
    const std::size_t c_link = csv::column(table, "settlement_id", source_name);

    if (table.rows.empty()) {
        throw DataError(source_name + ": no tally rows");
    }

    std::vector<TallyRow> rows;
    rows.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        if (row.fields.size() != table.header.size()) {
            throw DataError(source_name + " line " + std::to_string(row.line) +
                            ": expected " + std::to_string(table.header.size()) +
                            " fields, got " + std::to_string(row.fields.size()));
        }
        TallyRow t;
        t.region_id = row.fields[c_region];
        t.unit_id = row.fields[c_unit];
        t.votes_H = parse_count(row.fields[c_h], "votes_H", row.line, source_name);
        t.votes_N = parse_count(row.fields[c_n], "votes_N", row.line, source_name);
        t.votes_other =
            parse_count(row.fields[c_other], "votes_other", row.line, source_name);
        t.counted_by_halftime = parse_bool(row.fields[c_half], row.line, source_name);
        if (!row.fields[c_link].empty()) t.settlement_id = row.fields[c_link];
        rows.push_back(std::move(t));
    }
    return rows;
}

void write_tallies(std::ostream& out, const std::vector<TallyRow>& rows) {
    out << "region_id,unit_id,votes_H,votes_N,votes_other,counted_by_halftime,"
           "settlement_id\n";
    for (const auto& t : rows) {
        out << csv::escape(t.region_id) << ',' << csv::escape(t.unit_id) << ','
            << t.votes_H << ',' << t.votes_N << ',' << t.votes_other << ','
            << (t.counted_by_halftime ? "true" : "false") << ','
            << (t.settlement_id ? csv::escape(*t.settlement_id) : "") << '\n';
    }
}

BallotSummary summarize(const std::vector<TallyRow>& rows,
                        const std::optional<std::string>& region_id) {
    BallotSummary s;
    bool any_halftime = false;
    for (const auto& t : rows) {
        if (region_id && t.region_id != *region_id) continue;
        s.V_H += t.votes_H;
        s.V_N += t.votes_N;
        s.V_other += t.votes_other;
        if (t.counted_by_halftime) {
            any_halftime = true;
            s.v_H += t.votes_H;
            s.v_N += t.votes_N;
            s.v_other += t.votes_other;
        }
    }
    if (!any_halftime) {
        throw DataError("no half-time tally rows in scope" +
                        (region_id ? " '" + *region_id + "'" : std::string()));
    }
    return s;
}

}  // namespace latecount::ballots
