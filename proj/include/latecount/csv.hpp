#pragma once

#include <istream>
#include <string>
#include <vector>

namespace latecount::csv {

struct Row {
    std::vector<std::string> fields;
    long line;  // 1-based line number in the source
};

// Reads a whole CSV stream: header row first, then data rows. Handles
// double-quoted fields (embedded commas and "" escapes). Blank lines are
// skipped. Throws DataError on unterminated quotes.
struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;
};

Table read(std::istream& in, const std::string& source_name);

// Index of `name` in `header`, or throws DataError naming the source.
std::size_t column(const Table& table, const std::string& name,
                   const std::string& source_name);

// Quotes a field if it contains a comma, quote or newline.
std::string escape(const std::string& field);

// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace latecount::csv
