#include "latecount/csv.hpp"

#include <charconv>
#include <cstdio>

#include "latecount/errors.hpp"

namespace latecount::csv {

namespace {

// Splits one physical line, `pos` tracking for multi-line quoted fields is
// not supported: fields must not contain raw newlines.
std::vector<std::string> split_line(const std::string& line, long line_no,
                                    const std::string& source_name) {
    std::vector<std::string> fields;
    std::string current;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (in_quotes) {
        throw DataError(source_name + " line " + std::to_string(line_no) +
                        ": unterminated quoted field");
    }
    fields.push_back(std::move(current));
    return fields;
}

}  // namespace

Table read(std::istream& in, const std::string& source_name) {
    Table table;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line, line_no, source_name);
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            table.rows.push_back(Row{std::move(fields), line_no});
        }
    }
    if (table.header.empty()) {
        throw DataError(source_name + ": empty file (missing header)");
    }
    return table;
}

std::size_t column(const Table& table, const std::string& name,
                   const std::string& source_name) {
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] == name) return i;
    }
    throw DataError(source_name + ": missing required column '" + name + "'");
}

std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

}  // namespace latecount::csv
