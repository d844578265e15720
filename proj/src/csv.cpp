#include "canvass/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "canvass/core.hpp"

namespace canvass::csv {

Table::Table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows)
    : header_(std::move(header)), rows_(std::move(rows)) {
    for (std::size_t i = 0; i < header_.size(); ++i) index_.emplace(header_[i], i);
}

std::size_t Table::column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw DataError("missing CSV column '" + name + "'");
    return it->second;
}

bool Table::has_column(const std::string& name) const { return index_.count(name) > 0; }

namespace {

// State machine over the raw byte stream; handles quoted fields with ""
// escapes and newlines inside quotes.
std::vector<std::vector<std::string>> parse_rows(std::istream& in, const std::string& source) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool row_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };

    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started && !field.empty())
                    throw DataError(source + ":" + std::to_string(line) +
                                    ": quote inside unquoted field");
                in_quotes = true;
                field_started = true;
                row_started = true;
                break;
            case ',':
                end_field();
                row_started = true;
                break;
            case '\r':
                break;
            case '\n':
                ++line;
                if (row_started || field_started || !field.empty()) end_row();
                break;
            default:
                field += c;
                field_started = true;
                row_started = true;
                break;
        }
    }
    if (in_quotes) throw DataError(source + ": unterminated quoted field");
    if (row_started || field_started || !field.empty()) end_row();
    return rows;
}

}  // namespace

Table parse(std::istream& in, const std::string& source_name) {
    auto rows = parse_rows(in, source_name);
    if (rows.empty()) throw DataError(source_name + ": missing header row");
    std::vector<std::string> header = std::move(rows.front());
    rows.erase(rows.begin());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != header.size())
            throw DataError(source_name + ": row " + std::to_string(i + 2) + " has " +
                            std::to_string(rows[i].size()) + " fields, header has " +
                            std::to_string(header.size()));
    }
    return Table(std::move(header), std::move(rows));
}

Table parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse(in, path);
}

Table parse_string(const std::string& text, const std::string& source_name) {
    std::istringstream in(text);
    return parse(in, source_name);
}

std::string escape_field(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void Writer::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << escape_field(fields[i]);
    }
    out_ << '\n';
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return s.substr(b, e - b);
}

}  // namespace

double to_double(const std::string& field, const std::string& what) {
    const std::string s = strip(field);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("bad " + what + " '" + field + "'");
    return v;
}

long long to_int(const std::string& field, const std::string& what) {
    const std::string s = strip(field);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("bad " + what + " '" + field + "'");
    return v;
}

}  // namespace canvass::csv
