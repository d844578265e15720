#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace canvass::csv {

/// One parsed CSV table. RFC-4180: quoted fields, "" escapes, LF or CRLF,
/// embedded newlines inside quotes. Header row is mandatory.
class Table {
  public:
    Table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows);

    const std::vector<std::string>& header() const { return header_; }
    std::size_t row_count() const { return rows_.size(); }

    /// Column index by exact header name; throws DataError when absent.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;

    const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }
    /// 1-based data row number as it appeared in the file (header is row 1).
    std::size_t file_row(std::size_t row) const { return row + 2; }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::unordered_map<std::string, std::size_t> index_;
};

Table parse(std::istream& in, const std::string& source_name);
Table parse_file(const std::string& path);
Table parse_string(const std::string& text, const std::string& source_name = "<string>");

/// Quotes a field only when it contains a delimiter, quote, or newline.
std::string escape_field(const std::string& field);

class Writer {
  public:
    explicit Writer(std::ostream& out) : out_(out) {}
    void row(const std::vector<std::string>& fields);

  private:
    std::ostream& out_;
};

/// Shortest decimal that round-trips the double exactly.
std::string format_double(double v);

/// Strict full-string numeric parses; throw DataError naming `what` on
/// malformed input.
double to_double(const std::string& field, const std::string& what);
long long to_int(const std::string& field, const std::string& what);

}  // namespace canvass::csv
