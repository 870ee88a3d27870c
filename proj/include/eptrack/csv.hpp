#pragma once

// Schema-checked CSV tables. Every file starts with a header row naming the
// schema's columns in order; rows are validated cell by cell on both write
// and read, with the offending line and column in the diagnostic.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace eptrack::io {

enum class ColumnKind { Real, Integer, Sheet };

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Real;
    bool nullable = false;  ///< Real columns only: "nan" allowed
};

struct Schema {
    std::string name;
    std::vector<Column> columns;

    /// Throws Io naming `source`, `line` and the column on the first bad cell.
    void validate_row(const std::vector<std::string>& cells, std::string_view source,
                      std::size_t line) const;
    [[nodiscard]] std::string header() const;
};

using Row = std::vector<std::string>;

/// Shortest text that parses back to the same double; "nan", "inf", "-inf".
std::string format_double(double v);
std::string format_integer(std::int64_t v);

/// Whole-token parse; throws Io with the given context on failure.
double parse_double(std::string_view text, std::string_view context);
std::int64_t parse_integer(std::string_view text, std::string_view context);

void write_table(std::ostream& out, const Schema& schema, const std::vector<Row>& rows,
                 std::string_view source);
std::vector<Row> read_table(std::istream& in, const Schema& schema, std::string_view source);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

void write_table_file(const std::filesystem::path& path, const Schema& schema,
                      const std::vector<Row>& rows);
std::vector<Row> read_table_file(const std::filesystem::path& path, const Schema& schema);

}  // namespace eptrack::io
