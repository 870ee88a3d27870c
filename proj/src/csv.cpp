#include "eptrack/csv.hpp"

#include "eptrack/common.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

namespace eptrack::io {

namespace {

[[noreturn]] void fail(std::string_view source, std::size_t line, std::string_view what) {
    std::ostringstream msg;
    msg << source << ":" << line << ": " << what;
    throw Error(ErrorKind::Io, msg.str());
}

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string format_integer(std::int64_t v) {
    return std::to_string(v);
}

double parse_double(std::string_view text, std::string_view context) {
    if (text == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (text == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != last) {
        std::ostringstream msg;
        msg << context << ": '" << text << "' is not a number";
        throw Error(ErrorKind::Io, msg.str());
    }
    return v;
}

std::int64_t parse_integer(std::string_view text, std::string_view context) {
    std::int64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        std::ostringstream msg;
        msg << context << ": '" << text << "' is not an integer";
        throw Error(ErrorKind::Io, msg.str());
    }
    return v;
}

std::string Schema::header() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out += ',';
        out += columns[i].name;
    }
    return out;
}

void Schema::validate_row(const std::vector<std::string>& cells, std::string_view source,
                          std::size_t line) const {
    if (cells.size() != columns.size()) {
        std::ostringstream msg;
        msg << name << " row has " << cells.size() << " fields, expected " << columns.size();
        fail(source, line, msg.str());
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Column& col = columns[i];
        const std::string context = "column '" + col.name + "'";
        try {
            switch (col.kind) {
                case ColumnKind::Real: {
                    const double v = parse_double(cells[i], context);
                    if (std::isnan(v) && !col.nullable) {
                        throw Error(ErrorKind::Io, context + ": nan not allowed");
                    }
                    if (std::isinf(v)) {
                        throw Error(ErrorKind::Io, context + ": value must be finite");
                    }
                    break;
                }
                case ColumnKind::Integer:
                    parse_integer(cells[i], context);
                    break;
                case ColumnKind::Sheet:
                    if (cells[i] != "high" && cells[i] != "low") {
                        throw Error(ErrorKind::Io, context + ": expected 'high' or 'low', got '" +
                                                       cells[i] + "'");
                    }
                    break;
            }
        } catch (const Error& e) {
            fail(source, line, e.what());
        }
    }
}

void write_table(std::ostream& out, const Schema& schema, const std::vector<Row>& rows,
                 std::string_view source) {
    out << schema.header() << '\n';
    std::size_t line = 1;
    for (const auto& row : rows) {
        ++line;
        schema.validate_row(row, source, line);
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
}

std::vector<Row> read_table(std::istream& in, const Schema& schema, std::string_view source) {
    std::string line;
    std::size_t number = 0;
    if (!std::getline(in, line)) {
        fail(source, 1, "empty file, expected header '" + schema.header() + "'");
    }
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != schema.header()) {
        fail(source, number, "header '" + line + "' does not match " + schema.name + " schema '" +
                                 schema.header() + "'");
    }
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            continue;
        }
        Row cells = split(line);
        schema.validate_row(cells, source, number);
        rows.push_back(std::move(cells));
    }
    return rows;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw Error(ErrorKind::Io, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(ErrorKind::Io, "cannot rename into " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_table_file(const std::filesystem::path& path, const Schema& schema,
                      const std::vector<Row>& rows) {
    std::ostringstream out;
    write_table(out, schema, rows, path.string());
    write_file_atomic(path, out.str());
}

std::vector<Row> read_table_file(const std::filesystem::path& path, const Schema& schema) {
    std::istringstream in(read_file(path));
    return read_table(in, schema, path.string());
}

}  // namespace eptrack::io
