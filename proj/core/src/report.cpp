#include "rotadic/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rotadic/error.hpp"

namespace rotadic {

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != header_.size()) {
        throw StructuralError("Table: row width " + std::to_string(row.size()) + " does not match header width " +
                              std::to_string(header_.size()));
    }
    rows_.push_back(std::move(row));
}

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

namespace {

// RFC 4180: quote fields holding a separator, quote or line break.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (const char c : s) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

} // namespace

std::string Table::to_csv() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header_.size(); ++i) {
        out << (i ? "," : "") << csv_field(header_[i]);
    }
    out << '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) {
                out << ',';
            }
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        out << format_number(v);
                    } else if constexpr (std::is_same_v<T, std::string>) {
                        out << csv_field(v);
                    } else {
                        out << v;
                    }
                },
                row[i]);
        }
        out << '\n';
    }
    return out.str();
}

void Table::write_csv(const std::filesystem::path& path) const {
    write_file_atomic(path, to_csv());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ResourceError("cannot open " + tmp.string() + " for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw ResourceError("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace rotadic
