#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace rotadic {

/// Column-oriented CSV table. Numbers are written with %.17g so reruns with
/// the same inputs produce byte-identical files.
class Table {
public:
    using Cell = std::variant<double, long long, std::string>;

    explicit Table(std::vector<std::string> header = {});

    void add_row(std::vector<Cell> row);
    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t rows() const noexcept { return rows_.size(); }
    const std::vector<Cell>& row(std::size_t i) const { return rows_.at(i); }

    std::string to_csv() const;
    void write_csv(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

std::string format_number(double value);

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace rotadic
