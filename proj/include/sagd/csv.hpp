#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sagd {

/// Numeric CSV field, 17 significant digits (round-trips a double exactly
/// and diffs identically across languages).
inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using CsvCell = std::variant<std::string, double, long>;

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : os_(path) {
        if (!os_) throw std::runtime_error("CsvWriter: cannot open " + path);
        columns_ = header.size();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) os_ << ',';
            os_ << header[i];
        }
        os_ << '\n';
    }

    void row(const std::vector<CsvCell>& cells) {
        if (cells.size() != columns_) throw std::invalid_argument("CsvWriter: column mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os_ << ',';
            if (std::holds_alternative<std::string>(cells[i])) {
                os_ << std::get<std::string>(cells[i]);
            } else if (std::holds_alternative<long>(cells[i])) {
                os_ << std::get<long>(cells[i]);
            } else {
                os_ << csv_number(std::get<double>(cells[i]));
            }
        }
        os_ << '\n';
    }

private:
    std::ofstream os_;
    std::size_t columns_ = 0;
};

/// Minimal reader for the files this project writes (no quoting).
inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_csv: cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

} // namespace sagd
