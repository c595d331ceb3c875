#include "halcurve/dataset.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "halcurve/errors.hpp"

namespace halcurve {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, const std::string& col, std::size_t row) {
    const std::string s = strip(raw);
    double v = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw ValidationError("csv: non-numeric value '" + s + "' in column '" + col +
                              "', data row " + std::to_string(row + 1));
    if (!std::isfinite(v))
        throw ValidationError("csv: non-finite value in column '" + col +
                              "', data row " + std::to_string(row + 1));
    return v;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset file '" + path + "'");

    std::string line;
    if (!std::getline(in, line))
        throw ValidationError("dataset '" + path + "' is empty (no header row)");
    auto header = split_csv_line(line);
    for (auto& h : header) h = strip(h);

    int a_idx = -1, y_idx = -1;
    std::vector<int> w_idx;
    std::vector<std::string> w_names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == "A") {
            if (a_idx >= 0) throw ValidationError("dataset has duplicate column 'A'");
            a_idx = static_cast<int>(j);
        } else if (header[j] == "Y") {
            if (y_idx >= 0) throw ValidationError("dataset has duplicate column 'Y'");
            y_idx = static_cast<int>(j);
        } else {
            if (header[j].empty())
                throw ValidationError("dataset header has an unnamed column");
            w_idx.push_back(static_cast<int>(j));
            w_names.push_back(header[j]);
        }
    }
    if (a_idx < 0) throw ValidationError("dataset is missing required column 'A'");
    if (y_idx < 0) throw ValidationError("dataset is missing required column 'Y'");

    Dataset data;
    data.w_names = w_names;
    data.W.resize(w_names.size());

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;  // tolerate trailing blank lines
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ValidationError("csv: data row " + std::to_string(row + 1) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
        data.A.push_back(parse_cell(cells[a_idx], "A", row));
        data.Y.push_back(parse_cell(cells[y_idx], "Y", row));
        for (std::size_t k = 0; k < w_idx.size(); ++k)
            data.W[k].push_back(parse_cell(cells[w_idx[k]], w_names[k], row));
        ++row;
    }
    if (data.n() == 0)
        throw ValidationError("dataset '" + path + "' has a header but no data rows");
    return data;
}

UnitScaler UnitScaler::fit(const std::vector<std::vector<double>>& cols,
                           const std::vector<std::string>& names) {
    assert(cols.size() == names.size());
    UnitScaler sc;
    sc.columns.reserve(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j].empty())
            throw ValidationError("cannot scale empty column '" + names[j] + "'");
        double lo = cols[j][0], hi = cols[j][0];
        for (double v : cols[j]) {
            if (!std::isfinite(v))
                throw ValidationError("non-finite value in column '" + names[j] + "'");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (lo == hi)
            throw ValidationError("column '" + names[j] +
                                  "' is constant; cannot scale it to the unit interval");
        sc.columns.push_back({names[j], lo, hi});
    }
    return sc;
}

std::vector<std::vector<double>> UnitScaler::apply(
    const std::vector<std::vector<double>>& cols) const {
    if (cols.size() != columns.size())
        throw ValidationError("scaler dimension mismatch: got " +
                              std::to_string(cols.size()) + " columns, expected " +
                              std::to_string(columns.size()));
    std::vector<std::vector<double>> out(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out[j].resize(cols[j].size());
        for (std::size_t i = 0; i < cols[j].size(); ++i)
            out[j][i] = columns[j].to_unit(cols[j][i]);
    }
    return out;
}

std::vector<std::vector<double>> design_columns(const Dataset& data) {
    std::vector<std::vector<double>> cols = data.W;
    cols.push_back(data.A);
    return cols;
}

std::vector<std::string> design_column_names(const Dataset& data) {
    std::vector<std::string> names = data.w_names;
    names.emplace_back("A");
    return names;
}

}  // namespace halcurve
