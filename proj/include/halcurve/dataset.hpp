#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace halcurve {

// Observations (W, A, Y): covariates W (column-major), continuous treatment A,
// outcome Y. This is the layout the CSV loader produces and the simulation
// generators emit.
struct Dataset {
    std::vector<std::string> w_names;         // one per covariate column
    std::vector<std::vector<double>> W;       // W[j][i], j < w_names.size()
    std::vector<double> A;
    std::vector<double> Y;

    std::size_t n() const { return Y.size(); }
    std::size_t n_covariates() const { return W.size(); }
};

// Reads a CSV with a header naming columns `A`, `Y` and zero or more covariate
// columns (anything else). Strict: rejects missing required columns (by name),
// ragged rows, and non-numeric or non-finite cells. Throws ValidationError.
Dataset load_dataset_csv(const std::string& path);

// Affine map of one raw column onto [0,1], clipping values outside the
// training range. lo == hi (a constant column) is rejected at fit time.
struct ColumnScale {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;

    double to_unit(double v) const {
        const double t = (v - lo) / (hi - lo);
        return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    }
};

// Per-column min/max scaling for the joint (W..., A) matrix the basis works
// on. The treatment is always the last column.
struct UnitScaler {
    std::vector<ColumnScale> columns;

    // Records each column's observed range; throws ValidationError naming the
    // offending column when a range is degenerate or a value is non-finite.
    static UnitScaler fit(const std::vector<std::vector<double>>& cols,
                          const std::vector<std::string>& names);

    std::vector<std::vector<double>> apply(
        const std::vector<std::vector<double>>& cols) const;

    std::size_t dim() const { return columns.size(); }
};

// Assembles the (W..., A) column set scaling operates on.
std::vector<std::vector<double>> design_columns(const Dataset& data);
std::vector<std::string> design_column_names(const Dataset& data);

}  // namespace halcurve
