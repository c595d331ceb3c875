#pragma once

// Tensor-product spline bases over [0,1]^d and the design matrices built from
// them.
//
// A basis function is identified by a smoothness order, a nonempty subset S of
// coordinates, and a knot u indexed by S:
//   order 0:  phi(x) = prod_{j in S} 1{x_j >= u_j}        (closed inequality)
//   order 1:  phi(x) = prod_{j in S} (x_j - u_j) 1{x_j >= u_j}
// The L1 norm of a coefficient vector over such a dictionary is the fitted
// function's empirical sectional-variation norm, which is what the lasso
// penalty controls.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace halcurve {

struct BasisFunction {
    int order = 0;                 // 0 or 1
    std::vector<int> subset;       // strictly increasing coordinate indices
    std::vector<double> knot;      // same length as subset, values in [0,1]

    bool operator==(const BasisFunction&) const = default;
};

// Evaluates one basis function at a full point x in [0,1]^d.
double eval_basis(const BasisFunction& b, std::span<const double> x);

struct KnotOptions {
    // Knots per coordinate. <= 0 means the order's default: every observed
    // support point for order 0, 20 rank-spaced empirical quantiles for
    // order 1.
    int max_knots_per_dim = 0;
    // Largest subset size to include; <= 0 means all of 1..d.
    int max_interaction = 0;
};

// Enumerates the basis dictionary for scaled data X (column-major, values in
// [0,1]). Per coordinate the knot value set is either all observed values
// (when the per-dim budget covers n) or empirical quantiles equally spaced in
// rank, taking the lower value at rank ceil(q*(n-1))+1. Univariate subsets use
// those values directly; larger subsets form the cartesian grid of their
// coordinates' value sets and snap each grid point to the nearest observed row
// (Euclidean distance on the subset, lowest row index on ties), which for the
// all-values case reduces to the observed rows themselves. Duplicate (subset,
// knot) pairs are removed. Deterministic order: subsets by size then
// lexicographically, knots sorted lexicographically within a subset.
std::vector<BasisFunction> generate_knots(
    const std::vector<std::vector<double>>& X_cols, int order,
    const KnotOptions& opts = {});

// One design column. Zero-order (and intercept) columns hold exact 0/1 values
// bit-packed LSB-first; first-order columns are dense doubles. Both are just
// storage schemes: semantics are always the dense value vector.
struct DesignColumn {
    bool is_bits = false;
    std::vector<std::uint64_t> bits;
    std::vector<double> dense;

    double value(std::size_t i) const {
        return is_bits ? static_cast<double>((bits[i / 64] >> (i % 64)) & 1u)
                       : dense[i];
    }
};

// Column 0 is identically 1 (the unpenalized intercept); column j >= 1
// evaluates bases[j-1] on the rows. No two columns are identical as value
// vectors: duplicates keep the first occurrence, which in particular removes
// indicator columns that are 1 on every row.
struct DesignMatrix {
    std::size_t n_rows = 0;
    std::vector<DesignColumn> cols;
    std::vector<BasisFunction> bases;  // bases[j-1] generated cols[j]

    std::size_t n_cols() const { return cols.size(); }
    double value(std::size_t i, std::size_t j) const { return cols[j].value(i); }
    std::vector<double> column_dense(std::size_t j) const;
};

// Evaluates every basis over the rows of X, drops duplicate value-columns as
// well as all-zero columns (a hinge knotted at a coordinate's maximum
// vanishes on the whole sample), and prepends the intercept. X values must be
// finite and in [0,1].
DesignMatrix build_design(const std::vector<std::vector<double>>& X_cols,
                          const std::vector<BasisFunction>& bases);

// Sum of absolute coefficients including the intercept: the fitted function's
// empirical sectional-variation norm.
double l1_norm(std::span<const double> beta);

}  // namespace halcurve
