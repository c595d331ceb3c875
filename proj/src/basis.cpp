#include "halcurve/basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>
#include <unordered_map>

#include "halcurve/errors.hpp"

namespace halcurve {

double eval_basis(const BasisFunction& b, std::span<const double> x) {
    if (b.order == 0) {
        for (std::size_t k = 0; k < b.subset.size(); ++k)
            if (x[static_cast<std::size_t>(b.subset[k])] < b.knot[k]) return 0.0;
        return 1.0;
    }
    double v = 1.0;
    for (std::size_t k = 0; k < b.subset.size(); ++k) {
        const double d = x[static_cast<std::size_t>(b.subset[k])] - b.knot[k];
        if (d < 0.0) return 0.0;
        v *= d;
    }
    return v;
}

namespace {

void check_scaled(const std::vector<std::vector<double>>& X_cols) {
    if (X_cols.empty()) throw ValidationError("basis: no columns given");
    const std::size_t n = X_cols[0].size();
    if (n == 0) throw ValidationError("basis: no rows given");
    for (const auto& col : X_cols) {
        if (col.size() != n)
            throw ValidationError("basis: ragged column set (unequal lengths)");
        for (double v : col)
            if (!(v >= 0.0 && v <= 1.0))
                throw ValidationError(
                    "basis: values must be finite and scaled to [0,1]");
    }
}

// Lower value at rank ceil(q*(n-1))+1 (1-based) of the sorted sample.
double rank_quantile(const std::vector<double>& sorted, double q) {
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * (n - 1.0))) + 1;
    if (rank > sorted.size()) rank = sorted.size();
    return sorted[rank - 1];
}

// Knot value candidates for one coordinate.
std::vector<double> coordinate_values(const std::vector<double>& col, bool all_values,
                                      int m) {
    std::vector<double> sorted(col);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> vals;
    if (all_values) {
        vals = sorted;
    } else if (m == 1) {
        vals.push_back(rank_quantile(sorted, 0.5));
    } else {
        vals.reserve(static_cast<std::size_t>(m));
        for (int t = 0; t < m; ++t)
            vals.push_back(
                rank_quantile(sorted, static_cast<double>(t) / (m - 1.0)));
    }
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return vals;
}

// All nonempty subsets of {0..d-1} up to the interaction cap, ordered by size
// then lexicographically.
std::vector<std::vector<int>> enumerate_subsets(int d, int max_size) {
    std::vector<std::vector<int>> subsets;
    for (int size = 1; size <= max_size; ++size) {
        std::vector<int> idx(static_cast<std::size_t>(size));
        for (int k = 0; k < size; ++k) idx[static_cast<std::size_t>(k)] = k;
        for (;;) {
            subsets.push_back(idx);
            int k = size - 1;
            while (k >= 0 && idx[static_cast<std::size_t>(k)] == d - size + k) --k;
            if (k < 0) break;
            ++idx[static_cast<std::size_t>(k)];
            for (int t = k + 1; t < size; ++t)
                idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
        }
    }
    return subsets;
}

std::vector<std::vector<double>> subset_rows(
    const std::vector<std::vector<double>>& X_cols, const std::vector<int>& subset) {
    const std::size_t n = X_cols[0].size();
    std::vector<std::vector<double>> rows(n,
                                          std::vector<double>(subset.size()));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < subset.size(); ++k)
            rows[i][k] = X_cols[static_cast<std::size_t>(subset[k])][i];
    return rows;
}

// Snaps every point of the cartesian grid over `values` to its nearest
// observed row (squared Euclidean on the subset coordinates, lowest row index
// on ties) and returns the distinct snapped knots.
std::vector<std::vector<double>> grid_snapped_knots(
    const std::vector<std::vector<double>>& rows,
    const std::vector<std::vector<double>>& values) {
    const std::size_t k_dim = values.size();
    std::vector<std::size_t> odo(k_dim, 0);
    std::set<std::vector<double>> knots;
    std::vector<double> point(k_dim);
    for (;;) {
        for (std::size_t k = 0; k < k_dim; ++k) point[k] = values[k][odo[k]];
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double d = 0.0;
            for (std::size_t k = 0; k < k_dim; ++k) {
                const double diff = rows[i][k] - point[k];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        knots.insert(rows[best]);
        // odometer
        std::size_t k = 0;
        while (k < k_dim && ++odo[k] == values[k].size()) odo[k++] = 0;
        if (k == k_dim) break;
    }
    return {knots.begin(), knots.end()};
}

}  // namespace

std::vector<BasisFunction> generate_knots(
    const std::vector<std::vector<double>>& X_cols, int order,
    const KnotOptions& opts) {
    check_scaled(X_cols);
    if (order != 0 && order != 1)
        throw ValidationError("basis: smoothness order must be 0 or 1");
    const int d = static_cast<int>(X_cols.size());
    if (d > 20)
        throw ValidationError(
            "basis: dimension too large for exhaustive subset enumeration");
    const std::size_t n = X_cols[0].size();

    int max_knots = opts.max_knots_per_dim;
    if (max_knots <= 0) max_knots = order == 0 ? static_cast<int>(n) : 20;
    const bool all_values = static_cast<std::size_t>(max_knots) >= n;
    int max_size = opts.max_interaction;
    if (max_size <= 0 || max_size > d) max_size = d;

    std::vector<std::vector<double>> values(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
        values[static_cast<std::size_t>(j)] =
            coordinate_values(X_cols[static_cast<std::size_t>(j)], all_values, max_knots);

    std::vector<BasisFunction> bases;
    for (const auto& subset : enumerate_subsets(d, max_size)) {
        std::vector<std::vector<double>> knots;
        if (subset.size() == 1) {
            for (double v : values[static_cast<std::size_t>(subset[0])])
                knots.push_back({v});
        } else if (all_values) {
            // Every grid point snaps onto an observed row and every row snaps
            // to itself, so the snapped knot set is exactly the distinct
            // observed rows; skip the grid walk.
            auto rows = subset_rows(X_cols, subset);
            std::sort(rows.begin(), rows.end());
            rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
            knots = std::move(rows);
        } else {
            std::vector<std::vector<double>> sub_values;
            for (int j : subset)
                sub_values.push_back(values[static_cast<std::size_t>(j)]);
            knots = grid_snapped_knots(subset_rows(X_cols, subset), sub_values);
        }
        std::sort(knots.begin(), knots.end());
        for (auto& u : knots) bases.push_back({order, subset, std::move(u)});
    }
    return bases;
}

std::vector<double> DesignMatrix::column_dense(std::size_t j) const {
    std::vector<double> out(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) out[i] = cols[j].value(i);
    return out;
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t column_hash(const DesignColumn& c) {
    return c.is_bits
               ? fnv1a(c.bits.data(), c.bits.size() * sizeof(std::uint64_t)) ^ 0x5bd1ull
               : fnv1a(c.dense.data(), c.dense.size() * sizeof(double));
}

bool column_equal(const DesignColumn& a, const DesignColumn& b) {
    if (a.is_bits != b.is_bits) return false;  // representations never mix values
    return a.is_bits ? a.bits == b.bits : a.dense == b.dense;
}

}  // namespace

DesignMatrix build_design(const std::vector<std::vector<double>>& X_cols,
                          const std::vector<BasisFunction>& bases) {
    check_scaled(X_cols);
    const std::size_t n = X_cols[0].size();
    const std::size_t d = X_cols.size();
    const std::size_t n_words = (n + 63) / 64;

    DesignMatrix dm;
    dm.n_rows = n;

    DesignColumn intercept;
    intercept.is_bits = true;
    intercept.bits.assign(n_words, ~0ull);
    if (n % 64) intercept.bits.back() = (1ull << (n % 64)) - 1ull;
    dm.cols.push_back(std::move(intercept));

    // hash -> indices of kept columns, for duplicate detection
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    buckets[column_hash(dm.cols[0])].push_back(0);

    std::vector<double> row(d);
    for (const auto& b : bases) {
        if (b.subset.empty() || b.subset.size() != b.knot.size())
            throw ValidationError("basis: malformed basis function");
        for (int j : b.subset)
            if (j < 0 || static_cast<std::size_t>(j) >= d)
                throw ValidationError("basis: subset index out of range");

        DesignColumn col;
        if (b.order == 0) {
            col.is_bits = true;
            col.bits.assign(n_words, 0ull);
            for (std::size_t i = 0; i < n; ++i) {
                bool in = true;
                for (std::size_t k = 0; k < b.subset.size(); ++k)
                    if (X_cols[static_cast<std::size_t>(b.subset[k])][i] < b.knot[k]) {
                        in = false;
                        break;
                    }
                if (in) col.bits[i / 64] |= 1ull << (i % 64);
            }
        } else {
            col.dense.resize(n);
            bool zero_one_valued = true;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k < b.subset.size(); ++k)
                    row[k] = X_cols[static_cast<std::size_t>(b.subset[k])][i];
                double v = 1.0;
                for (std::size_t k = 0; k < b.subset.size(); ++k) {
                    const double diff = row[k] - b.knot[k];
                    if (diff < 0.0) {
                        v = 0.0;
                        break;
                    }
                    v *= diff;
                }
                col.dense[i] = v;
                if (v != 0.0 && v != 1.0) zero_one_valued = false;
            }
            // Canonical representation: any exactly 0/1-valued column is
            // stored as bits (it can happen for first-order bases on binary
            // coordinates), so duplicate detection never has to compare
            // across storage schemes.
            if (zero_one_valued) {
                col.is_bits = true;
                col.bits.assign(n_words, 0ull);
                for (std::size_t i = 0; i < n; ++i)
                    if (col.dense[i] == 1.0) col.bits[i / 64] |= 1ull << (i % 64);
                col.dense.clear();
            }
        }

        // An all-zero column (e.g. a hinge knotted at a coordinate's maximum)
        // carries no information on this sample; drop it outright.
        if (col.is_bits) {
            bool any = false;
            for (std::uint64_t w : col.bits) any = any || w != 0ull;
            if (!any) continue;
        }

        const std::uint64_t h = column_hash(col);
        bool dup = false;
        if (auto it = buckets.find(h); it != buckets.end())
            for (std::size_t idx : it->second)
                if (column_equal(dm.cols[idx], col)) {
                    dup = true;
                    break;
                }
        if (dup) continue;
        buckets[h].push_back(dm.cols.size());
        dm.cols.push_back(std::move(col));
        dm.bases.push_back(b);
    }
    return dm;
}

double l1_norm(std::span<const double> beta) {
    double s = 0.0;
    for (double b : beta) s += std::fabs(b);
    return s;
}

}  // namespace halcurve
