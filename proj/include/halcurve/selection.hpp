#pragma once

// Penalty and smoothness selection: K-fold cross-validation over a shared
// lambda path, score-criterion undersmoothing, and a discrete model selector
// over candidate (order, knots) configurations.
//
// All data enters as scaled columns (values in [0,1], see UnitScaler) plus an
// outcome vector. Fold fits rebuild the basis dictionary from the training
// rows only, so no information about held-out rows leaks into knot placement.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "halcurve/basis.hpp"
#include "halcurve/solver.hpp"

namespace halcurve {

enum class Smoothness { order0, order1, adaptive };
enum class Selector { cv, undersmooth };

struct HalConfig {
    Smoothness order = Smoothness::adaptive;
    // Knots per coordinate; <= 0 means the resolved order's default (every
    // observed value for order 0, 20 rank-spaced quantiles for order 1).
    int max_knots_per_dim = 0;
    int n_lambda = 50;
    double lambda_ratio = 1e-3;
    int folds = 10;
    Selector selector = Selector::cv;
    Family family = Family::gaussian();
    std::uint64_t seed = 1;
};

// Deterministic fold assignment: a seeded permutation dealt round-robin.
// Returns `k` disjoint index sets covering 0..n-1. Requires 2 <= k <= n.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int k,
                                                 std::uint64_t seed);

// Stratified variant for binary outcomes: each class is dealt round-robin
// separately so every fold holds both classes. Throws ValidationError when a
// class has fewer members than folds (stratification failure).
std::vector<std::vector<std::size_t>> make_folds_stratified(
    std::span<const double> y, int k, std::uint64_t seed);

// Knobs for selection-grade path walking. Fits along CV folds and selector
// walks use a relaxed tolerance profile (risk curves and score criteria
// cannot resolve differences far below it; full-precision fitting is reserved
// for the one model that is finally reported), and every walk stops once fits
// stop converging or, for fold walks, once the held-out risk has stopped
// improving for a while — the deep end of the path is an interpolation regime
// that no selector should ever pick.
struct WalkPolicy {
    FitOptions fit;
    // Fold walks stop after this many consecutive lambdas without a new best
    // held-out risk (the lambda grid is geometric, so the window spans a wide
    // penalty range; any improvement resets it).
    int risk_patience = 8;
    // Any walk stops after this many consecutive non-converged fits.
    int nonconv_patience = 2;
    // Any walk stops immediately when a non-converged fit's active set
    // exceeds n / active_guard_divisor (interpolation regime).
    std::size_t active_guard_divisor = 8;
};

// The tuned default profile used by the selection layer.
WalkPolicy selection_walk_policy();

// First index attaining the minimum of risks[0..limit). On a decreasing
// lambda path this breaks risk ties toward the larger (smoother) lambda.
std::size_t risk_argmin(std::span<const double> risks, std::size_t limit);

// One candidate's cross-validation outcome over the shared path.
struct CvCurve {
    int order = 0;
    int max_knots_per_dim = 0;
    std::vector<double> lambdas;  // full-data path, decreasing
    // Observation-averaged held-out risk (MSE / log-loss) per lambda;
    // +infinity past the point where some fold's walk stopped.
    std::vector<double> risks;
    std::size_t eligible = 0;  // lambdas evaluated by every fold (path prefix)
    std::size_t cv_index = 0;  // argmin risk over the eligible prefix
    double lambda_cv = 0.0;
    double cv_risk = 0.0;      // risks[cv_index]
    // Full-data design for this candidate, reusable by later refits.
    DesignMatrix design;
};

// K-fold cross-validation for one (order, knots) candidate. Builds the
// full-data design and its lambda path, then per fold rebuilds the basis on
// the training rows, walks the shared path warm-started, and accumulates
// held-out losses (predictions on held-out rows evaluate the training basis
// directly). Ties in the risk break toward the larger lambda.
CvCurve cv_select(const std::vector<std::vector<double>>& X_cols,
                  std::span<const double> y, const HalConfig& cfg, int order,
                  int max_knots_per_dim,
                  const std::vector<std::vector<std::size_t>>& folds,
                  const WalkPolicy& policy = selection_walk_policy());

struct UndersmoothResult {
    double lambda_u = 0.0;
    std::size_t u_index = 0;
    // Per walked lambda (aligned with `lambdas_walked`): max_j |S_j| over the
    // active set, NaN when the fit was skipped (non-converged or saturated).
    std::vector<double> criterion_trace;
    std::vector<double> lambdas_walked;
    std::vector<double> thresholds;  // sigma_hat/(sqrt(n)·log n) per lambda
    bool criterion_met = false;      // false => fallback to min(path)
    bool empty_active_warning = false;
    // Selection-grade fit at lambda_u when the walk produced one (beta empty
    // otherwise); a convenient warm start for the final full-precision refit.
    HalFit fit_at_u;
};

// Walks lambda downward from path[cv_index], refitting warm-started, and
// returns the largest lambda <= lambda_cv whose active-set empirical scores
// S_j = (1/n) sum_i phi_ij r_i (response-scale residuals) all sit within
// sigma_hat/(sqrt n · log n), sigma_hat being the sample SD of those
// residuals at that fit. Non-converged and saturated fits are skipped but
// recorded in the trace. If no walked lambda satisfies the criterion the
// smallest path lambda is returned; if every walked fit has an empty active
// set, lambda_cv is returned with a warning flag.
UndersmoothResult undersmooth_select(const DesignMatrix& X,
                                     std::span<const double> y, Family family,
                                     std::span<const double> lambdas,
                                     std::size_t cv_index,
                                     const WalkPolicy& policy = selection_walk_policy());

struct SelectionResult {
    // Resolved configuration: order is 0 or 1, knots explicit.
    HalConfig chosen;
    double lambda_cv = 0.0;
    double lambda_final = 0.0;  // == lambda_cv under Selector::cv
    // Per-candidate CV tables; the winner's entry holds the design.
    std::vector<CvCurve> cv_risks;
    std::size_t winner = 0;  // index into cv_risks
    UndersmoothResult undersmooth;  // populated under Selector::undersmooth
};

// Discrete model selection plus penalty selection, the full pipeline:
// resolves the candidate set (adaptive -> {order 0/default knots, order 1/20
// knots}), cross-validates every candidate on the same folds, picks the
// candidate with the smallest minimal CV risk (ties toward lower order, then
// fewer knots), and applies the configured lambda selector to the winner.
SelectionResult select_model(const std::vector<std::vector<double>>& X_cols,
                             std::span<const double> y, const HalConfig& cfg,
                             const WalkPolicy& policy = selection_walk_policy());

}  // namespace halcurve
