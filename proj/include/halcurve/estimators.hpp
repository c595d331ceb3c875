#pragma once

// End-to-end estimator pipelines behind short textual tokens, the interface
// the simulation harness and the CLI share:
//   hal0-cv  hal0-u   zero-order bases, CV / undersmoothed penalty
//   hal1-cv  hal1-u   first-order bases
//   adapt-cv adapt-u  discrete model selection over both orders
//   poly, poly1..poly9  unpenalized polynomial comparator (poly = degree 3)
// A pipeline scales the columns, selects and fits a model, and returns the
// dose-response curve with delta-method intervals on the original scale.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "halcurve/baselines.hpp"
#include "halcurve/dataset.hpp"
#include "halcurve/inference.hpp"
#include "halcurve/selection.hpp"
#include "halcurve/solver.hpp"

namespace halcurve {

enum class EstimatorKind { hal, poly };

struct EstimatorSpec {
    std::string token;
    EstimatorKind kind = EstimatorKind::hal;
    Smoothness order = Smoothness::adaptive;   // hal only
    Selector selector = Selector::undersmooth; // hal only
    int degree = 3;                            // poly only
};

// Parses one estimator token; throws ValidationError naming an unknown one.
EstimatorSpec parse_estimator(std::string_view token);

// Y containing only {0,1} (with both values present) is binomial; anything
// else is gaussian.
Family detect_family(std::span<const double> y);

// A fully fitted adaptive model: everything needed to serialize it or to
// evaluate curves later. `design` is the winning candidate's full-data
// design; `fit` the final full-precision coefficients at `sel.lambda_final`.
struct FittedHal {
    UnitScaler scaler;                       // over (W..., A), treatment last
    std::vector<std::vector<double>> scaled; // the scaled training columns
    DesignMatrix design;
    HalFit fit;
    SelectionResult sel;
};

// Runs scaling, model selection, and the final refit. `seed` drives the CV
// folds. The spec must be a HAL estimator. `family` overrides outcome-type
// detection; binomial demands a 0/1 outcome.
FittedHal fit_hal(const EstimatorSpec& spec, const Dataset& data,
                  std::uint64_t seed, std::optional<Family> family = {});

// Curve with delta-method intervals from a fitted model; grid values are on
// the original treatment scale (clipped to the training range).
CurveEstimate hal_curve(const FittedHal& model, std::span<const double> y,
                        std::span<const double> grid, double alpha = 0.05);

struct EstimateResult {
    CurveEstimate curve;
    int chosen_order = -1;  // 0/1 for hal, -1 for poly
    double lambda_cv = 0.0;
    double lambda_final = 0.0;
    std::size_t active_count = 0;  // nonzero non-intercept coefficients
};

// One replication's work: fit the requested estimator on `data` and estimate
// the curve over `grid`. Throws on validation or numerical failure; the
// experiment harness records such replications as failed.
EstimateResult run_estimator(const EstimatorSpec& spec, const Dataset& data,
                             std::span<const double> grid, double alpha,
                             std::uint64_t seed);

}  // namespace halcurve
