#pragma once

// Versioned JSON model artifacts. A saved model is self-contained: scaling
// transforms, the active basis functions with their coefficients, the family,
// both selected penalties, and the selector trace. Reloading it and rebuilding
// the reduced design on the training data reproduces predictions and
// delta-method intervals bit-for-bit.

#include <span>
#include <string>
#include <vector>

#include "halcurve/baselines.hpp"
#include "halcurve/estimators.hpp"

namespace halcurve {

inline constexpr int kModelSchemaVersion = 1;

struct LoadedModel {
    EstimatorKind kind = EstimatorKind::hal;
    Family family = Family::gaussian();
    std::string estimator_token;
    std::vector<std::string> column_names;  // W..., A; treatment last

    // Spline-model fields (kind == hal).
    int order = 0;
    UnitScaler scaler;
    std::vector<BasisFunction> bases;  // active bases, original column order
    std::vector<double> beta;          // [intercept, one per basis]
    double lambda_cv = 0.0;
    double lambda_final = 0.0;

    // Polynomial fields (kind == poly).
    PolyModel poly;
};

// Serializes a fitted pipeline. The selector trace (per-candidate CV risk
// curves, the undersmoothing walk) is embedded for inspection; non-finite
// trace entries become JSON nulls.
std::string model_to_json(const FittedHal& model, const EstimatorSpec& spec,
                          std::span<const std::string> column_names);
std::string model_to_json(const PolyModel& model, const EstimatorSpec& spec,
                          std::span<const std::string> column_names);

// Parses either artifact form. Throws ValidationError on malformed JSON, a
// wrong schema_version, or inconsistent shapes.
LoadedModel model_from_json(const std::string& text);

// Curve plus intervals from a reloaded model and its training dataset.
// Equals the in-memory estimate bit-for-bit on the same data. Grid values are
// on the original treatment scale.
CurveEstimate loaded_curve(const LoadedModel& model, const Dataset& data,
                           std::span<const double> grid, double alpha = 0.05);

}  // namespace halcurve
