#pragma once

// Plug-in dose-response curves and delta-method confidence intervals.
//
// The curve is the empirical average of counterfactual predictions,
//   psi(a) = (1/n) sum_i response(phi(a, W_i)' beta),
// at the penalized coefficients. Standard errors come from working-model
// influence curves: the selected model ({intercept} union active set) is
// refit without penalty so its score equations hold exactly, giving
//   ic_beta_i = M^{-1} phi_i (y_i - fitted_i),
// with M the (weighted) working-model Gram matrix, and per grid point
//   ic_psi_i(a) = m(a)' ic_beta_i,
// where m(a) is the delta-method direction through the response link at the
// penalized coefficients. Intervals are Wald intervals, never clipped.

#include <cstddef>
#include <span>
#include <vector>

#include "halcurve/basis.hpp"
#include "halcurve/solver.hpp"

namespace halcurve {

struct CurveEstimate {
    std::vector<double> grid;   // treatment values on the original scale
    std::vector<double> psi;    // plug-in estimate per grid point
    std::vector<double> se;     // delta-method standard error per grid point
    std::vector<double> ci_lo;  // psi - z * se
    std::vector<double> ci_hi;  // psi + z * se
    double alpha = 0.05;
    std::size_t n = 0;
    bool ridged = false;  // the working-model Gram needed a ridge fallback
};

struct InfluenceCurves {
    // Design columns of the working model; model_cols[0] == 0 (intercept).
    std::vector<std::size_t> model_cols;
    // n x q, row-major: ic_beta[i*q + c] is observation i's influence on the
    // working-model coefficient of model_cols[c].
    std::vector<double> ic_beta;
    // Per grid point, the n influence values whose variance gives se(a)^2*n.
    std::vector<std::vector<double>> ic_psi;
    bool ridged = false;
};

// Everything inference needs about one fitted model. `cols` are the scaled
// training coordinates (the same ones the design was built from), and
// `treatment_col` indexes the coordinate that counterfactual evaluation
// replaces with a grid value.
struct ModelView {
    const DesignMatrix& X;  // training design; X.bases aligns with fit.beta
    const HalFit& fit;      // penalized coefficients
    std::span<const double> y;
    const std::vector<std::vector<double>>& cols;
    std::size_t treatment_col = 0;
};

// Plug-in curve only. `scaled_grid` holds treatment values mapped into the
// design's [0,1] coordinate system. Throws ValidationError on an empty grid.
std::vector<double> estimate_curve(const ModelView& model,
                                   std::span<const double> scaled_grid);

struct DeltaOptions {
    double alpha = 0.05;
    // Add the empirical-W averaging term (counterfactual prediction minus
    // psi(a)) to each influence value. Off by default: the reported interval
    // is the working-model delta interval.
    bool augment_w_term = false;
    // Also populate InfluenceCurves (delta_ci always computes them
    // internally; this controls whether they are returned).
    bool keep_influence = false;
};

struct DeltaResult {
    CurveEstimate curve;
    InfluenceCurves influence;  // populated when keep_influence is set
};

// Delta-method confidence intervals for the curve at every grid point.
// `grid` is the original-scale treatment values reported in the estimate;
// `scaled_grid` the same points in design coordinates. Throws
// ValidationError for an empty grid or alpha outside (0,1), NumericalError
// if the working-model Gram stays singular after the ridge fallback.
DeltaResult delta_ci(const ModelView& model, std::span<const double> grid,
                     std::span<const double> scaled_grid,
                     const DeltaOptions& opts = {});

}  // namespace halcurve
