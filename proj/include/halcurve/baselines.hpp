#pragma once

// Parametric plug-in comparator: an unpenalized polynomial regression of the
// outcome on {1, A, ..., A^degree} ∪ {W_j} ∪ {W_j * A}, fit on the original
// (unscaled) variables, with the same counterfactual-averaging curve and
// delta-method intervals as the adaptive estimator. Its working model is the
// full fitted model, so no refit step is involved.

#include <cstddef>
#include <span>
#include <vector>

#include "halcurve/dataset.hpp"
#include "halcurve/inference.hpp"
#include "halcurve/solver.hpp"

namespace halcurve {

struct PolyModel {
    int degree = 0;
    std::size_t n_covariates = 0;
    // Term order: 1, A, A^2, ..., A^degree, W_1..W_m, W_1*A..W_m*A.
    std::vector<double> beta;
    Family family;
};

// Number of regression terms for a degree/covariate combination.
inline std::size_t poly_term_count(int degree, std::size_t n_covariates) {
    return 1 + static_cast<std::size_t>(degree) + 2 * n_covariates;
}

// Unpenalized fit: least squares (gaussian) or Newton maximum likelihood
// (binomial, score tolerance 1e-9, at most 200 iterations). Throws
// ValidationError when degree < 1 or n is not larger than the term count,
// NumericalError on a rank-deficient design or a non-convergent fit.
PolyModel fit_poly(const Dataset& data, int degree, Family family);

// Plug-in dose-response curve with delta-method intervals at every grid
// point, averaging counterfactual predictions over the sample's covariate
// rows. `data` must be the sample the model was fit on (its residuals enter
// the influence values); grid values are clipped to the observed treatment
// range. Throws ValidationError for an empty grid or alpha outside (0,1).
CurveEstimate poly_curve(const PolyModel& model, const Dataset& data,
                         std::span<const double> grid, double alpha = 0.05);

}  // namespace halcurve
