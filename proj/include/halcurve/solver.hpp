#pragma once

// L1-penalized regression over a DesignMatrix by cyclic coordinate descent.
//
// Objective: (1/N) * sum_i w_i * loss(y_i, eta_i) + lambda * sum_{j>=1} |beta_j|
// with N = sum_i w_i, loss = (y-eta)^2/2 (gaussian) or -y*eta + log(1+e^eta)
// (binomial), and the intercept (column 0) unpenalized. Columns are used as-is
// -- no standardization -- so the penalty weighs every basis function equally
// and the coefficient L1 norm keeps its sectional-variation meaning.
//
// Optional row weights cover cross-validation fold masks (0/1), bootstrap
// multiplicities, and anything else nonnegative; the binomial family is
// handled by iteratively reweighted least squares wrapped around the same
// weighted gaussian coordinate-descent core.

#include <cstddef>
#include <span>
#include <vector>

#include "halcurve/basis.hpp"

namespace halcurve {

enum class FamilyKind { gaussian, binomial };

struct Family {
    FamilyKind kind = FamilyKind::gaussian;

    static Family gaussian() { return {FamilyKind::gaussian}; }
    static Family binomial() { return {FamilyKind::binomial}; }
    bool is_binomial() const { return kind == FamilyKind::binomial; }

    // Mean response for a linear predictor.
    double response(double eta) const;
};

// Carries per-column score magnitudes from one binomial fit to the next fit
// of a descending lambda walk on the same design/outcome/weights. A fit that
// converges with a clean optimality screen deposits |score| for every column
// outside its final nonzero set (and +infinity for the columns it was
// tracking), and the next fit's strong-rule pre-screen reads them instead of
// paying a full pass over the columns. Purely an accelerator: fits behave
// identically with or without it, and a fit that cannot vouch for its scores
// (no clean screen) marks the handoff invalid so the next fit screens itself.
struct PathHandoff {
    std::vector<double> scores;
    bool valid = false;
};

struct FitOptions {
    // Sweep-level stop: a sweep whose largest coefficient move is below this
    // (or whose largest stationarity-gap move is below a quarter of it, which
    // is what the coefficient rule certifies on fully supported indicator
    // columns) counts as converged.
    double coef_tol = 1e-7;
    int max_sweeps = 10000;  // total coordinate-descent sweep budget per fit
    // Binomial outer loop: stop when the (weighted, unnormalized) deviance
    // moves by less than this fraction of the null deviance between
    // reweightings. Measuring relative to the null deviance keeps the rule
    // invariant to sample size and weight scale.
    double deviance_tol = 1e-8;
    int max_outer = 100;
    // Probabilities are kept inside [clip, 1-clip] when forming IRLS weights
    // and working responses.
    double prob_clip = 1e-5;
    // Binomial fits that explain this fraction of the null deviance stop as
    // saturated: the penalty is so small the model is interpolating, and
    // polishing an interpolator is wasted work. Saturated fits are flagged.
    double saturation_dev_ratio = 0.999;
    // After the stopping rules are met, run one extra pass at a tolerance an
    // order tighter so the reported coefficients are sharply stationary.
    // Model-selection sweeps over many candidate lambdas can turn this off:
    // risk evaluation and score-based selection cannot perceive the last
    // order of magnitude, and on large collinear designs it is the single
    // most expensive phase of a fit.
    bool final_polish = true;
    // Optional accelerator for walking a descending lambda path (see
    // PathHandoff). Pass the same handoff object to every fit of the walk.
    PathHandoff* handoff = nullptr;
    // When set, the penalized objective is appended after every sweep
    // (gaussian) or outer reweighting (binomial). Test/diagnostic hook.
    std::vector<double>* objective_trace = nullptr;
};

struct HalFit {
    std::vector<double> beta;  // aligned with design columns; [0] = intercept
    double lambda = 0.0;
    Family family;
    bool converged = true;
    bool saturated = false;     // stopped at the saturation deviance ratio
    int sweeps = 0;
    int outer_iterations = 0;   // IRLS reweightings (0 for gaussian)
    std::vector<double> eta;    // linear predictor at the training rows
    double l1 = 0.0;            // l1_norm(beta), intercept included

    // Non-intercept columns with nonzero coefficients.
    std::vector<std::size_t> active() const;
};

// lambda_max = max_{j>=1} |(1/n) sum_i phi_ij (y_i - ybar)| with ybar the
// outcome mean (for both families this is the smallest penalty whose fit is
// intercept-only), followed by a geometric path of n_lambda values down to
// lambda_max * lambda_min_ratio. Throws ValidationError when the outcome is
// degenerate (constant), which would give lambda_max = 0.
std::vector<double> lambda_path(const DesignMatrix& X, std::span<const double> y,
                                Family family, int n_lambda = 50,
                                double lambda_min_ratio = 1e-3);

// Fits one penalty value. `warm` (optional) supplies starting coefficients
// from a neighboring lambda; `weights` (optional, length n) are nonnegative
// row weights, empty meaning all ones.
HalFit fit_lasso(const DesignMatrix& X, std::span<const double> y, Family family,
                 double lambda, const HalFit* warm = nullptr,
                 const FitOptions& opts = {},
                 std::span<const double> weights = {});

// Linear predictor over the design's rows for an arbitrary coefficient vector.
std::vector<double> design_eta(const DesignMatrix& X, std::span<const double> beta);

// The penalized objective the solver minimizes (for tests and oracles).
double penalized_objective(const DesignMatrix& X, std::span<const double> y,
                           Family family, double lambda,
                           std::span<const double> beta,
                           std::span<const double> weights = {});

// Empirical score (1/n) sum_i phi_ij * residual_i for the requested columns
// (all columns when `cols` is empty). `residual` is on the response scale:
// y - eta for gaussian, y - expit(eta) for binomial.
std::vector<double> empirical_scores(const DesignMatrix& X,
                                     std::span<const double> residual,
                                     std::span<const std::size_t> cols = {});

}  // namespace halcurve
