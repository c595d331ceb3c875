#pragma once

// Replicated simulation experiments: four structural data-generating
// distributions over (W, A, Y), Monte-Carlo ground-truth curves, an
// embarrassingly parallel replication harness with counter-derived seeds
// (bit-identical reports for any worker count), pointwise evaluation
// metrics against the truth, and a penalty grid scan.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "halcurve/dataset.hpp"
#include "halcurve/estimators.hpp"

namespace halcurve {

// --- data generation -------------------------------------------------------

// The conditional log odds of Y = 1 given (W, A) for one generator id (1-4).
double dgd_logit(int dgd_id, double w, double a);

// n i.i.d. draws of (W, A, Y): W standard normal, A a W-dependent normal
// clamped into [0,5] (point masses at the ends), Y a Bernoulli through
// dgd_logit. Deterministic in seed. Throws ValidationError for an unknown id
// or n < 1.
Dataset generate(int dgd_id, std::size_t n, std::uint64_t seed);

// The default evaluation grid: a = 0.0, 0.2, ..., 5.0.
std::vector<double> default_grid();

// --- ground truth -----------------------------------------------------------

struct TrueCurve {
    std::vector<double> grid;
    std::vector<double> psi0;   // E_W expit(dgd_logit(W, a)), in [0,1]
    std::vector<double> mc_se;  // Monte Carlo error per point
    std::size_t n_mc = 0;
};

// psi0 by Monte Carlo over a fixed-seed W sample shared across grid points
// (the seed is a pure function of dgd_id, so truths are reproducible).
// Requires n_mc >= 1e5; mc_se <= 0.5/sqrt(n_mc) always.
TrueCurve true_curve(int dgd_id, std::span<const double> grid,
                     std::size_t n_mc = 10'000'000);

// --- metrics ----------------------------------------------------------------

struct MetricRow {
    double a = 0.0;
    double abs_bias = 0.0;       // |mean(est) - psi0|
    double oracle_se = 0.0;      // SD of the estimates across replications
    double mse = 0.0;            // mean squared error against psi0
    double bias_se_delta = 0.0;  // abs_bias / mean_delta_se
    double bias_se_oracle = 0.0; // abs_bias / oracle_se
    double cov_delta = 0.0;      // psi0 inside est ± z·delta-SE
    double cov_oracle = 0.0;     // psi0 inside est ± z·oracle-SE
    double mean_delta_se = 0.0;
};

// One row per grid point. `estimates` and `delta_ses` are replication-major
// (estimates[r][g]); requires at least two replications.
std::vector<MetricRow> compute_metrics(
    std::span<const double> grid,
    const std::vector<std::vector<double>>& estimates,
    const std::vector<std::vector<double>>& delta_ses,
    std::span<const double> psi0, double alpha = 0.05);

// --- replication harness ----------------------------------------------------

struct ExperimentConfig {
    int dgd_id = 1;
    std::size_t n = 1000;
    int n_reps = 100;
    std::string estimator = "adapt-u";
    std::vector<double> grid = default_grid();
    double alpha = 0.05;
    std::uint64_t master_seed = 1;
    int jobs = 1;
};

struct RepRecord {
    bool failed = false;
    std::string error;          // failure message when failed
    std::vector<double> psi;    // per grid point
    std::vector<double> se;
    int chosen_order = -1;
    double lambda_cv = 0.0;
    double lambda_final = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<MetricRow> rows;     // over successful replications
    std::vector<RepRecord> reps;     // all replications, in index order
    int failures = 0;
    bool flagged = false;            // failures exceed 5% of n_reps
    double order1_fraction = 0.0;    // successful reps that chose order 1
};

// The per-replication estimator: the token-driven pipeline by default, or
// any injected stand-in with the same shape (tests use synthetic ones).
using EstimatorFn = std::function<EstimateResult(
    const Dataset& data, std::span<const double> grid, double alpha,
    std::uint64_t seed)>;

// Runs n_reps independent replications against `truth` (whose grid must
// match config.grid): replication r draws its dataset with seed
// derive_seed(derive_seed(master_seed, r), 0) and estimates with fold seed
// derive_seed(..., 1), so results are independent of scheduling. Failed
// replications are recorded and excluded from the metrics. Requires
// n_reps >= 2 (after exclusions, at least 2 must survive).
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const TrueCurve& truth);
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const TrueCurve& truth,
                                const EstimatorFn& estimator);

// --- penalty grid scan -------------------------------------------------------

struct GridScanConfig {
    int dgd_id = 3;
    std::size_t n = 1000;
    int n_reps = 50;
    std::vector<double> lambdas;     // strictly decreasing, shared by reps
    std::vector<double> eval_points = {0.4, 1.0, 1.4, 3.0, 4.2};
    int order = 0;                   // basis order for the scanned fits
    double alpha = 0.05;
    std::uint64_t master_seed = 1;
    int jobs = 1;
};

struct GridScanResult {
    GridScanConfig config;
    // rows[l] holds one MetricRow per eval point at lambdas[l].
    std::vector<std::vector<MetricRow>> rows;
    std::vector<double> lambda_cv;   // per successful replication
    std::vector<double> lambda_u;
    int failures = 0;
    bool flagged = false;
};

// Fits every replication once per lambda (warm-started down the shared
// grid), records delta CIs at the eval points, and separately runs the
// CV + undersmoothing selectors per replication so the selected penalties
// can be placed on the same axis. Throws ValidationError when the lambda
// grid is empty or not strictly decreasing.
GridScanResult grid_scan(const GridScanConfig& config, const TrueCurve& truth);

}  // namespace halcurve
