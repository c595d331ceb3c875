#include "halcurve/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <thread>
#include <utility>
#include <vector>

#include "halcurve/errors.hpp"
#include "halcurve/rng.hpp"
#include "halcurve/solver.hpp"
#include "halcurve/stats.hpp"

namespace halcurve {

namespace {

struct TreatmentLaw {
    double intercept;  // A = bound(intercept - 0.5 W + noise, 0, 5)
    double noise_sd;
};

TreatmentLaw treatment_law(int dgd_id) {
    switch (dgd_id) {
        case 1: return {2.0, 2.0};
        case 2: return {2.5, 1.3};
        case 3: return {2.0, 2.0};
        case 4: return {2.5, 1.0};
        default:
            throw ValidationError("unknown data-generating distribution id " +
                                  std::to_string(dgd_id) + " (expected 1-4)");
    }
}

// Neumaier compensated accumulator: cheap insurance for the 10^7-term truth
// sums, whose Monte Carlo error target is close to naive summation error.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

// Runs `body(r)` for r in [0, n_tasks) on up to `jobs` threads. Each task
// writes only its own slot, so scheduling cannot affect results.
void parallel_for(int n_tasks, int jobs, const std::function<void(int)>& body) {
    const int workers = std::max(1, std::min(jobs, n_tasks));
    if (workers == 1) {
        for (int r = 0; r < n_tasks; ++r) body(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            for (int r = next.fetch_add(1); r < n_tasks; r = next.fetch_add(1)) {
                body(r);
            }
        });
    }
    for (auto& th : pool) th.join();
}

std::string describe_failure(const std::exception& e) {
    const char* what = e.what();
    return (what != nullptr && *what != '\0') ? what : "unknown failure";
}

}  // namespace

double dgd_logit(int dgd_id, double w, double a) {
    switch (dgd_id) {
        case 1:
            return -3.0 + 0.5 * w + 1.25 * a - 0.5 * w * a;
        case 2:
            return -5.0 + 3.0 * w + 5.0 * std::sin(1.25 * std::pow(a, 1.5)) +
                   3.0 * w * a;
        case 3:
            return -4.0 - 2.0 * w + 1.5 * a +
                   (a > 2.0 ? 1.5 * std::sin(0.64 * a * a - 2.56) : 0.0);
        case 4:
            return -2.0 + w + (a >= 2.0 ? a : 0.0) - (a >= 4.0 ? a : 0.0) -
                   0.5 * w * a;
        default:
            throw ValidationError("unknown data-generating distribution id " +
                                  std::to_string(dgd_id) + " (expected 1-4)");
    }
}

Dataset generate(int dgd_id, std::size_t n, std::uint64_t seed) {
    const TreatmentLaw law = treatment_law(dgd_id);
    if (n < 1) {
        throw ValidationError("generate: need at least one observation");
    }
    Rng rng(seed);
    Dataset data;
    data.w_names = {"W"};
    data.W.assign(1, std::vector<double>(n));
    data.A.resize(n);
    data.Y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = rng.normal();
        const double a =
            std::clamp(law.intercept - 0.5 * w + rng.normal(0.0, law.noise_sd),
                       0.0, 5.0);
        const double u_y = rng.uniform01();
        data.W[0][i] = w;
        data.A[i] = a;
        data.Y[i] = u_y < expit(dgd_logit(dgd_id, w, a)) ? 1.0 : 0.0;
    }
    return data;
}

std::vector<double> default_grid() {
    std::vector<double> grid;
    grid.reserve(26);
    for (int t = 0; t <= 25; ++t) grid.push_back(0.2 * t);
    return grid;
}

TrueCurve true_curve(int dgd_id, std::span<const double> grid,
                     std::size_t n_mc) {
    treatment_law(dgd_id);  // validates the id
    if (grid.empty()) {
        throw ValidationError("true_curve: the treatment grid is empty");
    }
    if (n_mc < 100'000) {
        throw ValidationError(
            "true_curve: need at least 1e5 Monte Carlo draws");
    }
    TrueCurve tc;
    tc.grid.assign(grid.begin(), grid.end());
    tc.n_mc = n_mc;

    // One W sample shared across grid points: common random numbers keep the
    // curve estimate smooth in a; the seed depends only on the generator id.
    Rng rng(derive_seed(0x742d5452555448ull, static_cast<std::uint64_t>(dgd_id)));
    std::vector<KahanSum> sum(grid.size());
    std::vector<KahanSum> sumsq(grid.size());
    for (std::size_t i = 0; i < n_mc; ++i) {
        const double w = rng.normal();
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double p = expit(dgd_logit(dgd_id, w, grid[g]));
            sum[g].add(p);
            sumsq[g].add(p * p);
        }
    }
    const double dn = static_cast<double>(n_mc);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double mean_p = sum[g].value() / dn;
        const double var =
            std::max(0.0, (sumsq[g].value() - dn * mean_p * mean_p) / (dn - 1.0));
        tc.psi0.push_back(mean_p);
        tc.mc_se.push_back(std::sqrt(var / dn));
    }
    return tc;
}

std::vector<MetricRow> compute_metrics(
    std::span<const double> grid,
    const std::vector<std::vector<double>>& estimates,
    const std::vector<std::vector<double>>& delta_ses,
    std::span<const double> psi0, double alpha) {
    const std::size_t reps = estimates.size();
    if (reps < 2) {
        throw ValidationError("compute_metrics: need at least 2 replications");
    }
    if (delta_ses.size() != reps) {
        throw ValidationError(
            "compute_metrics: estimates and standard errors disagree on the "
            "replication count");
    }
    if (psi0.size() != grid.size()) {
        throw ValidationError(
            "compute_metrics: truth and grid lengths differ");
    }
    for (std::size_t r = 0; r < reps; ++r) {
        if (estimates[r].size() != grid.size() ||
            delta_ses[r].size() != grid.size()) {
            throw ValidationError(
                "compute_metrics: a replication's row length does not match "
                "the grid");
        }
    }
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double dr = static_cast<double>(reps);

    std::vector<MetricRow> rows;
    rows.reserve(grid.size());
    std::vector<double> col(reps);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        MetricRow row;
        row.a = grid[g];
        double mean_est = 0.0;
        double mse = 0.0;
        double mean_se = 0.0;
        double hits_delta = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const double est = estimates[r][g];
            col[r] = est;
            mean_est += est;
            const double err = est - psi0[g];
            mse += err * err;
            mean_se += delta_ses[r][g];
            if (std::abs(err) <= z * delta_ses[r][g]) hits_delta += 1.0;
        }
        mean_est /= dr;
        row.abs_bias = std::abs(mean_est - psi0[g]);
        row.oracle_se = sample_sd(col);
        row.mse = mse / dr;
        row.mean_delta_se = mean_se / dr;
        row.cov_delta = hits_delta / dr;
        double hits_oracle = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            if (std::abs(col[r] - psi0[g]) <= z * row.oracle_se) {
                hits_oracle += 1.0;
            }
        }
        row.cov_oracle = hits_oracle / dr;
        const auto ratio = [&](double se) {
            return row.abs_bias == 0.0 ? 0.0 : row.abs_bias / se;
        };
        row.bias_se_delta = ratio(row.mean_delta_se);
        row.bias_se_oracle = ratio(row.oracle_se);
        rows.push_back(row);
    }
    return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const TrueCurve& truth) {
    const EstimatorSpec spec = parse_estimator(config.estimator);
    return run_experiment(
        config, truth,
        [&spec](const Dataset& data, std::span<const double> grid, double alpha,
                std::uint64_t seed) {
            return run_estimator(spec, data, grid, alpha, seed);
        });
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const TrueCurve& truth,
                                const EstimatorFn& estimator) {
    if (config.n_reps < 2) {
        throw ValidationError("run_experiment: need at least 2 replications");
    }
    if (truth.grid.size() != config.grid.size()) {
        throw ValidationError(
            "run_experiment: the truth was computed on a different grid");
    }
    for (std::size_t g = 0; g < truth.grid.size(); ++g) {
        if (std::abs(truth.grid[g] - config.grid[g]) > 1e-12) {
            throw ValidationError(
                "run_experiment: the truth was computed on a different grid");
        }
    }

    ExperimentResult result;
    result.config = config;
    result.reps.assign(static_cast<std::size_t>(config.n_reps), RepRecord{});

    parallel_for(config.n_reps, config.jobs, [&](int r) {
        RepRecord& rec = result.reps[static_cast<std::size_t>(r)];
        const std::uint64_t rep_seed =
            derive_seed(config.master_seed, static_cast<std::uint64_t>(r));
        try {
            const Dataset data =
                generate(config.dgd_id, config.n, derive_seed(rep_seed, 0));
            const EstimateResult est = estimator(data, config.grid,
                                                 config.alpha,
                                                 derive_seed(rep_seed, 1));
            rec.psi = est.curve.psi;
            rec.se = est.curve.se;
            rec.chosen_order = est.chosen_order;
            rec.lambda_cv = est.lambda_cv;
            rec.lambda_final = est.lambda_final;
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.error = describe_failure(e);
        }
    });

    std::vector<std::vector<double>> estimates;
    std::vector<std::vector<double>> ses;
    double order1 = 0.0;
    for (const RepRecord& rec : result.reps) {
        if (rec.failed) {
            ++result.failures;
            continue;
        }
        estimates.push_back(rec.psi);
        ses.push_back(rec.se);
        if (rec.chosen_order == 1) order1 += 1.0;
    }
    result.flagged = 20 * result.failures > config.n_reps;
    if (estimates.size() < 2) {
        throw NumericalError(
            "run_experiment: fewer than two replications succeeded");
    }
    result.order1_fraction = order1 / static_cast<double>(estimates.size());
    result.rows = compute_metrics(config.grid, estimates, ses, truth.psi0,
                                  config.alpha);
    return result;
}

GridScanResult grid_scan(const GridScanConfig& config, const TrueCurve& truth) {
    if (config.lambdas.empty()) {
        throw ValidationError("grid_scan: the lambda grid is empty");
    }
    for (std::size_t l = 1; l < config.lambdas.size(); ++l) {
        if (!(config.lambdas[l] < config.lambdas[l - 1])) {
            throw ValidationError(
                "grid_scan: the lambda grid must be strictly decreasing");
        }
    }
    if (config.lambdas.front() <= 0.0 ||
        config.lambdas.back() <= 0.0) {
        throw ValidationError("grid_scan: lambdas must be positive");
    }
    if (config.order != 0 && config.order != 1) {
        throw ValidationError("grid_scan: basis order must be 0 or 1");
    }
    if (config.n_reps < 2) {
        throw ValidationError("grid_scan: need at least 2 replications");
    }
    if (truth.grid.size() != config.eval_points.size()) {
        throw ValidationError(
            "grid_scan: the truth was computed on a different point set");
    }
    for (std::size_t g = 0; g < truth.grid.size(); ++g) {
        if (std::abs(truth.grid[g] - config.eval_points[g]) > 1e-12) {
            throw ValidationError(
                "grid_scan: the truth was computed on a different point set");
        }
    }

    struct RepScan {
        bool failed = false;
        std::string error;
        // psi[l][g] over (lambda, eval point).
        std::vector<std::vector<double>> psi;
        std::vector<std::vector<double>> se;
        double lambda_cv = 0.0;
        double lambda_u = 0.0;
    };
    const std::size_t n_lambda = config.lambdas.size();
    std::vector<RepScan> scans(static_cast<std::size_t>(config.n_reps));

    parallel_for(config.n_reps, config.jobs, [&](int r) {
        RepScan& scan = scans[static_cast<std::size_t>(r)];
        const std::uint64_t rep_seed =
            derive_seed(config.master_seed, static_cast<std::uint64_t>(r));
        try {
            const Dataset data =
                generate(config.dgd_id, config.n, derive_seed(rep_seed, 0));
            const auto cols = design_columns(data);
            const UnitScaler scaler =
                UnitScaler::fit(cols, design_column_names(data));
            const auto scaled = scaler.apply(cols);
            const Family family = detect_family(data.Y);
            const DesignMatrix design = build_design(
                scaled, generate_knots(scaled, config.order, KnotOptions{}));

            std::vector<double> sgrid;
            const ColumnScale& a_scale = scaler.columns.back();
            for (double a : config.eval_points) {
                sgrid.push_back(a_scale.to_unit(a));
            }

            FitOptions opts;
            PathHandoff hand;
            opts.handoff = &hand;
            HalFit fit;
            scan.psi.resize(n_lambda);
            scan.se.resize(n_lambda);
            for (std::size_t l = 0; l < n_lambda; ++l) {
                fit = fit_lasso(design, data.Y, family, config.lambdas[l],
                                l == 0 ? nullptr : &fit, opts);
                const ModelView view{design, fit, data.Y, scaled,
                                     scaled.size() - 1};
                DeltaOptions dopts;
                dopts.alpha = config.alpha;
                const CurveEstimate ce =
                    delta_ci(view, config.eval_points, sgrid, dopts).curve;
                scan.psi[l] = ce.psi;
                scan.se[l] = ce.se;
            }

            // Position the data-driven penalty selections on the same axis.
            HalConfig sel_cfg;
            sel_cfg.order =
                config.order == 0 ? Smoothness::order0 : Smoothness::order1;
            sel_cfg.selector = Selector::undersmooth;
            sel_cfg.family = family;
            sel_cfg.seed = derive_seed(rep_seed, 1);
            const SelectionResult sel = select_model(scaled, data.Y, sel_cfg);
            scan.lambda_cv = sel.lambda_cv;
            scan.lambda_u = sel.lambda_final;
        } catch (const std::exception& e) {
            scan.failed = true;
            scan.error = describe_failure(e);
        }
    });

    GridScanResult result;
    result.config = config;
    std::vector<std::size_t> ok;
    for (std::size_t r = 0; r < scans.size(); ++r) {
        if (scans[r].failed) {
            ++result.failures;
        } else {
            ok.push_back(r);
        }
    }
    result.flagged = 20 * result.failures > config.n_reps;
    if (ok.size() < 2) {
        throw NumericalError(
            "grid_scan: fewer than two replications succeeded");
    }
    result.rows.resize(n_lambda);
    std::vector<std::vector<double>> est(ok.size());
    std::vector<std::vector<double>> ses(ok.size());
    for (std::size_t l = 0; l < n_lambda; ++l) {
        for (std::size_t k = 0; k < ok.size(); ++k) {
            est[k] = scans[ok[k]].psi[l];
            ses[k] = scans[ok[k]].se[l];
        }
        result.rows[l] = compute_metrics(config.eval_points, est, ses,
                                         truth.psi0, config.alpha);
    }
    for (std::size_t k : ok) {
        result.lambda_cv.push_back(scans[k].lambda_cv);
        result.lambda_u.push_back(scans[k].lambda_u);
    }
    return result;
}

}  // namespace halcurve
