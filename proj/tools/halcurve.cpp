// Command-line surface: fit models on CSV data, estimate dose-response
// curves with confidence ribbons, and run replicated simulation experiments
// and penalty grid scans that emit CSV/JSON reports plus SVG figures.
//
// Exit codes: 0 success, 2 input validation, 3 numerical failure,
// 4 experiment flagged (more than 5% of replications failed).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "halcurve/baselines.hpp"
#include "halcurve/dataset.hpp"
#include "halcurve/errors.hpp"
#include "halcurve/estimators.hpp"
#include "halcurve/io.hpp"
#include "halcurve/model_io.hpp"
#include "halcurve/simulation.hpp"
#include "halcurve/stats.hpp"
#include "halcurve/svg.hpp"

namespace {

using halcurve::format_double;
using halcurve::ValidationError;
using nlohmann::json;

// "lo:hi:count" or a comma-separated value list.
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    const auto to_double = [&](const std::string& tok) {
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size() || !std::isfinite(v)) throw std::exception();
            return v;
        } catch (...) {
            throw ValidationError("grid: cannot parse number \"" + tok + "\"");
        }
    };
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ':')) parts.push_back(tok);
        if (parts.size() != 3) {
            throw ValidationError(
                "grid: range form must be lo:hi:count, e.g. 0:5:26");
        }
        const double lo = to_double(parts[0]);
        const double hi = to_double(parts[1]);
        const long count = std::lround(to_double(parts[2]));
        if (count < 1 || hi < lo) {
            throw ValidationError(
                "grid: need hi >= lo and a positive point count");
        }
        for (long i = 0; i < count; ++i) {
            out.push_back(count == 1
                              ? lo
                              : lo + (hi - lo) * static_cast<double>(i) /
                                         static_cast<double>(count - 1));
        }
        return out;
    }
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(to_double(tok));
    }
    if (out.empty()) throw ValidationError("grid: no points given");
    return out;
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::optional<halcurve::Family> parse_family_flag(const std::string& name) {
    if (name == "auto") return std::nullopt;
    if (name == "gaussian") return halcurve::Family::gaussian();
    if (name == "binomial") return halcurve::Family::binomial();
    throw ValidationError("--family must be auto, gaussian or binomial (got \"" +
                          name + "\")");
}

std::string curve_csv(const halcurve::CurveEstimate& curve) {
    std::string out = "a,psi,se,ci_lo,ci_hi\n";
    for (std::size_t g = 0; g < curve.grid.size(); ++g) {
        out += format_double(curve.grid[g]) + "," + format_double(curve.psi[g]) +
               "," + format_double(curve.se[g]) + "," +
               format_double(curve.ci_lo[g]) + "," +
               format_double(curve.ci_hi[g]) + "\n";
    }
    return out;
}

void ensure_parent_dir(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
}

// ---------------------------------------------------------------- fit ----

struct FitArgs {
    std::string data_path;
    std::string out_path = "model.json";
    std::string config_path;
    std::string estimator = "adapt-cv";
    std::string family = "auto";
    std::uint64_t seed = 1;
};

int cmd_fit(const FitArgs& args, bool estimator_given, bool family_given,
            bool seed_given) {
    FitArgs a = args;
    if (!a.config_path.empty()) {
        json cfg;
        try {
            cfg = json::parse(halcurve::read_file(a.config_path));
        } catch (const json::exception& e) {
            throw ValidationError(std::string("config file: invalid JSON: ") +
                                  e.what());
        }
        for (const auto& [key, value] : cfg.items()) {
            try {
                if (key == "estimator") {
                    if (!estimator_given) a.estimator = value.get<std::string>();
                } else if (key == "family") {
                    if (!family_given) a.family = value.get<std::string>();
                } else if (key == "seed") {
                    if (!seed_given) a.seed = value.get<std::uint64_t>();
                } else {
                    throw ValidationError("config file: unknown field \"" + key +
                                          "\"");
                }
            } catch (const json::exception& e) {
                throw ValidationError("config file: field \"" + key +
                                      "\": " + e.what());
            }
        }
    }

    const halcurve::EstimatorSpec spec = halcurve::parse_estimator(a.estimator);
    const std::optional<halcurve::Family> family = parse_family_flag(a.family);
    const halcurve::Dataset data = halcurve::load_dataset_csv(a.data_path);
    const auto names = halcurve::design_column_names(data);

    std::string artifact;
    if (spec.kind == halcurve::EstimatorKind::poly) {
        const halcurve::Family fam =
            family ? *family : halcurve::detect_family(data.Y);
        const halcurve::PolyModel model =
            halcurve::fit_poly(data, spec.degree, fam);
        artifact = halcurve::model_to_json(model, spec, names);
        std::cout << "estimator " << spec.token << "\nfamily "
                  << (fam.is_binomial() ? "binomial" : "gaussian")
                  << "\nterms " << model.beta.size() << "\n";
    } else {
        const halcurve::FittedHal model =
            halcurve::fit_hal(spec, data, a.seed, family);
        artifact = halcurve::model_to_json(model, spec, names);
        std::cout << "estimator " << spec.token << "\nfamily "
                  << (model.fit.family.is_binomial() ? "binomial" : "gaussian")
                  << "\nlambda_cv " << format_double(model.sel.lambda_cv)
                  << "\nlambda_final " << format_double(model.sel.lambda_final)
                  << "\nl1_norm " << format_double(model.fit.l1)
                  << "\nactive_size " << model.fit.active().size() << "\n";
    }
    ensure_parent_dir(a.out_path);
    halcurve::write_file_atomic(a.out_path, artifact);
    std::cout << "wrote " << a.out_path << "\n";
    return 0;
}

// -------------------------------------------------------------- curve ----

struct CurveArgs {
    std::string model_path;
    std::string data_path;
    std::string out_csv = "curve.csv";
    std::string out_svg;
    std::string grid;
    double alpha = 0.05;
};

int cmd_curve(const CurveArgs& args) {
    const halcurve::LoadedModel model =
        halcurve::model_from_json(halcurve::read_file(args.model_path));
    const halcurve::Dataset data = halcurve::load_dataset_csv(args.data_path);

    const auto [a_lo, a_hi] =
        std::minmax_element(data.A.begin(), data.A.end());
    std::vector<double> grid;
    if (args.grid.empty()) {
        const int count = 50;
        for (int i = 0; i < count; ++i) {
            grid.push_back(*a_lo + (*a_hi - *a_lo) * i / (count - 1.0));
        }
    } else {
        grid = parse_grid(args.grid);
        for (double& g : grid) {
            if (g < *a_lo || g > *a_hi) {
                std::cerr << "warning: grid point " << format_double(g)
                          << " lies outside the observed treatment range ["
                          << format_double(*a_lo) << ", " << format_double(*a_hi)
                          << "]; clipped\n";
                g = std::clamp(g, *a_lo, *a_hi);
            }
        }
    }

    const halcurve::CurveEstimate curve =
        halcurve::loaded_curve(model, data, grid, args.alpha);
    ensure_parent_dir(args.out_csv);
    halcurve::write_file_atomic(args.out_csv, curve_csv(curve));
    std::cout << "wrote " << args.out_csv << "\n";
    if (!args.out_svg.empty()) {
        halcurve::ChartOptions opts;
        opts.title = "Estimated dose-response curve";
        opts.x_label = "treatment";
        opts.y_label = "mean outcome";
        ensure_parent_dir(args.out_svg);
        halcurve::write_file_atomic(args.out_svg,
                                    halcurve::render_curve_svg(curve, opts));
        std::cout << "wrote " << args.out_svg << "\n";
    }
    return 0;
}

// ----------------------------------------------------------- simulate ----

struct SimulateArgs {
    int dgd = 1;
    std::size_t n = 1000;
    int reps = 100;
    std::string estimators = "adapt-u";
    std::string grid;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    double alpha = 0.05;
    int jobs = 1;
    std::size_t truth_mc = 10'000'000;
};

std::string report_header() {
    return "dgd,n,estimator,a,abs_bias,oracle_se,mse,bias_se_delta,"
           "bias_se_oracle,cov_delta,cov_oracle,mean_delta_se,failures\n";
}

void append_report_rows(std::string& csv, const halcurve::ExperimentResult& res) {
    for (const halcurve::MetricRow& row : res.rows) {
        csv += std::to_string(res.config.dgd_id) + "," +
               std::to_string(res.config.n) + "," + res.config.estimator + "," +
               format_double(row.a) + "," + format_double(row.abs_bias) + "," +
               format_double(row.oracle_se) + "," + format_double(row.mse) +
               "," + format_double(row.bias_se_delta) + "," +
               format_double(row.bias_se_oracle) + "," +
               format_double(row.cov_delta) + "," +
               format_double(row.cov_oracle) + "," +
               format_double(row.mean_delta_se) + "," +
               std::to_string(res.failures) + "\n";
    }
}

// Mean estimate and mean interval across successful replications, drawn with
// the truth for reference.
std::string experiment_figure(const halcurve::ExperimentResult& res,
                              const halcurve::TrueCurve& truth) {
    const std::size_t n_grid = res.config.grid.size();
    std::vector<double> mean_psi(n_grid, 0.0), mean_lo(n_grid, 0.0),
        mean_hi(n_grid, 0.0);
    const double z = halcurve::normal_quantile(1.0 - res.config.alpha / 2.0);
    std::size_t used = 0;
    for (const halcurve::RepRecord& rep : res.reps) {
        if (rep.failed) continue;
        ++used;
        for (std::size_t g = 0; g < n_grid; ++g) {
            mean_psi[g] += rep.psi[g];
            mean_lo[g] += rep.psi[g] - z * rep.se[g];
            mean_hi[g] += rep.psi[g] + z * rep.se[g];
        }
    }
    for (std::size_t g = 0; g < n_grid; ++g) {
        mean_psi[g] /= static_cast<double>(used);
        mean_lo[g] /= static_cast<double>(used);
        mean_hi[g] /= static_cast<double>(used);
    }
    halcurve::SvgRibbon band;
    band.x = res.config.grid;
    band.lo = mean_lo;
    band.hi = mean_hi;
    halcurve::SvgSeries est;
    est.x = res.config.grid;
    est.y = mean_psi;
    est.label = res.config.estimator + " (mean)";
    halcurve::SvgSeries truth_line;
    truth_line.x = res.config.grid;
    truth_line.y = truth.psi0;
    truth_line.color = "#444444";
    truth_line.dashed = true;
    truth_line.label = "truth";
    halcurve::ChartOptions opts;
    opts.title = "Replicated estimates, generator " +
                 std::to_string(res.config.dgd_id) + ", n=" +
                 std::to_string(res.config.n);
    opts.x_label = "treatment";
    opts.y_label = "mean outcome";
    const halcurve::SvgRibbon ribbons[] = {band};
    const halcurve::SvgSeries series[] = {est, truth_line};
    return halcurve::render_chart(opts, ribbons, series);
}

int cmd_simulate(const SimulateArgs& args) {
    const std::vector<std::string> tokens = split_commas(args.estimators);
    if (tokens.empty()) {
        throw ValidationError("--estimators: no estimator tokens given");
    }
    std::vector<halcurve::EstimatorSpec> specs;
    for (const std::string& t : tokens) {
        specs.push_back(halcurve::parse_estimator(t));
    }
    halcurve::ExperimentConfig base;
    base.dgd_id = args.dgd;
    base.n = args.n;
    base.n_reps = args.reps;
    base.grid = args.grid.empty() ? halcurve::default_grid()
                                  : parse_grid(args.grid);
    base.alpha = args.alpha;
    base.master_seed = args.seed;
    base.jobs = args.jobs;

    const halcurve::TrueCurve truth =
        halcurve::true_curve(args.dgd, base.grid, args.truth_mc);

    std::string report = report_header();
    json summary;
    summary["dgd"] = args.dgd;
    summary["n"] = args.n;
    summary["reps"] = args.reps;
    summary["seed"] = args.seed;
    summary["alpha"] = args.alpha;
    summary["grid"] = base.grid;
    summary["truth_mc_draws"] = truth.n_mc;
    summary["estimators"] = json::array();

    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    bool any_flagged = false;
    for (const halcurve::EstimatorSpec& spec : specs) {
        halcurve::ExperimentConfig cfg = base;
        cfg.estimator = spec.token;
        const halcurve::ExperimentResult res =
            halcurve::run_experiment(cfg, truth);
        append_report_rows(report, res);
        json entry = {{"estimator", spec.token},
                      {"failures", res.failures},
                      {"flagged", res.flagged}};
        if (spec.kind == halcurve::EstimatorKind::hal) {
            entry["order1_fraction"] = res.order1_fraction;
        }
        summary["estimators"].push_back(entry);
        any_flagged = any_flagged || res.flagged;
        halcurve::write_file_atomic((dir / ("figure_" + spec.token + ".svg")).string(),
                                    experiment_figure(res, truth));
    }
    halcurve::write_file_atomic((dir / "report.csv").string(), report);
    halcurve::write_file_atomic((dir / "summary.json").string(),
                                summary.dump(2) + "\n");
    std::cout << "wrote " << (dir / "report.csv").string() << "\n";
    if (any_flagged) {
        std::cerr << "warning: more than 5% of replications failed for at "
                     "least one estimator\n";
        return 4;
    }
    return 0;
}

// ---------------------------------------------------------- grid-scan ----

struct GridScanArgs {
    int dgd = 3;
    std::size_t n = 1000;
    int reps = 50;
    std::string lambdas;
    std::string points;
    int order = 0;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    double alpha = 0.05;
    int jobs = 1;
    std::size_t truth_mc = 10'000'000;
};

int cmd_grid_scan(const GridScanArgs& args) {
    halcurve::GridScanConfig cfg;
    cfg.dgd_id = args.dgd;
    cfg.n = args.n;
    cfg.n_reps = args.reps;
    if (!args.lambdas.empty()) cfg.lambdas = parse_grid(args.lambdas);
    if (!args.points.empty()) cfg.eval_points = parse_grid(args.points);
    cfg.order = args.order;
    cfg.alpha = args.alpha;
    cfg.master_seed = args.seed;
    cfg.jobs = args.jobs;
    if (cfg.lambdas.empty()) {
        throw ValidationError(
            "--lambdas is required (a strictly decreasing positive list)");
    }

    const halcurve::TrueCurve truth =
        halcurve::true_curve(args.dgd, cfg.eval_points, args.truth_mc);
    const halcurve::GridScanResult res = halcurve::grid_scan(cfg, truth);

    std::string table =
        "lambda,a,abs_bias,oracle_se,mse,bias_se_delta,bias_se_oracle,"
        "cov_delta,cov_oracle,mean_delta_se\n";
    for (std::size_t l = 0; l < cfg.lambdas.size(); ++l) {
        for (const halcurve::MetricRow& row : res.rows[l]) {
            table += format_double(cfg.lambdas[l]) + "," +
                     format_double(row.a) + "," + format_double(row.abs_bias) +
                     "," + format_double(row.oracle_se) + "," +
                     format_double(row.mse) + "," +
                     format_double(row.bias_se_delta) + "," +
                     format_double(row.bias_se_oracle) + "," +
                     format_double(row.cov_delta) + "," +
                     format_double(row.cov_oracle) + "," +
                     format_double(row.mean_delta_se) + "\n";
        }
    }

    std::size_t u_not_above_cv = 0;
    for (std::size_t r = 0; r < res.lambda_cv.size(); ++r) {
        if (res.lambda_u[r] <= res.lambda_cv[r]) ++u_not_above_cv;
    }
    json summary;
    summary["dgd"] = args.dgd;
    summary["n"] = args.n;
    summary["reps"] = args.reps;
    summary["order"] = args.order;
    summary["seed"] = args.seed;
    summary["lambdas"] = cfg.lambdas;
    summary["eval_points"] = cfg.eval_points;
    summary["failures"] = res.failures;
    summary["lambda_cv"] = res.lambda_cv;
    summary["lambda_u"] = res.lambda_u;
    summary["lambda_cv_mean"] = halcurve::mean(res.lambda_cv);
    summary["lambda_u_mean"] = halcurve::mean(res.lambda_u);
    summary["fraction_lambda_u_leq_lambda_cv"] =
        res.lambda_cv.empty() ? 0.0
                              : static_cast<double>(u_not_above_cv) /
                                    static_cast<double>(res.lambda_cv.size());

    // One series per evaluation point: mean delta SE against log10(lambda).
    std::vector<halcurve::SvgSeries> series;
    const char* palette[] = {"#1f6fb2", "#d1495b", "#4f8f4f",
                             "#8a6fb5", "#c78a2d"};
    for (std::size_t g = 0; g < cfg.eval_points.size(); ++g) {
        halcurve::SvgSeries s;
        for (std::size_t l = 0; l < cfg.lambdas.size(); ++l) {
            s.x.push_back(std::log10(cfg.lambdas[l]));
            s.y.push_back(res.rows[l][g].mean_delta_se);
        }
        s.color = palette[g % 5];
        s.label = "a=" + format_double(cfg.eval_points[g]);
        series.push_back(std::move(s));
    }
    halcurve::ChartOptions opts;
    opts.title = "Mean delta-method SE across the penalty grid";
    opts.x_label = "log10(lambda)";
    opts.y_label = "mean delta SE";

    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    halcurve::write_file_atomic((dir / "grid_scan.csv").string(), table);
    halcurve::write_file_atomic((dir / "grid_scan_summary.json").string(),
                                summary.dump(2) + "\n");
    halcurve::write_file_atomic(
        (dir / "grid_scan.svg").string(),
        halcurve::render_chart(opts, {}, series));
    std::cout << "wrote " << (dir / "grid_scan.csv").string() << "\n";
    if (res.flagged) {
        std::cerr << "warning: more than 5% of replications failed\n";
        return 4;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Nonparametric dose-response curve estimation with an adaptive "
        "spline lasso"};
    app.require_subcommand(1);

    FitArgs fit_args;
    CLI::App* fit = app.add_subcommand(
        "fit", "Fit a model on a CSV dataset and save a JSON artifact");
    fit->add_option("data", fit_args.data_path, "Dataset CSV (columns W..., A, Y)")
        ->required();
    fit->add_option("--out", fit_args.out_path, "Model artifact path");
    fit->add_option("--config", fit_args.config_path,
                    "JSON config with estimator/family/seed defaults");
    CLI::Option* opt_estimator = fit->add_option(
        "--estimator", fit_args.estimator,
        "hal0-cv|hal0-u|hal1-cv|hal1-u|adapt-cv|adapt-u|polyK");
    CLI::Option* opt_family =
        fit->add_option("--family", fit_args.family, "auto|gaussian|binomial");
    CLI::Option* opt_seed =
        fit->add_option("--seed", fit_args.seed, "Cross-validation fold seed");

    CurveArgs curve_args;
    CLI::App* curve = app.add_subcommand(
        "curve", "Estimate the dose-response curve from a saved model");
    curve->add_option("model", curve_args.model_path, "Model artifact (JSON)")
        ->required();
    curve->add_option("data", curve_args.data_path, "Training dataset CSV")
        ->required();
    curve->add_option("--out-csv", curve_args.out_csv, "Curve table path");
    curve->add_option("--out-svg", curve_args.out_svg,
                      "Figure path (line plus CI ribbon)");
    curve->add_option("--grid", curve_args.grid,
                      "Treatment grid: lo:hi:count or comma list");
    curve->add_option("--alpha", curve_args.alpha,
                      "Two-sided miscoverage level");

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand(
        "simulate", "Replicated experiment against a known truth");
    sim->add_option("--dgd", sim_args.dgd, "Data-generating distribution id (1-4)");
    sim->add_option("--n", sim_args.n, "Sample size per replication");
    sim->add_option("--reps", sim_args.reps, "Number of replications");
    sim->add_option("--estimators", sim_args.estimators,
                    "Comma-separated estimator tokens");
    sim->add_option("--grid", sim_args.grid,
                    "Evaluation grid (default 0:5:26)");
    sim->add_option("--seed", sim_args.seed, "Master seed");
    sim->add_option("--out", sim_args.out_dir, "Output directory");
    sim->add_option("--alpha", sim_args.alpha, "Two-sided miscoverage level");
    sim->add_option("--jobs", sim_args.jobs, "Worker threads over replications");
    sim->add_option("--truth-mc", sim_args.truth_mc,
                    "Monte Carlo draws for the truth");

    GridScanArgs scan_args;
    CLI::App* scan = app.add_subcommand(
        "grid-scan", "Metrics along a fixed penalty grid");
    scan->add_option("--dgd", scan_args.dgd, "Data-generating distribution id");
    scan->add_option("--n", scan_args.n, "Sample size per replication");
    scan->add_option("--reps", scan_args.reps, "Number of replications");
    scan->add_option("--lambdas", scan_args.lambdas,
                     "Strictly decreasing positive penalties (comma list)")
        ->required();
    scan->add_option("--points", scan_args.points,
                     "Evaluation points (default 0.4,1,1.4,3,4.2)");
    scan->add_option("--order", scan_args.order, "Basis smoothness order (0|1)");
    scan->add_option("--seed", scan_args.seed, "Master seed");
    scan->add_option("--out", scan_args.out_dir, "Output directory");
    scan->add_option("--alpha", scan_args.alpha, "Two-sided miscoverage level");
    scan->add_option("--jobs", scan_args.jobs, "Worker threads over replications");
    scan->add_option("--truth-mc", scan_args.truth_mc,
                     "Monte Carlo draws for the truth");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fit->parsed()) {
            return cmd_fit(fit_args, opt_estimator->count() > 0,
                           opt_family->count() > 0, opt_seed->count() > 0);
        }
        if (curve->parsed()) return cmd_curve(curve_args);
        if (sim->parsed()) return cmd_simulate(sim_args);
        if (scan->parsed()) return cmd_grid_scan(scan_args);
    } catch (const halcurve::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const halcurve::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
