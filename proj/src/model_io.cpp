#include "halcurve/model_io.hpp"

#include <json.hpp>

#include "halcurve/errors.hpp"
#include "halcurve/inference.hpp"
#include "halcurve/solver.hpp"

namespace halcurve {

namespace {

using nlohmann::json;

json scaling_to_json(const UnitScaler& scaler) {
    json arr = json::array();
    for (const ColumnScale& c : scaler.columns) {
        arr.push_back({{"name", c.name}, {"lo", c.lo}, {"hi", c.hi}});
    }
    return arr;
}

json trace_to_json(const SelectionResult& sel) {
    json candidates = json::array();
    for (std::size_t c = 0; c < sel.cv_risks.size(); ++c) {
        const CvCurve& curve = sel.cv_risks[c];
        candidates.push_back({{"order", curve.order},
                              {"max_knots_per_dim", curve.max_knots_per_dim},
                              {"lambdas", curve.lambdas},
                              {"risks", curve.risks},
                              {"eligible", curve.eligible},
                              {"cv_index", curve.cv_index},
                              {"lambda_cv", curve.lambda_cv},
                              {"cv_risk", curve.cv_risk},
                              {"winner", c == sel.winner}});
    }
    json trace = {{"candidates", candidates}};
    if (sel.chosen.selector == Selector::undersmooth) {
        const UndersmoothResult& u = sel.undersmooth;
        trace["undersmooth"] = {{"lambda_u", u.lambda_u},
                                {"u_index", u.u_index},
                                {"lambdas_walked", u.lambdas_walked},
                                {"criterion_trace", u.criterion_trace},
                                {"thresholds", u.thresholds},
                                {"criterion_met", u.criterion_met},
                                {"empty_active_warning", u.empty_active_warning}};
    }
    return trace;
}

json common_header(const EstimatorSpec& spec,
                   std::span<const std::string> column_names, Family family) {
    return {{"schema_version", kModelSchemaVersion},
            {"estimator", spec.token},
            {"family", family.is_binomial() ? "binomial" : "gaussian"},
            {"column_names",
             std::vector<std::string>(column_names.begin(), column_names.end())}};
}

const json& require(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ValidationError(std::string("model file: missing field \"") +
                              key + "\"");
    }
    return *it;
}

Family parse_family(const std::string& name) {
    if (name == "gaussian") return Family::gaussian();
    if (name == "binomial") return Family::binomial();
    throw ValidationError("model file: unknown family \"" + name + "\"");
}

}  // namespace

std::string model_to_json(const FittedHal& model, const EstimatorSpec& spec,
                          std::span<const std::string> column_names) {
    json root = common_header(spec, column_names, model.fit.family);
    root["kind"] = "hal";

    json bases = json::array();
    for (std::size_t j : model.fit.active()) {
        const BasisFunction& b = model.design.bases[j - 1];
        bases.push_back({{"subset", b.subset},
                         {"knot", b.knot},
                         {"beta", model.fit.beta[j]}});
    }
    root["hal"] = {
        {"order",
         model.sel.chosen.order == Smoothness::order1 ? 1 : 0},
        {"selector",
         model.sel.chosen.selector == Selector::undersmooth ? "undersmooth"
                                                            : "cv"},
        {"lambda_cv", model.sel.lambda_cv},
        {"lambda_final", model.sel.lambda_final},
        {"intercept", model.fit.beta.empty() ? 0.0 : model.fit.beta[0]},
        {"l1_norm", model.fit.l1},
        {"scaling", scaling_to_json(model.scaler)},
        {"bases", bases},
        {"selector_trace", trace_to_json(model.sel)},
    };
    return root.dump(2) + "\n";
}

std::string model_to_json(const PolyModel& model, const EstimatorSpec& spec,
                          std::span<const std::string> column_names) {
    json root = common_header(spec, column_names, model.family);
    root["kind"] = "poly";
    root["poly"] = {{"degree", model.degree},
                    {"n_covariates", model.n_covariates},
                    {"beta", model.beta}};
    return root.dump(2) + "\n";
}

LoadedModel model_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model file: invalid JSON: ") +
                              e.what());
    }
    try {
        LoadedModel m;
        const int version = require(root, "schema_version").get<int>();
        if (version != kModelSchemaVersion) {
            throw ValidationError(
                "model file: unsupported schema_version " +
                std::to_string(version) + " (expected " +
                std::to_string(kModelSchemaVersion) + ")");
        }
        m.estimator_token = require(root, "estimator").get<std::string>();
        m.family = parse_family(require(root, "family").get<std::string>());
        m.column_names =
            require(root, "column_names").get<std::vector<std::string>>();
        if (m.column_names.empty()) {
            throw ValidationError("model file: column_names is empty");
        }
        const std::string kind = require(root, "kind").get<std::string>();
        if (kind == "poly") {
            m.kind = EstimatorKind::poly;
            const json& p = require(root, "poly");
            m.poly.degree = require(p, "degree").get<int>();
            m.poly.n_covariates = require(p, "n_covariates").get<std::size_t>();
            m.poly.beta = require(p, "beta").get<std::vector<double>>();
            m.poly.family = m.family;
            if (m.poly.beta.size() !=
                poly_term_count(m.poly.degree, m.poly.n_covariates)) {
                throw ValidationError(
                    "model file: polynomial coefficient count does not match "
                    "degree and covariate count");
            }
            if (m.poly.n_covariates + 1 != m.column_names.size()) {
                throw ValidationError(
                    "model file: column_names does not match the polynomial "
                    "covariate count");
            }
            return m;
        }
        if (kind != "hal") {
            throw ValidationError("model file: unknown kind \"" + kind + "\"");
        }
        m.kind = EstimatorKind::hal;
        const json& h = require(root, "hal");
        m.order = require(h, "order").get<int>();
        if (m.order != 0 && m.order != 1) {
            throw ValidationError("model file: order must be 0 or 1");
        }
        m.lambda_cv = require(h, "lambda_cv").get<double>();
        m.lambda_final = require(h, "lambda_final").get<double>();
        for (const json& s : require(h, "scaling")) {
            ColumnScale c;
            c.name = require(s, "name").get<std::string>();
            c.lo = require(s, "lo").get<double>();
            c.hi = require(s, "hi").get<double>();
            if (!(c.hi > c.lo)) {
                throw ValidationError(
                    "model file: scaling range for column \"" + c.name +
                    "\" is degenerate");
            }
            m.scaler.columns.push_back(c);
        }
        if (m.scaler.columns.size() != m.column_names.size()) {
            throw ValidationError(
                "model file: scaling entries do not match column_names");
        }
        m.beta.push_back(require(h, "intercept").get<double>());
        for (const json& b : require(h, "bases")) {
            BasisFunction f;
            f.order = m.order;
            f.subset = require(b, "subset").get<std::vector<int>>();
            f.knot = require(b, "knot").get<std::vector<double>>();
            if (f.subset.empty() || f.subset.size() != f.knot.size()) {
                throw ValidationError(
                    "model file: a basis entry has an empty subset or "
                    "mismatched knot length");
            }
            for (std::size_t k = 0; k < f.subset.size(); ++k) {
                if (f.subset[k] < 0 ||
                    static_cast<std::size_t>(f.subset[k]) >=
                        m.column_names.size() ||
                    (k > 0 && f.subset[k] <= f.subset[k - 1])) {
                    throw ValidationError(
                        "model file: a basis subset is out of range or not "
                        "strictly increasing");
                }
            }
            m.bases.push_back(std::move(f));
            m.beta.push_back(require(b, "beta").get<double>());
        }
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model file: malformed field: ") +
                              e.what());
    }
}

CurveEstimate loaded_curve(const LoadedModel& model, const Dataset& data,
                           std::span<const double> grid, double alpha) {
    if (model.kind == EstimatorKind::poly) {
        return poly_curve(model.poly, data, grid, alpha);
    }
    if (data.n_covariates() + 1 != model.column_names.size()) {
        throw ValidationError(
            "loaded_curve: the dataset's column count does not match the "
            "model");
    }
    const auto raw = design_columns(data);
    const auto scaled = model.scaler.apply(raw);
    DesignMatrix X = build_design(scaled, model.bases);
    if (X.n_cols() != model.bases.size() + 1) {
        throw ValidationError(
            "loaded_curve: the dataset does not reproduce the model's basis "
            "columns (is this the training sample?)");
    }
    HalFit fit;
    fit.beta = model.beta;
    fit.lambda = model.lambda_final;
    fit.family = model.family;
    fit.l1 = l1_norm(fit.beta);

    const ColumnScale& treatment = model.scaler.columns.back();
    std::vector<double> scaled_grid(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        scaled_grid[g] = treatment.to_unit(grid[g]);
    }
    const ModelView view{X, fit, data.Y, scaled, scaled.size() - 1};
    DeltaOptions opts;
    opts.alpha = alpha;
    return delta_ci(view, grid, scaled_grid, opts).curve;
}

}  // namespace halcurve
