#include "halcurve/estimators.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "halcurve/errors.hpp"

namespace halcurve {

EstimatorSpec parse_estimator(std::string_view token) {
    EstimatorSpec spec;
    spec.token = std::string(token);
    const auto hal_with = [&](Smoothness order, std::string_view rest) {
        spec.kind = EstimatorKind::hal;
        spec.order = order;
        if (rest == "-cv") {
            spec.selector = Selector::cv;
            return true;
        }
        if (rest == "-u") {
            spec.selector = Selector::undersmooth;
            return true;
        }
        return false;
    };
    if (token.starts_with("hal0") && hal_with(Smoothness::order0, token.substr(4))) {
        return spec;
    }
    if (token.starts_with("hal1") && hal_with(Smoothness::order1, token.substr(4))) {
        return spec;
    }
    if (token.starts_with("adapt") &&
        hal_with(Smoothness::adaptive, token.substr(5))) {
        return spec;
    }
    if (token == "poly") {
        spec.kind = EstimatorKind::poly;
        spec.degree = 3;
        return spec;
    }
    if (token.size() == 5 && token.starts_with("poly") && token[4] >= '1' &&
        token[4] <= '9') {
        spec.kind = EstimatorKind::poly;
        spec.degree = token[4] - '0';
        return spec;
    }
    throw ValidationError("unknown estimator token '" + std::string(token) +
                          "' (expected hal0/hal1/adapt with -cv or -u, or "
                          "poly/poly1..poly9)");
}

Family detect_family(std::span<const double> y) {
    bool saw0 = false;
    bool saw1 = false;
    for (double v : y) {
        if (v == 0.0) {
            saw0 = true;
        } else if (v == 1.0) {
            saw1 = true;
        } else {
            return Family::gaussian();
        }
    }
    return (saw0 && saw1) ? Family::binomial() : Family::gaussian();
}

FittedHal fit_hal(const EstimatorSpec& spec, const Dataset& data,
                  std::uint64_t seed, std::optional<Family> family) {
    if (spec.kind != EstimatorKind::hal) {
        throw ValidationError("fit_hal: estimator '" + spec.token +
                              "' is not an adaptive-basis estimator");
    }
    if (family && family->is_binomial()) {
        for (double v : data.Y) {
            if (v != 0.0 && v != 1.0) {
                throw ValidationError(
                    "fit_hal: family binomial requires a 0/1 outcome column");
            }
        }
    }
    FittedHal out;
    const auto cols = design_columns(data);
    out.scaler = UnitScaler::fit(cols, design_column_names(data));
    out.scaled = out.scaler.apply(cols);

    HalConfig cfg;
    cfg.order = spec.order;
    cfg.selector = spec.selector;
    cfg.family = family ? *family : detect_family(data.Y);
    cfg.seed = seed;
    out.sel = select_model(out.scaled, data.Y, cfg);

    // Take the winner's design out of the selection result (it is the only
    // candidate that still holds one) and refit at full precision.
    out.design = std::move(out.sel.cv_risks[out.sel.winner].design);
    out.sel.cv_risks[out.sel.winner].design = DesignMatrix{};

    const HalFit* warm = nullptr;
    HalFit descent;
    if (spec.selector == Selector::undersmooth &&
        !out.sel.undersmooth.fit_at_u.beta.empty()) {
        warm = &out.sel.undersmooth.fit_at_u;
    } else {
        // No selection-grade fit to reuse: walk the path down to the chosen
        // penalty at selection precision so the final fit starts warm.
        const auto& lams = out.sel.cv_risks[out.sel.winner].lambdas;
        const std::size_t stop = out.sel.cv_risks[out.sel.winner].cv_index;
        FitOptions wopts = selection_walk_policy().fit;
        PathHandoff hand;
        wopts.handoff = &hand;
        for (std::size_t k = 0; k <= stop && k < lams.size(); ++k) {
            descent = fit_lasso(out.design, data.Y, cfg.family, lams[k],
                                k == 0 ? nullptr : &descent, wopts);
        }
        if (!descent.beta.empty()) warm = &descent;
    }
    out.fit = fit_lasso(out.design, data.Y, cfg.family, out.sel.lambda_final,
                        warm, FitOptions{});
    return out;
}

CurveEstimate hal_curve(const FittedHal& model, std::span<const double> y,
                        std::span<const double> grid, double alpha) {
    const ModelView view{model.design, model.fit, y, model.scaled,
                         model.scaled.size() - 1};
    std::vector<double> scaled_grid;
    scaled_grid.reserve(grid.size());
    const ColumnScale& a_scale = model.scaler.columns.back();
    for (double a : grid) scaled_grid.push_back(a_scale.to_unit(a));
    DeltaOptions opts;
    opts.alpha = alpha;
    return delta_ci(view, grid, scaled_grid, opts).curve;
}

EstimateResult run_estimator(const EstimatorSpec& spec, const Dataset& data,
                             std::span<const double> grid, double alpha,
                             std::uint64_t seed) {
    EstimateResult res;
    if (spec.kind == EstimatorKind::poly) {
        const PolyModel model =
            fit_poly(data, spec.degree, detect_family(data.Y));
        res.curve = poly_curve(model, data, grid, alpha);
        return res;
    }
    const FittedHal model = fit_hal(spec, data, seed);
    res.curve = hal_curve(model, data.Y, grid, alpha);
    res.chosen_order = model.sel.chosen.order == Smoothness::order1 ? 1 : 0;
    res.lambda_cv = model.sel.lambda_cv;
    res.lambda_final = model.sel.lambda_final;
    res.active_count = model.fit.active().size();
    return res;
}

}  // namespace halcurve
