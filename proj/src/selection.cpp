#include "halcurve/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "halcurve/errors.hpp"
#include "halcurve/rng.hpp"
#include "halcurve/stats.hpp"

namespace halcurve {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::vector<std::size_t>> deal_round_robin(
    const std::vector<std::size_t>& order, int k) {
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < order.size(); ++r) {
        folds[r % static_cast<std::size_t>(k)].push_back(order[r]);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

std::vector<std::vector<double>> subset_columns(
    const std::vector<std::vector<double>>& X_cols,
    const std::vector<std::size_t>& rows) {
    std::vector<std::vector<double>> out(X_cols.size());
    for (std::size_t c = 0; c < X_cols.size(); ++c) {
        out[c].reserve(rows.size());
        for (std::size_t i : rows) out[c].push_back(X_cols[c][i]);
    }
    return out;
}

// Linear predictor for one out-of-sample point: intercept plus the active
// columns' bases evaluated directly (designs are never materialized for
// held-out rows; active sets are small).
double predict_eta(const DesignMatrix& X, const HalFit& fit,
                   std::span<const std::size_t> active,
                   std::span<const double> x) {
    double eta = fit.beta[0];
    for (std::size_t j : active) eta += fit.beta[j] * eval_basis(X.bases[j - 1], x);
    return eta;
}

double heldout_loss(Family family, double y, double eta) {
    if (family.kind == FamilyKind::gaussian) {
        const double r = y - eta;
        return r * r;
    }
    const double p = std::clamp(expit(eta), 1e-12, 1.0 - 1e-12);
    return -(y * std::log(p) + (1.0 - y) * std::log1p(-p));
}

// Shared guard: should a path walk stop because fits stopped converging?
// `streak` counts consecutive non-converged fits including this one.
bool interpolation_stop(const HalFit& fit, std::size_t n, int streak,
                        const WalkPolicy& policy) {
    if (fit.converged) return false;
    if (streak >= policy.nonconv_patience) return true;
    const std::size_t guard = n / policy.active_guard_divisor;
    return fit.active().size() > guard;
}

}  // namespace

WalkPolicy selection_walk_policy() {
    WalkPolicy p;
    // Selection-grade fits: held-out risk curves and score criteria cannot
    // resolve differences anywhere near the default tolerances, so path and
    // fold fits run looser and skip the final polish. The single model that
    // is ultimately reported gets refit at full precision by the caller.
    p.fit.coef_tol = 1e-5;
    p.fit.deviance_tol = 1e-7;
    p.fit.final_polish = false;
    p.fit.max_sweeps = 2500;
    return p;
}

std::size_t risk_argmin(std::span<const double> risks, std::size_t limit) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < limit && k < risks.size(); ++k) {
        // Strict improvement only: ties keep the earlier (larger) lambda.
        if (risks[k] < risks[best]) best = k;
    }
    return best;
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int k,
                                                 std::uint64_t seed) {
    if (k < 2) throw ValidationError("make_folds: need at least 2 folds");
    if (static_cast<std::size_t>(k) > n) {
        throw ValidationError("make_folds: more folds than observations");
    }
    return deal_round_robin(permutation(n, seed), k);
}

std::vector<std::vector<std::size_t>> make_folds_stratified(
    std::span<const double> y, int k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("make_folds_stratified: need at least 2 folds");
    const std::size_t n = y.size();
    if (static_cast<std::size_t>(k) > n) {
        throw ValidationError("make_folds_stratified: more folds than observations");
    }
    const std::vector<std::size_t> order = permutation(n, seed);
    std::vector<std::size_t> zeros, ones;
    for (std::size_t i : order) (y[i] == 0.0 ? zeros : ones).push_back(i);
    if (zeros.size() < static_cast<std::size_t>(k) ||
        ones.size() < static_cast<std::size_t>(k)) {
        throw ValidationError(
            "stratification failure: a class has fewer members (" +
            std::to_string(std::min(zeros.size(), ones.size())) +
            ") than folds (" + std::to_string(k) + ")");
    }
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < zeros.size(); ++r) {
        folds[r % static_cast<std::size_t>(k)].push_back(zeros[r]);
    }
    for (std::size_t r = 0; r < ones.size(); ++r) {
        folds[r % static_cast<std::size_t>(k)].push_back(ones[r]);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

CvCurve cv_select(const std::vector<std::vector<double>>& X_cols,
                  std::span<const double> y, const HalConfig& cfg, int order,
                  int max_knots_per_dim,
                  const std::vector<std::vector<std::size_t>>& folds,
                  const WalkPolicy& policy) {
    if (cfg.n_lambda < 2) throw ValidationError("cv_select: n_lambda must be >= 2");
    if (folds.size() < 2) throw ValidationError("cv_select: need at least 2 folds");
    const std::size_t n = y.size();

    CvCurve out;
    out.order = order;
    out.max_knots_per_dim = max_knots_per_dim;

    KnotOptions kopts;
    kopts.max_knots_per_dim = max_knots_per_dim;
    out.design = build_design(X_cols, generate_knots(X_cols, order, kopts));
    out.lambdas =
        lambda_path(out.design, y, cfg.family, cfg.n_lambda, cfg.lambda_ratio);
    const std::size_t L = out.lambdas.size();

    std::vector<double> pooled(L, 0.0);        // sum of held-out losses
    std::size_t eligible = L;                  // prefix every fold evaluated

    std::vector<double> xrow(X_cols.size());
    for (const auto& heldout : folds) {
        // Training rows: complement of the held-out fold.
        std::vector<char> held(n, 0);
        for (std::size_t i : heldout) held[i] = 1;
        std::vector<std::size_t> train_rows;
        train_rows.reserve(n - heldout.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (!held[i]) train_rows.push_back(i);
        }

        const auto X_tr_cols = subset_columns(X_cols, train_rows);
        std::vector<double> y_tr(train_rows.size());
        for (std::size_t r = 0; r < train_rows.size(); ++r) y_tr[r] = y[train_rows[r]];

        const DesignMatrix X_tr =
            build_design(X_tr_cols, generate_knots(X_tr_cols, order, kopts));

        FitOptions fo = policy.fit;
        PathHandoff handoff;
        fo.handoff = &handoff;

        HalFit prev;
        bool have_prev = false;
        double best_risk = kInf;
        int stall = 0;
        int nonconv_streak = 0;
        std::size_t walked = 0;
        for (std::size_t k = 0; k < L; ++k) {
            HalFit fit = fit_lasso(X_tr, y_tr, cfg.family, out.lambdas[k],
                                   have_prev ? &prev : nullptr, fo);
            nonconv_streak = fit.converged ? 0 : nonconv_streak + 1;
            if (!fit.converged &&
                interpolation_stop(fit, train_rows.size(), nonconv_streak, policy)) {
                break;  // this lambda not evaluated by this fold
            }

            const auto active = fit.active();
            double fold_sum = 0.0;
            for (std::size_t i : heldout) {
                for (std::size_t c = 0; c < X_cols.size(); ++c) xrow[c] = X_cols[c][i];
                const double eta = predict_eta(X_tr, fit, active, xrow);
                fold_sum += heldout_loss(cfg.family, y[i], eta);
            }
            pooled[k] += fold_sum;
            walked = k + 1;

            const double fold_risk = fold_sum / static_cast<double>(heldout.size());
            if (fold_risk < best_risk) {
                best_risk = fold_risk;
                stall = 0;
            } else if (++stall >= policy.risk_patience) {
                break;  // held-out risk stopped improving: overfitting regime
            }
            if (fit.saturated) break;  // deeper fits only interpolate harder

            prev = std::move(fit);
            have_prev = true;
        }
        eligible = std::min(eligible, walked);
    }

    if (eligible == 0) {
        throw NumericalError("cv_select: no lambda was evaluated by every fold");
    }

    out.risks.assign(L, kInf);
    for (std::size_t k = 0; k < eligible; ++k) {
        out.risks[k] = pooled[k] / static_cast<double>(n);
    }
    out.eligible = eligible;
    out.cv_index = risk_argmin(out.risks, eligible);
    out.lambda_cv = out.lambdas[out.cv_index];
    out.cv_risk = out.risks[out.cv_index];
    return out;
}

UndersmoothResult undersmooth_select(const DesignMatrix& X,
                                     std::span<const double> y, Family family,
                                     std::span<const double> lambdas,
                                     std::size_t cv_index,
                                     const WalkPolicy& policy) {
    if (cv_index >= lambdas.size()) {
        throw ValidationError("undersmooth_select: cv_index is off the path");
    }
    const std::size_t n = X.n_rows;
    const double denom = std::sqrt(static_cast<double>(n)) *
                         std::log(static_cast<double>(n));

    UndersmoothResult res;
    FitOptions fo = policy.fit;
    PathHandoff handoff;
    fo.handoff = &handoff;

    HalFit prev;
    bool have_prev = false;
    bool any_active = false;
    HalFit last_converged;
    bool have_converged = false;
    int nonconv_streak = 0;
    std::vector<double> residual(n);

    // Warm descent to the starting point: a cold fit at a mid-path lambda is
    // exactly the hard regime the path walk exists to avoid, so the criteria
    // start at lambdas[cv_index] but the coefficients get there along the path.
    for (std::size_t k = 0; k < cv_index; ++k) {
        HalFit fit = fit_lasso(X, y, family, lambdas[k],
                               have_prev ? &prev : nullptr, fo);
        prev = std::move(fit);
        have_prev = true;
    }

    for (std::size_t k = cv_index; k < lambdas.size(); ++k) {
        HalFit fit = fit_lasso(X, y, family, lambdas[k],
                               have_prev ? &prev : nullptr, fo);
        res.lambdas_walked.push_back(lambdas[k]);

        nonconv_streak = fit.converged ? 0 : nonconv_streak + 1;
        if (!fit.converged) {
            res.criterion_trace.push_back(kNaN);
            res.thresholds.push_back(kNaN);
            if (interpolation_stop(fit, n, nonconv_streak, policy)) break;
            prev = std::move(fit);
            have_prev = true;
            continue;
        }
        if (fit.saturated) {
            // A saturated fit drives residuals (and sigma_hat) to zero; the
            // criterion is vacuous there and everything deeper saturates too.
            res.criterion_trace.push_back(kNaN);
            res.thresholds.push_back(kNaN);
            break;
        }

        for (std::size_t i = 0; i < n; ++i) {
            residual[i] = family.kind == FamilyKind::gaussian
                              ? y[i] - fit.eta[i]
                              : y[i] - expit(fit.eta[i]);
        }
        const double sigma = sample_sd(residual);
        const double threshold = sigma / denom;
        const auto active = fit.active();
        double max_score = 0.0;
        if (!active.empty()) {
            any_active = true;
            const auto scores = empirical_scores(X, residual, active);
            for (double s : scores) max_score = std::max(max_score, std::abs(s));
        }
        res.criterion_trace.push_back(max_score);
        res.thresholds.push_back(threshold);

        last_converged = fit;
        have_converged = true;

        if (!active.empty() && max_score <= threshold) {
            res.lambda_u = lambdas[k];
            res.u_index = k;
            res.criterion_met = true;
            res.fit_at_u = std::move(fit);
            return res;
        }

        prev = std::move(fit);
        have_prev = true;
    }

    if (!have_converged) {
        // Nothing on the walk converged; nothing deeper can be certified.
        res.lambda_u = lambdas[cv_index];
        res.u_index = cv_index;
    } else if (!any_active) {
        // No walked fit ever used a basis function: stay at lambda_cv.
        res.lambda_u = lambdas[cv_index];
        res.u_index = cv_index;
        res.empty_active_warning = true;
    } else {
        // Criterion never met: fall back to the smallest path lambda.
        res.lambda_u = lambdas.back();
        res.u_index = lambdas.size() - 1;
    }
    if (have_converged) res.fit_at_u = std::move(last_converged);
    return res;
}

SelectionResult select_model(const std::vector<std::vector<double>>& X_cols,
                             std::span<const double> y, const HalConfig& cfg,
                             const WalkPolicy& policy) {
    if (cfg.folds < 2) throw ValidationError("select_model: folds must be >= 2");
    if (cfg.n_lambda < 2) throw ValidationError("select_model: n_lambda must be >= 2");
    const std::size_t n = y.size();
    if (n < 2 * static_cast<std::size_t>(cfg.folds)) {
        throw ValidationError("select_model: need at least 2 observations per fold");
    }

    const auto folds =
        cfg.family.kind == FamilyKind::binomial
            ? make_folds_stratified(y, cfg.folds, cfg.seed)
            : make_folds(n, cfg.folds, cfg.seed);

    struct Candidate {
        int order;
        int max_knots;
    };
    std::vector<Candidate> candidates;
    switch (cfg.order) {
        case Smoothness::order0:
            candidates.push_back({0, cfg.max_knots_per_dim});
            break;
        case Smoothness::order1:
            candidates.push_back({1, cfg.max_knots_per_dim});
            break;
        case Smoothness::adaptive:
            // The discrete selector's default candidate set; per-order default
            // knot budgets (all observed values / 20 quantiles).
            candidates.push_back({0, 0});
            candidates.push_back({1, 0});
            break;
    }

    SelectionResult res;
    for (const Candidate& c : candidates) {
        res.cv_risks.push_back(
            cv_select(X_cols, y, cfg, c.order, c.max_knots, folds, policy));
    }

    res.winner = 0;
    for (std::size_t i = 1; i < res.cv_risks.size(); ++i) {
        const CvCurve& a = res.cv_risks[i];
        const CvCurve& b = res.cv_risks[res.winner];
        const bool better =
            a.cv_risk < b.cv_risk ||
            (a.cv_risk == b.cv_risk &&
             (a.order < b.order ||
              (a.order == b.order && a.max_knots_per_dim < b.max_knots_per_dim)));
        if (better) res.winner = i;
    }
    for (std::size_t i = 0; i < res.cv_risks.size(); ++i) {
        if (i != res.winner) res.cv_risks[i].design = DesignMatrix{};  // free losers
    }

    CvCurve& won = res.cv_risks[res.winner];
    res.chosen = cfg;
    res.chosen.order = won.order == 0 ? Smoothness::order0 : Smoothness::order1;
    res.chosen.max_knots_per_dim =
        won.max_knots_per_dim > 0
            ? won.max_knots_per_dim
            : (won.order == 0 ? static_cast<int>(n) : 20);
    res.lambda_cv = won.lambda_cv;

    if (cfg.selector == Selector::undersmooth) {
        res.undersmooth = undersmooth_select(won.design, y, cfg.family,
                                             won.lambdas, won.cv_index, policy);
        res.lambda_final = res.undersmooth.lambda_u;
    } else {
        res.lambda_final = res.lambda_cv;
    }
    return res;
}

}  // namespace halcurve
