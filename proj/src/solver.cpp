#include "halcurve/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "halcurve/errors.hpp"
#include "halcurve/kernels.hpp"
#include "halcurve/stats.hpp"

namespace halcurve {

using namespace kern;

double Family::response(double eta) const {
    return kind == FamilyKind::binomial ? expit(eta) : eta;
}

std::vector<std::size_t> HalFit::active() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 1; j < beta.size(); ++j) {
        if (beta[j] != 0.0) out.push_back(j);
    }
    return out;
}

namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

void check_rows(const DesignMatrix& X, std::span<const double> y) {
    if (X.n_cols() == 0) throw ValidationError("design matrix has no columns");
    if (y.size() != X.n_rows) {
        throw ValidationError("outcome length " + std::to_string(y.size()) +
                              " does not match design rows " + std::to_string(X.n_rows));
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw ValidationError("outcome contains a non-finite value");
    }
}

void check_weights(std::span<const double> w, std::size_t n) {
    if (w.empty()) return;
    if (w.size() != n) {
        throw ValidationError("weight length " + std::to_string(w.size()) +
                              " does not match number of rows " + std::to_string(n));
    }
    double total = 0.0;
    for (double v : w) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ValidationError("row weights must be finite and nonnegative");
        }
        total += v;
    }
    if (total <= 0.0) throw ValidationError("row weights sum to zero");
}

// Weighted-lasso coordinate-descent core. Works on a linear target `z` with
// per-row weights `wtot`, maintaining the residual r = z - X*beta across all
// rows (including zero-weight ones, so held-out predictions fall out of r for
// free). For the binomial family the outer loop re-targets it each
// reweighting; for gaussian it is used once with wtot = base weights.
class CdCore {
  public:
    CdCore(const DesignMatrix& X, const FitOptions& opts)
        : beta(X.n_cols(), 0.0),
          r(X.n_rows, 0.0),
          X_(X),
          opts_(opts),
          p_(X.n_cols()),
          d_(X.n_cols(), 0.0),
          d_epoch_(X.n_cols(), -1) {}

    std::vector<double> beta;
    std::vector<double> r;  // residual of the current working target

    // Install weights for the current (re)weighting: wtot may be empty (all
    // ones). N is the objective normalizer (sum of *base* weights).
    void set_weights(std::span<const double> wtot, double N, double lambda) {
        wtot_ = wtot;
        N_ = N;
        thresh_ = lambda * N;
        ++epoch_;  // invalidates cached d_j
    }

    double col_d(std::size_t j) {
        if (d_epoch_[j] != epoch_) {
            const DesignColumn& c = X_.cols[j];
            if (c.is_bits) {
                d_[j] = wtot_.empty() ? static_cast<double>(bit_count(c.bits))
                                      : masked_sum(c.bits, wtot_);
            } else {
                d_[j] = wtot_.empty() ? dot(c.dense, c.dense)
                                      : dot3(wtot_, c.dense, c.dense);
            }
            d_epoch_[j] = epoch_;
        }
        return d_[j];
    }

    // sum_i wtot_i * phi_ij * r_i
    double col_corr(std::size_t j) const {
        const DesignColumn& c = X_.cols[j];
        if (c.is_bits) {
            return wtot_.empty() ? masked_sum(c.bits, r) : masked_dot(c.bits, wtot_, r);
        }
        return wtot_.empty() ? dot(c.dense, r) : dot3(wtot_, c.dense, r);
    }

    // How much a sweep moved, on two scales. `max_abs` is the largest
    // coefficient step. `max_score` is the largest curvature-weighted step
    // (d_j/N)|delta_j| — the size of the stationarity-condition gap the step
    // closed. Near-duplicate columns make directions of tiny curvature along
    // which coefficients wander freely without the objective or the
    // stationarity conditions moving; on such designs `max_abs` can stay large
    // for thousands of sweeps while `max_score` correctly reports that the fit
    // has stopped improving.
    struct SweepMove {
        double max_abs = 0.0;
        double max_score = 0.0;
    };

    // One coordinate update; returns |delta beta_j| and its score-scale size.
    SweepMove update(std::size_t j) {
        const double dj = col_d(j);
        if (dj <= 0.0) return {};  // column unsupported under these weights
        const double c = col_corr(j) + beta[j] * dj;
        const double nb = (j == 0) ? c / dj : soft_threshold(c, thresh_) / dj;
        const double delta = nb - beta[j];
        if (delta != 0.0) {
            const DesignColumn& col = X_.cols[j];
            if (col.is_bits) {
                masked_add(col.bits, -delta, r);
            } else {
                axpy(-delta, col.dense, r);
            }
            beta[j] = nb;
        }
        return {std::abs(delta), dj * std::abs(delta) / N_};
    }

    // One pass over the given coordinates; returns the largest moves.
    SweepMove sweep(std::span<const std::size_t> js) {
        SweepMove m;
        for (std::size_t j : js) {
            const SweepMove u = update(j);
            m.max_abs = std::max(m.max_abs, u.max_abs);
            m.max_score = std::max(m.max_score, u.max_score);
        }
        return m;
    }

    std::vector<std::size_t> active_with_intercept() const {
        std::vector<std::size_t> js;
        js.push_back(0);
        for (std::size_t j = 1; j < p_; ++j) {
            if (beta[j] != 0.0) js.push_back(j);
        }
        return js;
    }

    // A sweep counts as settled when it moved nothing by `tol` on the
    // coefficient scale, or nothing by a quarter of `tol` on the score scale
    // (which is what the coefficient rule certifies on fully supported
    // indicator columns, whose curvature is d_j/N <= 1/4 under IRLS weights).
    static bool settled(const SweepMove& m, double tol) {
        return m.max_abs < tol || m.max_score < tol * 0.25;
    }

    // Solve the current weighted-lasso problem restricted to `pool`: sweeps
    // of the nonzero coordinates (cheap) alternating with full passes over
    // the pool (which let zeros activate and verify the stopping rule), until
    // a pool pass settles at `tol` or the budget runs out. The nonzero block
    // is iterated to tol * active_factor; a factor below one makes
    // active-coordinate stationarity sharper than the sweep tolerance. The
    // nonzero block runs first: a pool pass that wakes a zero coordinate
    // loops back into it, so starting with the cheap block costs nothing.
    bool solve_pool(std::span<const std::size_t> pool, int& sweeps, int max_sweeps, double tol,
                    double active_factor) {
        note_objective();
        while (true) {
            const std::vector<std::size_t> act = active_with_intercept();
            while (sweeps < max_sweeps) {
                const SweepMove a = sweep(act);
                ++sweeps;
                note_objective();
                if (settled(a, tol * active_factor)) break;
            }
            if (sweeps >= max_sweeps) return false;
            const SweepMove delta = sweep(pool);
            ++sweeps;
            note_objective();
            if (settled(delta, tol)) return true;
        }
    }

    void set_objective_hook(std::vector<double>* trace, double lambda, double N) {
        trace_ = trace;
        trace_lambda_ = lambda;
        trace_N_ = N;
    }

  private:
    void note_objective() {
        if (!trace_) return;
        const double rss = wtot_.empty() ? dot(r, r) : dot3(wtot_, r, r);
        trace_->push_back(rss / (2.0 * trace_N_) + trace_lambda_ * (l1_norm(beta) - std::abs(beta[0])));
    }

    const DesignMatrix& X_;
    const FitOptions& opts_;
    std::size_t p_;
    std::span<const double> wtot_;
    double N_ = 1.0;
    double thresh_ = 0.0;
    std::vector<double> d_;
    std::vector<int> d_epoch_;
    int epoch_ = 0;
    std::vector<double>* trace_ = nullptr;
    double trace_lambda_ = 0.0;
    double trace_N_ = 1.0;
};

double penalty_l1(std::span<const double> beta) {
    double s = 0.0;
    for (std::size_t j = 1; j < beta.size(); ++j) s += std::abs(beta[j]);
    return s;
}

// Weighted, unnormalized binomial deviance 2 * sum_i w_i (-y eta + log(1+e^eta)).
double binomial_deviance(std::span<const double> y, std::span<const double> eta,
                         std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double li = -y[i] * eta[i] + log1pexp(eta[i]);
        s += w.empty() ? li : w[i] * li;
    }
    return 2.0 * s;
}

HalFit fit_gaussian(const DesignMatrix& X, std::span<const double> y, double lambda,
                    const HalFit* warm, const FitOptions& opts,
                    std::span<const double> weights, double N) {
    CdCore core(X, opts);
    if (warm != nullptr) core.beta = warm->beta;
    // r = y - X*beta over all rows, regardless of weights.
    if (warm != nullptr && !warm->eta.empty()) {
        for (std::size_t i = 0; i < y.size(); ++i) core.r[i] = y[i] - warm->eta[i];
    } else {
        std::vector<double> eta = design_eta(X, core.beta);
        for (std::size_t i = 0; i < y.size(); ++i) core.r[i] = y[i] - eta[i];
    }
    core.set_weights(weights, N, lambda);
    if (opts.objective_trace != nullptr) core.set_objective_hook(opts.objective_trace, lambda, N);

    std::vector<std::size_t> all(X.n_cols());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;

    HalFit fit;
    fit.lambda = lambda;
    fit.family = Family::gaussian();
    fit.sweeps = 0;
    fit.converged = core.solve_pool(all, fit.sweeps, opts.max_sweeps, opts.coef_tol,
                                    opts.final_polish ? 1e-1 : 1.0);
    fit.beta = std::move(core.beta);
    fit.eta.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) fit.eta[i] = y[i] - core.r[i];
    fit.l1 = l1_norm(fit.beta);
    return fit;
}

HalFit fit_binomial(const DesignMatrix& X, std::span<const double> y, double lambda,
                    const HalFit* warm, const FitOptions& opts,
                    std::span<const double> weights, double N) {
    const std::size_t n = X.n_rows;
    const std::size_t p = X.n_cols();
    for (double v : y) {
        if (v != 0.0 && v != 1.0) {
            throw ValidationError("binomial outcome must be 0/1");
        }
    }

    CdCore core(X, opts);
    std::vector<double> eta(n, 0.0);
    if (warm != nullptr) {
        core.beta = warm->beta;
        if (!warm->eta.empty()) {
            eta = warm->eta;
        } else {
            eta = design_eta(X, core.beta);
        }
    } else {
        // Seed at the exact intercept-only optimum, logit of the (weighted)
        // outcome mean. Newton would only approach this point; starting on it
        // keeps the top-of-path fit exactly at its stationary point, so the
        // KKT screen below cannot admit phantom violators there.
        double sw = 0.0, swy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = weights.empty() ? 1.0 : weights[i];
            sw += w;
            swy += w * y[i];
        }
        const double pbar = std::clamp(swy / sw, opts.prob_clip, 1.0 - opts.prob_clip);
        core.beta[0] = logit(pbar);
        std::fill(eta.begin(), eta.end(), core.beta[0]);
    }

    // Working set: intercept plus every currently-nonzero coordinate.
    // Inside it we run IRLS to a fixed point; then one full pass over the
    // score vector either certifies the KKT conditions or admits violators.
    std::vector<char> in_ws(p, 0);
    in_ws[0] = 1;
    std::vector<std::size_t> ws{0};
    for (std::size_t j = 1; j < p; ++j) {
        if (core.beta[j] != 0.0) {
            in_ws[j] = 1;
            ws.push_back(j);
        }
    }

    std::vector<double> z(n), wtot(n), score_resid(n);

    HalFit fit;
    fit.lambda = lambda;
    fit.family = Family::binomial();
    fit.sweeps = 0;
    fit.outer_iterations = 0;
    bool converged = false;

    double dev_prev = binomial_deviance(y, eta, weights);
    if (opts.objective_trace != nullptr) {
        opts.objective_trace->push_back(dev_prev / (2.0 * N) + lambda * penalty_l1(core.beta));
    }

    // Null deviance for the saturation stop (weighted intercept-only model).
    double sw = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sw += w;
        swy += w * y[i];
    }
    const double eta_null = logit(std::clamp(swy / sw, opts.prob_clip, 1.0 - opts.prob_clip));
    const double dev_null = 2.0 * N * (-(swy / sw) * eta_null + log1pexp(eta_null));

    // Admit every non-working-set coordinate whose score at the current eta
    // exceeds `threshold` in absolute value; returns whether any was admitted.
    // When `record` is given, |score| is stored for every column — including
    // working-set members, so a later fit seeded from this one readmits a
    // tracked-but-idle column only if its score genuinely warrants it.
    const auto screen = [&](double threshold, std::vector<double>* record) {
        for (std::size_t i = 0; i < n; ++i) {
            const double resp = y[i] - expit(eta[i]);
            score_resid[i] = weights.empty() ? resp : weights[i] * resp;
        }
        if (record != nullptr) record->assign(p, 0.0);
        bool added = false;
        for (std::size_t j = 1; j < p; ++j) {
            if (in_ws[j] && record == nullptr) continue;
            const DesignColumn& c = X.cols[j];
            const double s =
                (c.is_bits ? masked_sum(c.bits, score_resid) : dot(c.dense, score_resid)) / N;
            if (record != nullptr) (*record)[j] = std::abs(s);
            if (!in_ws[j] && std::abs(s) > threshold) {
                in_ws[j] = 1;
                ws.push_back(j);
                added = true;
            }
        }
        return added;
    };

    // Pre-screen: seed the working set with every coordinate the sequential
    // strong rule flags as a likely violator at this lambda, so the working
    // set converges in one build-out instead of one admission wave per outer
    // pass. A step from lambda_prev leaves scores below lambda_prev, so a
    // coordinate can violate only if its score exceeds 2*lambda - lambda_prev
    // (assuming scores move by at most the lambda step, the strong-rule
    // heuristic); the KKT screen below remains the actual certificate. With
    // no previous lambda the rule degenerates to admitting plain violators.
    // A valid handoff from the previous fit of a path walk supplies the
    // warm-point scores directly and the pre-screen pass costs nothing.
    {
        const double lambda_prev =
            (warm != nullptr && warm->lambda > lambda) ? warm->lambda : lambda;
        const double strong = std::max(2.0 * lambda - lambda_prev, lambda * 0.5);
        PathHandoff* handoff = opts.handoff;
        if (handoff != nullptr && handoff->valid && handoff->scores.size() == p) {
            for (std::size_t j = 1; j < p; ++j) {
                if (!in_ws[j] && handoff->scores[j] > strong) {
                    in_ws[j] = 1;
                    ws.push_back(j);
                }
            }
        } else {
            screen(strong, nullptr);
        }
        // Whatever happens below, the stored scores describe the previous
        // fit, not this one; only a clean final screen revalidates them.
        if (handoff != nullptr) handoff->valid = false;
    }

    // Once the screen is clean, one extra reweighting polishes the working set
    // a notch below the sweep tolerance so active-coordinate stationarity is
    // sharp, and the screen must come back clean again to declare convergence.
    bool polished = false;

    while (fit.outer_iterations < opts.max_outer && fit.sweeps < opts.max_sweeps) {
        // --- one reweighting: quadratic approximation at the current eta ---
        for (std::size_t i = 0; i < n; ++i) {
            const double pi = std::clamp(expit(eta[i]), opts.prob_clip, 1.0 - opts.prob_clip);
            const double vi = pi * (1.0 - pi);
            z[i] = eta[i] + (y[i] - pi) / vi;
            wtot[i] = weights.empty() ? vi : weights[i] * vi;
        }
        for (std::size_t i = 0; i < n; ++i) core.r[i] = z[i] - eta[i];
        core.set_weights(wtot, N, lambda);
        ++fit.outer_iterations;

        // --- inner weighted CD restricted to the working set ---
        // An imperfect inner solve is fine: the next reweighting restarts from
        // wherever it landed, and convergence is judged on the deviance and
        // the score screen. The cap keeps badly conditioned quadratics (many
        // near-collinear columns) from eating the whole sweep budget.
        const int inner_cap = std::min(fit.sweeps + 1000, opts.max_sweeps);
        core.solve_pool(ws, fit.sweeps, inner_cap, opts.coef_tol, polished ? 1e-1 : 1.0);
        for (std::size_t i = 0; i < n; ++i) eta[i] = z[i] - core.r[i];

        const double dev = binomial_deviance(y, eta, weights);
        if (opts.objective_trace != nullptr) {
            opts.objective_trace->push_back(dev / (2.0 * N) + lambda * penalty_l1(core.beta));
        }
        if (dev <= (1.0 - opts.saturation_dev_ratio) * dev_null) {
            fit.saturated = true;
            converged = true;
            break;
        }
        // Progress is measured against the null deviance so the stopping rule
        // is invariant to sample size and weight scale (the usual scaling for
        // iteratively reweighted fits).
        const bool irls_done = std::abs(dev - dev_prev) < opts.deviance_tol * dev_null;
        dev_prev = dev;
        if (!irls_done) {
            polished = false;
            continue;
        }

        // --- KKT screen over all columns at the true (unclipped) score ---
        std::vector<double>* record =
            opts.handoff != nullptr ? &opts.handoff->scores : nullptr;
        if (screen(lambda * (1.0 + 1e-9) + 1e-12, record)) {
            polished = false;
            continue;
        }
        if (polished || !opts.final_polish) {
            converged = true;
            if (opts.handoff != nullptr) opts.handoff->valid = true;
            break;
        }
        polished = true;  // one more reweighting at the tighter tolerance
    }

    fit.converged = converged;
    fit.beta = std::move(core.beta);
    fit.eta = std::move(eta);
    fit.l1 = l1_norm(fit.beta);
    return fit;
}

}  // namespace

std::vector<double> lambda_path(const DesignMatrix& X, std::span<const double> y,
                                Family family, int n_lambda, double lambda_min_ratio) {
    check_rows(X, y);
    if (n_lambda < 1) throw ValidationError("n_lambda must be at least 1");
    if (!(lambda_min_ratio > 0.0) || lambda_min_ratio > 1.0) {
        throw ValidationError("lambda_min_ratio must lie in (0, 1]");
    }
    (void)family;  // lambda_max uses the centered outcome for both families

    const double ybar = mean(y);
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - ybar;

    double lmax = 0.0;
    for (std::size_t j = 1; j < X.n_cols(); ++j) {
        const DesignColumn& c = X.cols[j];
        const double s = c.is_bits ? masked_sum(c.bits, r) : dot(c.dense, r);
        lmax = std::max(lmax, std::abs(s) / static_cast<double>(X.n_rows));
    }
    if (!(lmax > 0.0)) {
        throw ValidationError(
            "degenerate outcome: every basis function is uncorrelated with the centered "
            "outcome (is the outcome constant?)");
    }

    std::vector<double> path(static_cast<std::size_t>(n_lambda));
    if (n_lambda == 1) {
        path[0] = lmax;
        return path;
    }
    const double log_ratio = std::log(lambda_min_ratio);
    for (int k = 0; k < n_lambda; ++k) {
        path[static_cast<std::size_t>(k)] =
            lmax * std::exp(log_ratio * static_cast<double>(k) / static_cast<double>(n_lambda - 1));
    }
    path[0] = lmax;  // exact, not exp(0)*lmax rounding
    return path;
}

HalFit fit_lasso(const DesignMatrix& X, std::span<const double> y, Family family,
                 double lambda, const HalFit* warm, const FitOptions& opts,
                 std::span<const double> weights) {
    check_rows(X, y);
    check_weights(weights, X.n_rows);
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw ValidationError("lambda must be finite and nonnegative");
    }
    if (warm != nullptr) {
        if (warm->beta.size() != X.n_cols()) {
            throw ValidationError("warm start has " + std::to_string(warm->beta.size()) +
                                  " coefficients for a design with " +
                                  std::to_string(X.n_cols()) + " columns");
        }
        if (!warm->eta.empty() && warm->eta.size() != X.n_rows) {
            throw ValidationError("warm start eta length does not match design rows");
        }
    }
    double N = 0.0;
    if (weights.empty()) {
        N = static_cast<double>(X.n_rows);
    } else {
        for (double v : weights) N += v;
    }
    return family.is_binomial() ? fit_binomial(X, y, lambda, warm, opts, weights, N)
                                : fit_gaussian(X, y, lambda, warm, opts, weights, N);
}

std::vector<double> design_eta(const DesignMatrix& X, std::span<const double> beta) {
    if (beta.size() != X.n_cols()) {
        throw ValidationError("coefficient length does not match design columns");
    }
    std::vector<double> eta(X.n_rows, 0.0);
    for (std::size_t j = 0; j < X.n_cols(); ++j) {
        const double b = beta[j];
        if (b == 0.0) continue;
        const DesignColumn& c = X.cols[j];
        if (c.is_bits) {
            masked_add(c.bits, b, eta);
        } else {
            axpy(b, c.dense, eta);
        }
    }
    return eta;
}

double penalized_objective(const DesignMatrix& X, std::span<const double> y,
                           Family family, double lambda, std::span<const double> beta,
                           std::span<const double> weights) {
    check_rows(X, y);
    check_weights(weights, X.n_rows);
    std::vector<double> eta = design_eta(X, beta);
    double N = 0.0, loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        N += w;
        if (family.is_binomial()) {
            loss += w * (-y[i] * eta[i] + log1pexp(eta[i]));
        } else {
            const double r = y[i] - eta[i];
            loss += w * 0.5 * r * r;
        }
    }
    return loss / N + lambda * penalty_l1(beta);
}

std::vector<double> empirical_scores(const DesignMatrix& X,
                                     std::span<const double> residual,
                                     std::span<const std::size_t> cols) {
    if (residual.size() != X.n_rows) {
        throw ValidationError("residual length does not match design rows");
    }
    const double n = static_cast<double>(X.n_rows);
    auto score_of = [&](std::size_t j) {
        const DesignColumn& c = X.cols[j];
        return (c.is_bits ? masked_sum(c.bits, residual) : dot(c.dense, residual)) / n;
    };
    std::vector<double> out;
    if (cols.empty()) {
        out.resize(X.n_cols());
        for (std::size_t j = 0; j < X.n_cols(); ++j) out[j] = score_of(j);
    } else {
        out.reserve(cols.size());
        for (std::size_t j : cols) {
            if (j >= X.n_cols()) throw ValidationError("score column index out of range");
            out.push_back(score_of(j));
        }
    }
    return out;
}

}  // namespace halcurve
