#include "halcurve/inference.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "glm_core.hpp"
#include "halcurve/errors.hpp"
#include "halcurve/stats.hpp"

namespace halcurve {

namespace {

struct WorkingModel {
    std::vector<std::size_t> cols;  // {0} followed by the active columns
    Eigen::MatrixXd Q;              // n x q working design
    detail::GlmFit fit;             // unpenalized refit on those columns
};

// Unpenalized refit of the selected working model. The penalized fit's score
// equations hold only up to lambda; influence curves need them to hold
// exactly, which is what the refit provides.
WorkingModel relax(const ModelView& model) {
    const std::size_t n = model.X.n_rows;
    WorkingModel wm;
    wm.cols.push_back(0);
    for (std::size_t j : model.fit.active()) wm.cols.push_back(j);
    const std::size_t q = wm.cols.size();

    wm.Q.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
    for (std::size_t c = 0; c < q; ++c) {
        const auto col = model.X.column_dense(wm.cols[c]);
        for (std::size_t i = 0; i < n; ++i) {
            wm.Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = col[i];
        }
    }
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] = model.y[i];

    constexpr const char* what = "influence computation";
    if (model.fit.family.kind == FamilyKind::gaussian) {
        wm.fit = detail::least_squares(wm.Q, y, /*allow_ridge=*/true, what);
        return wm;
    }
    // Warm-starting at the penalized coefficients keeps the Newton refit a
    // short polish; a separated working model merely stalls and the ridge
    // fallback carries the conditioning.
    Eigen::VectorXd beta0(static_cast<Eigen::Index>(q));
    for (std::size_t c = 0; c < q; ++c) {
        beta0[static_cast<Eigen::Index>(c)] = model.fit.beta[wm.cols[c]];
    }
    wm.fit = detail::logistic_newton(wm.Q, y, std::move(beta0),
                                     /*grad_tol=*/1e-10, /*max_iter=*/100,
                                     /*allow_ridge=*/true, what);
    return wm;
}

void validate_grid(const ModelView& model, std::span<const double> scaled_grid) {
    if (scaled_grid.empty()) {
        throw ValidationError("curve estimation: the treatment grid is empty");
    }
    if (model.treatment_col >= model.cols.size()) {
        throw ValidationError("curve estimation: treatment column out of range");
    }
    if (model.fit.beta.size() != model.X.n_cols()) {
        throw ValidationError(
            "curve estimation: coefficients do not match the design");
    }
}

}  // namespace

std::vector<double> estimate_curve(const ModelView& model,
                                   std::span<const double> scaled_grid) {
    validate_grid(model, scaled_grid);
    const std::size_t n = model.X.n_rows;
    const std::size_t d = model.cols.size();
    const auto active = model.fit.active();
    const Family family = model.fit.family;

    std::vector<double> psi(scaled_grid.size(), 0.0);
    std::vector<double> xrow(d);
    for (std::size_t g = 0; g < scaled_grid.size(); ++g) {
        const double a = std::clamp(scaled_grid[g], 0.0, 1.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < d; ++c) xrow[c] = model.cols[c][i];
            xrow[model.treatment_col] = a;
            double eta = model.fit.beta[0];
            for (std::size_t j : active) {
                eta += model.fit.beta[j] * eval_basis(model.X.bases[j - 1], xrow);
            }
            acc += family.response(eta);
        }
        psi[g] = acc / static_cast<double>(n);
    }
    return psi;
}

DeltaResult delta_ci(const ModelView& model, std::span<const double> grid,
                     std::span<const double> scaled_grid,
                     const DeltaOptions& opts) {
    validate_grid(model, scaled_grid);
    if (grid.size() != scaled_grid.size()) {
        throw ValidationError("delta_ci: grid and scaled grid sizes differ");
    }
    if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) {
        throw ValidationError("delta_ci: alpha must lie strictly inside (0,1)");
    }
    const std::size_t n = model.X.n_rows;
    const std::size_t d = model.cols.size();
    const bool binomial = model.fit.family.kind == FamilyKind::binomial;
    const double z = normal_quantile(1.0 - opts.alpha / 2.0);

    const WorkingModel wm = relax(model);
    const std::size_t q = wm.cols.size();

    DeltaResult out;
    CurveEstimate& ce = out.curve;
    ce.grid.assign(grid.begin(), grid.end());
    ce.alpha = opts.alpha;
    ce.n = n;
    ce.ridged = wm.fit.ridged;
    out.influence.ridged = wm.fit.ridged;
    out.influence.model_cols = wm.cols;

    std::vector<double> xrow(d);
    std::vector<double> phi(q);
    std::vector<double> pred(n);  // counterfactual prediction per row
    std::vector<double> ic(n);
    Eigen::VectorXd m(static_cast<Eigen::Index>(q));

    for (std::size_t g = 0; g < scaled_grid.size(); ++g) {
        const double a = std::clamp(scaled_grid[g], 0.0, 1.0);
        double psi_acc = 0.0;
        m.setZero();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < d; ++c) xrow[c] = model.cols[c][i];
            xrow[model.treatment_col] = a;
            phi[0] = 1.0;
            double eta = model.fit.beta[0];
            for (std::size_t c = 1; c < q; ++c) {
                const std::size_t j = wm.cols[c];
                phi[c] = eval_basis(model.X.bases[j - 1], xrow);
                eta += model.fit.beta[j] * phi[c];
            }
            pred[i] = model.fit.family.response(eta);
            psi_acc += pred[i];
            // Delta-method direction: the gradient of psi in the working
            // model's coefficients, chain rule through the response link.
            const double link_slope = binomial ? expit_deriv(eta) : 1.0;
            for (std::size_t c = 0; c < q; ++c) {
                m[static_cast<Eigen::Index>(c)] += link_slope * phi[c];
            }
        }
        const double psi = psi_acc / static_cast<double>(n);
        m /= static_cast<double>(n);

        const Eigen::VectorXd u = wm.fit.M.solve(m);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t c = 0; c < q; ++c) {
                s += u[static_cast<Eigen::Index>(c)] *
                     wm.Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
            }
            ic[i] = s * wm.fit.resid[static_cast<Eigen::Index>(i)];
            if (opts.augment_w_term) ic[i] += pred[i] - psi;
        }
        const double se =
            std::sqrt(sample_variance(ic) / static_cast<double>(n));

        ce.psi.push_back(psi);
        ce.se.push_back(se);
        ce.ci_lo.push_back(psi - z * se);
        ce.ci_hi.push_back(psi + z * se);
        if (opts.keep_influence) out.influence.ic_psi.push_back(ic);
    }

    if (opts.keep_influence) {
        // ic_beta_i = M^{-1} phi_i resid_i, laid out row-major n x q.
        const Eigen::MatrixXd sol = wm.fit.M.solve(wm.Q.transpose());  // q x n
        out.influence.ic_beta.resize(n * q);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < q; ++c) {
                out.influence.ic_beta[i * q + c] =
                    sol(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) *
                    wm.fit.resid[static_cast<Eigen::Index>(i)];
            }
        }
    }
    return out;
}

}  // namespace halcurve
