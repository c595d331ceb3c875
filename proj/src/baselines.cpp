#include "halcurve/baselines.hpp"

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

// Fills one design row: 1, a, ..., a^degree, W_j, W_j * a.
void poly_terms(double a, const Dataset& data, std::size_t row, int degree,
                std::span<double> out) {
    out[0] = 1.0;
    double pow_a = 1.0;
    for (int k = 1; k <= degree; ++k) {
        pow_a *= a;
        out[static_cast<std::size_t>(k)] = pow_a;
    }
    const std::size_t m = data.n_covariates();
    for (std::size_t j = 0; j < m; ++j) {
        const double w = data.W[j][row];
        out[1 + static_cast<std::size_t>(degree) + j] = w;
        out[1 + static_cast<std::size_t>(degree) + m + j] = w * a;
    }
}

Eigen::MatrixXd poly_design(const Dataset& data, int degree) {
    const std::size_t n = data.n();
    const std::size_t q = poly_term_count(degree, data.n_covariates());
    Eigen::MatrixXd Q(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
    std::vector<double> row(q);
    for (std::size_t i = 0; i < n; ++i) {
        poly_terms(data.A[i], data, i, degree, row);
        for (std::size_t c = 0; c < q; ++c) {
            Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
        }
    }
    return Q;
}

detail::GlmFit refit(const Eigen::MatrixXd& Q, const Eigen::VectorXd& y,
                     Family family, const char* what) {
    if (family.kind == FamilyKind::gaussian) {
        return detail::least_squares(Q, y, /*allow_ridge=*/false, what);
    }
    // Seed the intercept at the marginal log odds; everything else at zero.
    Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(Q.cols());
    const double ybar =
        std::clamp(y.mean(), 1e-12, 1.0 - 1e-12);
    beta0[0] = std::log(ybar / (1.0 - ybar));
    detail::GlmFit fit =
        detail::logistic_newton(Q, y, std::move(beta0), /*grad_tol=*/1e-9,
                                /*max_iter=*/200, /*allow_ridge=*/false, what);
    if (!fit.converged) {
        throw NumericalError(
            "polynomial fit: Newton iterations did not reach the score "
            "tolerance (separated or degenerate data)");
    }
    return fit;
}

}  // namespace

PolyModel fit_poly(const Dataset& data, int degree, Family family) {
    if (degree < 1) {
        throw ValidationError("polynomial fit: degree must be at least 1");
    }
    const std::size_t q = poly_term_count(degree, data.n_covariates());
    if (data.n() <= q) {
        throw ValidationError(
            "polynomial fit: need more observations than regression terms");
    }
    const Eigen::MatrixXd Q = poly_design(data, degree);
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.n()));
    for (std::size_t i = 0; i < data.n(); ++i) {
        y[static_cast<Eigen::Index>(i)] = data.Y[i];
    }
    const detail::GlmFit fit = refit(Q, y, family, "polynomial fit");

    PolyModel model;
    model.degree = degree;
    model.n_covariates = data.n_covariates();
    model.family = family;
    model.beta.assign(fit.beta.data(), fit.beta.data() + fit.beta.size());
    return model;
}

CurveEstimate poly_curve(const PolyModel& model, const Dataset& data,
                         std::span<const double> grid, double alpha) {
    if (grid.empty()) {
        throw ValidationError("polynomial curve: the treatment grid is empty");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError(
            "polynomial curve: alpha must lie strictly inside (0,1)");
    }
    const std::size_t q = poly_term_count(model.degree, model.n_covariates);
    if (model.beta.size() != q || data.n_covariates() != model.n_covariates) {
        throw ValidationError(
            "polynomial curve: model and data shapes do not match");
    }
    const std::size_t n = data.n();
    const bool binomial = model.family.kind == FamilyKind::binomial;
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const auto [a_lo_it, a_hi_it] =
        std::minmax_element(data.A.begin(), data.A.end());
    const double a_lo = *a_lo_it;
    const double a_hi = *a_hi_it;

    // The working model is the whole fitted model; re-deriving the residuals
    // and Gram factor from the coefficients keeps the model serializable.
    const Eigen::MatrixXd Q = poly_design(data, model.degree);
    const Eigen::Map<const Eigen::VectorXd> beta(model.beta.data(),
                                                 static_cast<Eigen::Index>(q));
    const Eigen::VectorXd eta = Q * beta;
    Eigen::VectorXd resid(static_cast<Eigen::Index>(n));
    Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double fitted = model.family.response(eta[k]);
        resid[k] = data.Y[i] - fitted;
        if (binomial) v[k] = std::max(fitted * (1.0 - fitted), 1e-10);
    }
    const Eigen::MatrixXd M =
        Q.transpose() * v.asDiagonal() * Q / static_cast<double>(n);
    Eigen::LDLT<Eigen::MatrixXd> mf;
    detail::factor_spd(M, mf, /*allow_ridge=*/false, "polynomial curve");

    CurveEstimate ce;
    ce.grid.assign(grid.begin(), grid.end());
    ce.alpha = alpha;
    ce.n = n;

    std::vector<double> terms(q);
    std::vector<double> ic(n);
    Eigen::VectorXd m(static_cast<Eigen::Index>(q));
    for (double a_raw : grid) {
        const double a = std::clamp(a_raw, a_lo, a_hi);
        double psi_acc = 0.0;
        m.setZero();
        for (std::size_t i = 0; i < n; ++i) {
            poly_terms(a, data, i, model.degree, terms);
            double eta_cf = 0.0;
            for (std::size_t c = 0; c < q; ++c) eta_cf += model.beta[c] * terms[c];
            psi_acc += model.family.response(eta_cf);
            const double link_slope = binomial ? expit_deriv(eta_cf) : 1.0;
            for (std::size_t c = 0; c < q; ++c) {
                m[static_cast<Eigen::Index>(c)] += link_slope * terms[c];
            }
        }
        const double psi = psi_acc / static_cast<double>(n);
        m /= static_cast<double>(n);

        const Eigen::VectorXd u = mf.solve(m);
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            ic[i] = u.dot(Q.row(k)) * resid[k];
        }
        const double se =
            std::sqrt(sample_variance(ic) / static_cast<double>(n));
        ce.psi.push_back(psi);
        ce.se.push_back(se);
        ce.ci_lo.push_back(psi - z * se);
        ce.ci_hi.push_back(psi + z * se);
    }
    return ce;
}

}  // namespace halcurve
