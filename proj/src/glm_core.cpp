#include "glm_core.hpp"

#include <algorithm>
#include <string>

#include "halcurve/errors.hpp"
#include "halcurve/stats.hpp"

namespace halcurve::detail {

bool factor_spd(Eigen::MatrixXd M, Eigen::LDLT<Eigen::MatrixXd>& ldlt,
                bool allow_ridge, const char* what) {
    const auto ill = [&]() {
        if (ldlt.info() != Eigen::Success) return true;
        const Eigen::VectorXd D = ldlt.vectorD();
        const double mx = D.maxCoeff();
        return !(mx > 0.0) || D.minCoeff() <= mx * 1e-12;
    };
    ldlt.compute(M);
    if (!ill()) return false;
    if (allow_ridge) {
        const double eps = 1e-8 * M.trace() / static_cast<double>(M.rows());
        M.diagonal().array() += eps > 0.0 ? eps : 1e-12;
        ldlt.compute(M);
        if (!ill()) return true;
    }
    throw NumericalError(std::string(what) +
                         ": the model Gram matrix is numerically singular");
}

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        dev += 2.0 * (-y[i] * eta[i] + log1pexp(eta[i]));
    }
    return dev;
}

GlmFit least_squares(const Eigen::MatrixXd& Q, const Eigen::VectorXd& y,
                     bool allow_ridge, const char* what) {
    const double dn = static_cast<double>(Q.rows());
    GlmFit fit;
    const Eigen::MatrixXd gram = Q.transpose() * Q / dn;
    const Eigen::VectorXd rhs = Q.transpose() * y / dn;
    fit.ridged = factor_spd(gram, fit.M, allow_ridge, what);
    fit.beta = fit.M.solve(rhs);
    fit.beta += fit.M.solve(rhs - gram * fit.beta);
    fit.resid = y - Q * fit.beta;
    return fit;
}

GlmFit logistic_newton(const Eigen::MatrixXd& Q, const Eigen::VectorXd& y,
                       Eigen::VectorXd beta0, double grad_tol, int max_iter,
                       bool allow_ridge, const char* what) {
    const double dn = static_cast<double>(Q.rows());
    Eigen::VectorXd beta = std::move(beta0);
    Eigen::VectorXd eta = Q * beta;
    double dev = binomial_deviance(y, eta);
    Eigen::VectorXd p(y.size()), v(y.size());
    const auto weights_at = [&]() {
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            p[i] = expit(eta[i]);
            v[i] = std::max(p[i] * (1.0 - p[i]), 1e-10);
        }
    };

    GlmFit fit;
    fit.converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        weights_at();
        const Eigen::VectorXd grad = Q.transpose() * (y - p) / dn;
        if (grad.lpNorm<Eigen::Infinity>() <= grad_tol) {
            fit.converged = true;
            break;
        }
        const Eigen::MatrixXd H = Q.transpose() * v.asDiagonal() * Q / dn;
        Eigen::LDLT<Eigen::MatrixXd> hf;
        factor_spd(H, hf, allow_ridge, what);
        const Eigen::VectorXd step = hf.solve(grad);
        double t = 1.0;
        bool accepted = false;
        for (int half = 0; half < 30; ++half) {
            const Eigen::VectorXd beta_try = beta + t * step;
            const Eigen::VectorXd eta_try = Q * beta_try;
            const double dev_try = binomial_deviance(y, eta_try);
            if (dev_try <= dev + 1e-12) {
                beta = beta_try;
                eta = eta_try;
                dev = dev_try;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // flat deviance: treat the score check as final
    }
    weights_at();
    if (!fit.converged) {
        const Eigen::VectorXd grad = Q.transpose() * (y - p) / dn;
        fit.converged = grad.lpNorm<Eigen::Infinity>() <= grad_tol;
    }
    fit.beta = std::move(beta);
    fit.resid = y - p;
    const Eigen::MatrixXd M = Q.transpose() * v.asDiagonal() * Q / dn;
    fit.ridged = factor_spd(M, fit.M, allow_ridge, what);
    return fit;
}

}  // namespace halcurve::detail
