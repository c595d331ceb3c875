#pragma once

// Internal unpenalized-GLM building blocks shared by the influence-curve
// machinery and the polynomial comparator: a PSD factorization with an
// optional ridge fallback, gaussian least squares, and logistic Newton with
// step halving. Not installed; Eigen types stay out of the public headers.

#include <Eigen/Dense>

namespace halcurve::detail {

// Factors a PSD matrix. When `allow_ridge` is set a numerically singular
// matrix gets one scaled-ridge retry (returns true); otherwise, and when the
// ridged matrix is still singular, throws NumericalError mentioning `what`.
bool factor_spd(Eigen::MatrixXd M, Eigen::LDLT<Eigen::MatrixXd>& ldlt,
                bool allow_ridge, const char* what);

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta);

struct GlmFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd resid;           // response-scale y - fitted
    Eigen::LDLT<Eigen::MatrixXd> M;  // factor of (1/n) Q' V Q at the fit
    bool ridged = false;             // the final factor needed the ridge
    bool converged = true;           // logistic fits: gradient tolerance met
};

// Least squares of y on Q via the normal equations plus one step of
// iterative refinement, so the score equations hold to machine precision.
GlmFit least_squares(const Eigen::MatrixXd& Q, const Eigen::VectorXd& y,
                     bool allow_ridge, const char* what);

// Logistic maximum likelihood by Newton's method with step halving, started
// from `beta0`. Stops when the mean score's infinity norm reaches `grad_tol`
// or no halved step decreases the deviance; `converged` reports which.
GlmFit logistic_newton(const Eigen::MatrixXd& Q, const Eigen::VectorXd& y,
                       Eigen::VectorXd beta0, double grad_tol, int max_iter,
                       bool allow_ridge, const char* what);

}  // namespace halcurve::detail
