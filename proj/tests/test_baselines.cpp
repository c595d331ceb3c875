#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "halcurve/baselines.hpp"
#include "halcurve/dataset.hpp"
#include "halcurve/errors.hpp"
#include "halcurve/rng.hpp"
#include "halcurve/stats.hpp"

using namespace halcurve;

namespace {

// One uniform covariate, treatment uniform on [0, 5].
Dataset linear_gaussian(std::uint64_t seed, std::size_t n, double noise_sd) {
    Rng rng(seed);
    Dataset d;
    d.w_names = {"W"};
    d.W.assign(1, std::vector<double>(n));
    d.A.resize(n);
    d.Y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = rng.uniform01();
        const double a = 5.0 * rng.uniform01();
        d.W[0][i] = w;
        d.A[i] = a;
        d.Y[i] = 2.0 + 1.5 * a - 0.8 * w + 0.5 * w * a + rng.normal(0.0, noise_sd);
    }
    return d;
}

Dataset logit_linear(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    Dataset d;
    d.w_names = {"W"};
    d.W.assign(1, std::vector<double>(n));
    d.A.resize(n);
    d.Y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = rng.uniform01();
        const double a = 5.0 * rng.uniform01();
        const double p = expit(-1.0 + 0.8 * a - 1.2 * w + 0.6 * w * a);
        d.W[0][i] = w;
        d.A[i] = a;
        d.Y[i] = rng.uniform01() < p ? 1.0 : 0.0;
    }
    return d;
}

// E_W expit(b0 + b1 a + b2 W + b3 W a) for W ~ U(0,1), by Simpson's rule.
double logit_truth(double a) {
    const int k = 2000;  // even
    const double h = 1.0 / k;
    double s = 0.0;
    for (int t = 0; t <= k; ++t) {
        const double w = t * h;
        const double f = expit(-1.0 + 0.8 * a - 1.2 * w + 0.6 * w * a);
        const double coef = (t == 0 || t == k) ? 1.0 : (t % 2 == 1 ? 4.0 : 2.0);
        s += coef * f;
    }
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("correctly specified gaussian model recovers the coefficients") {
    const Dataset d = linear_gaussian(7, 4000, 0.5);
    const PolyModel model = fit_poly(d, 1, Family::gaussian());
    REQUIRE(model.beta.size() == 4);
    CHECK(model.beta[0] == doctest::Approx(2.0).epsilon(0.08));
    CHECK(model.beta[1] == doctest::Approx(1.5).epsilon(0.05));
    CHECK(model.beta[2] == doctest::Approx(-0.8).epsilon(0.15));
    CHECK(model.beta[3] == doctest::Approx(0.5).epsilon(0.12));

    // For an identity link the curve is the prediction at the mean terms:
    // psi(a) = b0 + b1 a + b2 mean(W) + b3 mean(W) a, exactly.
    const double wbar = mean(d.W[0]);
    const std::vector<double> grid = {0.5, 2.0, 4.5};
    const CurveEstimate ce = poly_curve(model, d, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double exact = model.beta[0] + model.beta[1] * grid[g] +
                             model.beta[2] * wbar +
                             model.beta[3] * wbar * grid[g];
        CHECK(ce.psi[g] == doctest::Approx(exact).epsilon(1e-12));
        const double truth =
            2.0 + 1.5 * grid[g] - 0.8 * 0.5 + 0.5 * 0.5 * grid[g];
        CHECK(std::abs(ce.psi[g] - truth) < 4.0 * ce.se[g] + 0.05);
        CHECK(ce.se[g] > 0.0);
    }
}

TEST_CASE("correctly specified logit-linear model matches the integrated truth") {
    const Dataset d = logit_linear(11, 60000);
    const PolyModel model = fit_poly(d, 1, Family::binomial());
    const std::vector<double> grid = {0.5, 1.5, 2.5, 3.5, 4.5};
    const CurveEstimate ce = poly_curve(model, d, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        CHECK(ce.psi[g] == doctest::Approx(logit_truth(grid[g])).epsilon(0.02));
        CHECK(ce.psi[g] > 0.0);
        CHECK(ce.psi[g] < 1.0);
    }
}

TEST_CASE("zero-slope data reduces to the classical mean interval at mean(A)") {
    // Y is exactly uncorrelated with A, so the fitted slope is zero and at
    // a = mean(A) the delta direction picks out the intercept alone:
    // psi = mean(Y), se = sd(Y) / sqrt(n).
    Dataset d;
    d.A = {1.0, 2.0, 3.0, 4.0};
    d.Y = {2.0, 4.0, 4.0, 2.0};
    const PolyModel model = fit_poly(d, 1, Family::gaussian());
    CHECK(std::abs(model.beta[1]) < 1e-12);

    const std::vector<double> grid = {2.5};
    const CurveEstimate ce = poly_curve(model, d, grid);
    CHECK(ce.psi[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(ce.se[0] == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-10));
    const double z = normal_quantile(0.975);
    CHECK(ce.ci_lo[0] ==
          doctest::Approx(3.0 - z * std::sqrt(1.0 / 3.0)).epsilon(1e-10));
    CHECK(ce.ci_hi[0] ==
          doctest::Approx(3.0 + z * std::sqrt(1.0 / 3.0)).epsilon(1e-10));
}

TEST_CASE("gaussian cubic curve has vanishing fourth differences") {
    const Dataset d = linear_gaussian(13, 800, 1.0);
    const PolyModel model = fit_poly(d, 3, Family::gaussian());
    std::vector<double> grid;
    for (int t = 0; t <= 8; ++t) grid.push_back(0.5 + 0.5 * t);  // inside [0,5]
    const CurveEstimate ce = poly_curve(model, d, grid);
    for (std::size_t g = 0; g + 4 < grid.size(); ++g) {
        const double d4 = ce.psi[g] - 4.0 * ce.psi[g + 1] + 6.0 * ce.psi[g + 2] -
                          4.0 * ce.psi[g + 3] + ce.psi[g + 4];
        CHECK(std::abs(d4) < 1e-9);
    }
}

TEST_CASE("grid values outside the observed treatment range are clipped") {
    const Dataset d = linear_gaussian(17, 500, 0.5);
    const PolyModel model = fit_poly(d, 3, Family::gaussian());
    const double a_lo = *std::min_element(d.A.begin(), d.A.end());
    const double a_hi = *std::max_element(d.A.begin(), d.A.end());
    const std::vector<double> wild = {-10.0, 10.0};
    const std::vector<double> edges = {a_lo, a_hi};
    const CurveEstimate c1 = poly_curve(model, d, wild);
    const CurveEstimate c2 = poly_curve(model, d, edges);
    CHECK(c1.psi[0] == doctest::Approx(c2.psi[0]).epsilon(1e-14));
    CHECK(c1.psi[1] == doctest::Approx(c2.psi[1]).epsilon(1e-14));
    CHECK(c1.se[0] == doctest::Approx(c2.se[0]).epsilon(1e-14));
}

TEST_CASE("delta standard errors track a row bootstrap") {
    const Dataset d = logit_linear(19, 500);
    const PolyModel model = fit_poly(d, 3, Family::binomial());
    const std::vector<double> grid = {1.0, 2.5, 4.0};
    const CurveEstimate ce = poly_curve(model, d, grid);

    const int B = 400;
    std::vector<std::vector<double>> boot(grid.size());
    Rng rng(777);
    const std::size_t n = d.n();
    for (int b = 0; b < B; ++b) {
        Dataset rs;
        rs.w_names = d.w_names;
        rs.W.assign(1, std::vector<double>(n));
        rs.A.resize(n);
        rs.Y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(rng.uniform01() * n) % n;
            rs.W[0][i] = d.W[0][k];
            rs.A[i] = d.A[k];
            rs.Y[i] = d.Y[k];
        }
        const PolyModel mb = fit_poly(rs, 3, Family::binomial());
        const CurveEstimate cb = poly_curve(mb, rs, grid);
        for (std::size_t g = 0; g < grid.size(); ++g) boot[g].push_back(cb.psi[g]);
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double boot_se = sample_sd(boot[g]);
        CHECK(ce.se[g] / boot_se > 0.85);
        CHECK(ce.se[g] / boot_se < 1.15);
    }
}

TEST_CASE("invalid polynomial fits are rejected") {
    const Dataset d = linear_gaussian(23, 100, 0.5);
    CHECK_THROWS_AS(fit_poly(d, 0, Family::gaussian()), ValidationError);

    Dataset tiny;
    tiny.A = {1.0, 2.0, 3.0};
    tiny.Y = {0.5, 1.0, 1.5};
    // degree 2 needs more than 3 observations for its 3 terms.
    CHECK_THROWS_AS(fit_poly(tiny, 2, Family::gaussian()), ValidationError);

    Dataset dup = d;  // a duplicated covariate column is rank deficient
    dup.w_names.push_back("W2");
    dup.W.push_back(dup.W[0]);
    CHECK_THROWS_AS(fit_poly(dup, 1, Family::gaussian()), NumericalError);

    const PolyModel model = fit_poly(d, 1, Family::gaussian());
    const std::vector<double> grid = {1.0};
    const std::vector<double> empty;
    CHECK_THROWS_AS(poly_curve(model, d, empty), ValidationError);
    CHECK_THROWS_AS(poly_curve(model, d, grid, 0.0), ValidationError);
    CHECK_THROWS_AS(poly_curve(model, d, grid, 1.0), ValidationError);

    Dataset mismatched = d;
    mismatched.w_names.push_back("W2");
    mismatched.W.push_back(mismatched.W[0]);
    CHECK_THROWS_AS(poly_curve(model, mismatched, grid), ValidationError);
}
