#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "halcurve/errors.hpp"

namespace halcurve {

inline double expit(double x) {
    // Stable in both tails.
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// d/dx expit(x) = expit(x) * (1 - expit(x)), computed stably.
inline double expit_deriv(double x) {
    const double p = expit(x);
    return p * (1.0 - p);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// log(1 + e^x) without overflow; used by the binomial log-likelihood.
inline double log1pexp(double x) {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

// Sample variance with the n-1 denominator (two-pass, for accuracy).
inline double sample_variance(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) {
        const double d = v - m;
        ss += d * d;
    }
    return ss / static_cast<double>(n - 1);
}

inline double sample_sd(std::span<const double> x) {
    return std::sqrt(sample_variance(x));
}

// Inverse standard normal CDF, Wichura's PPND16 (AS 241). Relative error
// below 1e-15 over (0,1); gives z_{0.975} = 1.959963984540054.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw ValidationError("normal_quantile: p must lie strictly inside (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                     67265.770927008700853) * r + 45921.953931549871457) * r +
                   13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                     39307.89580009271061) * r + 21213.794301586595867) * r +
                   5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                    0.24178072517745061177) * r + 1.27045825245236838258) * r +
                  3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                    0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                  0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                  0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                    1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                  0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

}  // namespace halcurve
