// Scalar reference kernels. These define the semantics the SIMD variants are
// tested against: straight left-to-right accumulation.

#include <bit>

#include "halcurve/kernels.hpp"

namespace halcurve::kern {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double dot3_scalar(const double* w, const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += w[i] * x[i] * y[i];
    return acc;
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double masked_sum_scalar(const std::uint64_t* bits, const double* x, std::size_t n) {
    double acc = 0.0;
    const std::size_t n_words = (n + 63) / 64;
    for (std::size_t w = 0; w < n_words; ++w) {
        std::uint64_t word = bits[w];
        const std::size_t base = w * 64;
        while (word) {
            const int b = std::countr_zero(word);
            acc += x[base + static_cast<std::size_t>(b)];
            word &= word - 1;
        }
    }
    return acc;
}

double masked_dot_scalar(const std::uint64_t* bits, const double* x, const double* y,
                         std::size_t n) {
    double acc = 0.0;
    const std::size_t n_words = (n + 63) / 64;
    for (std::size_t w = 0; w < n_words; ++w) {
        std::uint64_t word = bits[w];
        const std::size_t base = w * 64;
        while (word) {
            const int b = std::countr_zero(word);
            const std::size_t i = base + static_cast<std::size_t>(b);
            acc += x[i] * y[i];
            word &= word - 1;
        }
    }
    return acc;
}

void masked_add_scalar(const std::uint64_t* bits, double a, double* y, std::size_t n) {
    const std::size_t n_words = (n + 63) / 64;
    for (std::size_t w = 0; w < n_words; ++w) {
        std::uint64_t word = bits[w];
        const std::size_t base = w * 64;
        while (word) {
            const int b = std::countr_zero(word);
            y[base + static_cast<std::size_t>(b)] += a;
            word &= word - 1;
        }
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table = {dot_scalar,        dot3_scalar,
                                      sum_scalar,        axpy_scalar,
                                      masked_sum_scalar, masked_dot_scalar,
                                      masked_add_scalar};
    return table;
}

}  // namespace halcurve::kern
