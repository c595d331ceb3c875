#pragma once

// Vector kernels for the coordinate-descent inner loops.
//
// The solver spends essentially all of its time in the reductions and updates
// below, applied to design-matrix columns. Zero-order basis columns are 0/1
// indicators stored as bit masks (LSB-first within each 64-bit word), so the
// hot operations come in a dense flavor and a masked flavor.
//
// Every kernel has a scalar reference implementation plus AVX2+FMA and AVX-512
// variants on x86-64; the active variant is chosen at runtime from cpuid. The
// backends are equivalence-tested against the scalar reference (results may
// differ in the last bits because SIMD changes the reduction order). Within a
// process the selection is fixed unless a caller overrides it, so repeated
// runs are bit-identical.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>

namespace halcurve::kern {

enum class Backend { scalar, avx2, avx512 };

// Highest backend the current CPU supports.
Backend detect_backend();
bool backend_supported(Backend b);

// The active backend. Initialized lazily to detect_backend(), or to the value
// of the HALCURVE_SIMD environment variable ("scalar", "avx2", "avx512") if
// set. set_backend throws ValidationError for an unsupported request.
Backend active_backend();
void set_backend(Backend b);

// --- dense kernels -------------------------------------------------------
// sum_i x[i]*y[i]
double dot(const double* x, const double* y, std::size_t n);
// sum_i w[i]*x[i]*y[i]
double dot3(const double* w, const double* x, const double* y, std::size_t n);
// sum_i x[i]
double sum(const double* x, std::size_t n);
// y[i] += a*x[i]
void axpy(double a, const double* x, double* y, std::size_t n);

// --- masked kernels (bit-packed indicator columns) -----------------------
// Words are LSB-first: row i lives in bit (i % 64) of word (i / 64). Bits at
// positions >= n must be zero; the bit-column builders guarantee that.
//
// sum over set bits of x[i]
double masked_sum(const std::uint64_t* bits, const double* x, std::size_t n);
// sum over set bits of x[i]*y[i]
double masked_dot(const std::uint64_t* bits, const double* x, const double* y,
                  std::size_t n);
// y[i] += a for set bits
void masked_add(const std::uint64_t* bits, double a, double* y, std::size_t n);
// number of set bits
std::size_t bit_count(const std::uint64_t* bits, std::size_t n);

// --- span conveniences -----------------------------------------------------
// The row count comes from the dense argument; bit spans hold whole words and
// obey the zero-padding contract above.

inline double dot(std::span<const double> x, std::span<const double> y) {
    return dot(x.data(), y.data(), x.size());
}
inline double dot3(std::span<const double> w, std::span<const double> x,
                   std::span<const double> y) {
    return dot3(w.data(), x.data(), y.data(), x.size());
}
inline double sum(std::span<const double> x) { return sum(x.data(), x.size()); }
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    axpy(a, x.data(), y.data(), x.size());
}
inline double masked_sum(std::span<const std::uint64_t> bits, std::span<const double> x) {
    return masked_sum(bits.data(), x.data(), x.size());
}
inline double masked_dot(std::span<const std::uint64_t> bits, std::span<const double> x,
                         std::span<const double> y) {
    return masked_dot(bits.data(), x.data(), y.data(), x.size());
}
inline void masked_add(std::span<const std::uint64_t> bits, double a, std::span<double> y) {
    masked_add(bits.data(), a, y.data(), y.size());
}
// Popcount over whole words; equals the row count of a column thanks to the
// zero-padding contract.
inline std::size_t bit_count(std::span<const std::uint64_t> words) {
    std::size_t c = 0;
    for (std::uint64_t w : words) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

// Implementation detail shared by the backend translation units.
struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*dot3)(const double*, const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    double (*masked_sum)(const std::uint64_t*, const double*, std::size_t);
    double (*masked_dot)(const std::uint64_t*, const double*, const double*,
                         std::size_t);
    void (*masked_add)(const std::uint64_t*, double, double*, std::size_t);
};

}  // namespace halcurve::kern
