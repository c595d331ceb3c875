// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma; only ever called when
// cpuid reports support (see kernels_dispatch.cpp).

#if !defined(__AVX2__) || !defined(__FMA__)
#error "kernels_avx2.cpp must be compiled with -mavx2 -mfma"
#endif

#include <immintrin.h>

#include <array>

#include "halcurve/kernels.hpp"

namespace halcurve::kern {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Lane masks for every 4-bit pattern: lane k of entry m is all-ones when bit k
// of m is set. Used to turn nibbles of a bit column into maskload masks.
struct LaneMasks {
    alignas(32) std::int64_t m[16][4];
};
constexpr LaneMasks make_lane_masks() {
    LaneMasks t{};
    for (int pat = 0; pat < 16; ++pat)
        for (int lane = 0; lane < 4; ++lane)
            t.m[pat][lane] = (pat >> lane) & 1 ? -1 : 0;
    return t;
}
constexpr LaneMasks kLaneMasks = make_lane_masks();

inline __m256i nibble_mask(unsigned nib) {
    return _mm256_load_si256(reinterpret_cast<const __m256i*>(kLaneMasks.m[nib]));
}

inline bool bit_at(const std::uint64_t* bits, std::size_t i) {
    return (bits[i / 64] >> (i % 64)) & 1u;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double dot3_avx2(const double* w, const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d wx0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i));
        const __m256d wx1 = _mm256_mul_pd(_mm256_loadu_pd(w + i + 4), _mm256_loadu_pd(x + i + 4));
        acc0 = _mm256_fmadd_pd(wx0, _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(wx1, _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d wx = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i));
        acc0 = _mm256_fmadd_pd(wx, _mm256_loadu_pd(y + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += w[i] * x[i] * y[i];
    return acc;
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4),
                                                    _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

double masked_sum_avx2(const std::uint64_t* bits, const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    const auto* bytes = reinterpret_cast<const unsigned char*>(bits);
    for (; i + 8 <= n; i += 8) {
        const unsigned b = bytes[i / 8];
        if (!b) continue;
        acc = _mm256_add_pd(acc, _mm256_maskload_pd(x + i, nibble_mask(b & 0xF)));
        acc = _mm256_add_pd(acc, _mm256_maskload_pd(x + i + 4, nibble_mask(b >> 4)));
    }
    double r = hsum(acc);
    for (; i < n; ++i)
        if (bit_at(bits, i)) r += x[i];
    return r;
}

double masked_dot_avx2(const std::uint64_t* bits, const double* x, const double* y,
                       std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    const auto* bytes = reinterpret_cast<const unsigned char*>(bits);
    for (; i + 8 <= n; i += 8) {
        const unsigned b = bytes[i / 8];
        if (!b) continue;
        // Masked-out lanes of x load as 0, and 0 * y = 0 for the finite
        // vectors this library feeds through here.
        acc = _mm256_fmadd_pd(_mm256_maskload_pd(x + i, nibble_mask(b & 0xF)),
                              _mm256_loadu_pd(y + i), acc);
        acc = _mm256_fmadd_pd(_mm256_maskload_pd(x + i + 4, nibble_mask(b >> 4)),
                              _mm256_loadu_pd(y + i + 4), acc);
    }
    double r = hsum(acc);
    for (; i < n; ++i)
        if (bit_at(bits, i)) r += x[i] * y[i];
    return r;
}

void masked_add_avx2(const std::uint64_t* bits, double a, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    const auto* bytes = reinterpret_cast<const unsigned char*>(bits);
    for (; i + 8 <= n; i += 8) {
        const unsigned b = bytes[i / 8];
        if (!b) continue;
        const __m256i m0 = nibble_mask(b & 0xF);
        const __m256i m1 = nibble_mask(b >> 4);
        _mm256_maskstore_pd(y + i, m0,
                            _mm256_add_pd(_mm256_loadu_pd(y + i), va));
        _mm256_maskstore_pd(y + i + 4, m1,
                            _mm256_add_pd(_mm256_loadu_pd(y + i + 4), va));
    }
    for (; i < n; ++i)
        if (bit_at(bits, i)) y[i] += a;
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table = {dot_avx2,        dot3_avx2,
                                      sum_avx2,        axpy_avx2,
                                      masked_sum_avx2, masked_dot_avx2,
                                      masked_add_avx2};
    return table;
}

}  // namespace halcurve::kern
