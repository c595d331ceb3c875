// AVX-512 kernel variants. The masked kernels are the reason this backend
// exists: a byte of a bit-packed indicator column is directly a __mmask8, so
// masked loads over 8 rows cost the same as dense ones. Compiled with
// -mavx512f -mavx512dq -mavx512bw -mavx512vl; only called when cpuid agrees.

#if !defined(__AVX512F__) || !defined(__AVX512DQ__)
#error "kernels_avx512.cpp must be compiled with AVX-512 enabled"
#endif

#include <immintrin.h>

#include "halcurve/kernels.hpp"

namespace halcurve::kern {
namespace {

double dot_avx512(const double* x, const double* y, std::size_t n) {
    __m512d acc0 = _mm512_setzero_pd();
    __m512d acc1 = _mm512_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), acc0);
        acc1 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i + 8), _mm512_loadu_pd(y + i + 8), acc1);
    }
    if (i + 8 <= n) {
        acc0 = _mm512_fmadd_pd(_mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i), acc0);
        i += 8;
    }
    if (i < n) {
        const __mmask8 k = static_cast<__mmask8>((1u << (n - i)) - 1u);
        acc1 = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(k, x + i),
                               _mm512_maskz_loadu_pd(k, y + i), acc1);
    }
    return _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
}

double dot3_avx512(const double* w, const double* x, const double* y, std::size_t n) {
    __m512d acc = _mm512_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m512d wx = _mm512_mul_pd(_mm512_loadu_pd(w + i), _mm512_loadu_pd(x + i));
        acc = _mm512_fmadd_pd(wx, _mm512_loadu_pd(y + i), acc);
    }
    if (i < n) {
        const __mmask8 k = static_cast<__mmask8>((1u << (n - i)) - 1u);
        const __m512d wx = _mm512_mul_pd(_mm512_maskz_loadu_pd(k, w + i),
                                         _mm512_maskz_loadu_pd(k, x + i));
        acc = _mm512_fmadd_pd(wx, _mm512_maskz_loadu_pd(k, y + i), acc);
    }
    return _mm512_reduce_add_pd(acc);
}

double sum_avx512(const double* x, std::size_t n) {
    __m512d acc = _mm512_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm512_add_pd(acc, _mm512_loadu_pd(x + i));
    if (i < n) {
        const __mmask8 k = static_cast<__mmask8>((1u << (n - i)) - 1u);
        acc = _mm512_add_pd(acc, _mm512_maskz_loadu_pd(k, x + i));
    }
    return _mm512_reduce_add_pd(acc);
}

void axpy_avx512(double a, const double* x, double* y, std::size_t n) {
    const __m512d va = _mm512_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm512_storeu_pd(y + i, _mm512_fmadd_pd(va, _mm512_loadu_pd(x + i),
                                                _mm512_loadu_pd(y + i)));
    if (i < n) {
        const __mmask8 k = static_cast<__mmask8>((1u << (n - i)) - 1u);
        const __m512d r = _mm512_fmadd_pd(va, _mm512_maskz_loadu_pd(k, x + i),
                                          _mm512_maskz_loadu_pd(k, y + i));
        _mm512_mask_storeu_pd(y + i, k, r);
    }
}

// 8 rows per bit-column byte; a trailing partial byte just trims the mask.
double masked_sum_avx512(const std::uint64_t* bits, const double* x, std::size_t n) {
    __m512d acc = _mm512_setzero_pd();
    const auto* bytes = reinterpret_cast<const unsigned char*>(bits);
    const std::size_t full = n / 8;
    for (std::size_t b = 0; b < full; ++b) {
        const __mmask8 k = static_cast<__mmask8>(bytes[b]);
        if (!k) continue;
        acc = _mm512_add_pd(acc, _mm512_maskz_loadu_pd(k, x + b * 8));
    }
    const std::size_t rem = n % 8;
    if (rem) {
        const __mmask8 k =
            static_cast<__mmask8>(bytes[full] & ((1u << rem) - 1u));
        if (k) acc = _mm512_add_pd(acc, _mm512_maskz_loadu_pd(k, x + full * 8));
    }
    return _mm512_reduce_add_pd(acc);
}

double masked_dot_avx512(const std::uint64_t* bits, const double* x, const double* y,
                         std::size_t n) {
    __m512d acc = _mm512_setzero_pd();
    const auto* bytes = reinterpret_cast<const unsigned char*>(bits);
    const std::size_t full = n / 8;
    for (std::size_t b = 0; b < full; ++b) {
        const __mmask8 k = static_cast<__mmask8>(bytes[b]);
        if (!k) continue;
        acc = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(k, x + b * 8),
                              _mm512_maskz_loadu_pd(k, y + b * 8), acc);
    }
    const std::size_t rem = n % 8;
    if (rem) {
        const __mmask8 k =
            static_cast<__mmask8>(bytes[full] & ((1u << rem) - 1u));
        if (k)
            acc = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(k, x + full * 8),
                                  _mm512_maskz_loadu_pd(k, y + full * 8), acc);
    }
    return _mm512_reduce_add_pd(acc);
}

void masked_add_avx512(const std::uint64_t* bits, double a, double* y, std::size_t n) {
    const __m512d va = _mm512_set1_pd(a);
    const auto* bytes = reinterpret_cast<const unsigned char*>(bits);
    const std::size_t full = n / 8;
    for (std::size_t b = 0; b < full; ++b) {
        const __mmask8 k = static_cast<__mmask8>(bytes[b]);
        if (!k) continue;
        const __m512d v = _mm512_add_pd(_mm512_maskz_loadu_pd(k, y + b * 8), va);
        _mm512_mask_storeu_pd(y + b * 8, k, v);
    }
    const std::size_t rem = n % 8;
    if (rem) {
        const __mmask8 k =
            static_cast<__mmask8>(bytes[full] & ((1u << rem) - 1u));
        if (k) {
            const __m512d v =
                _mm512_add_pd(_mm512_maskz_loadu_pd(k, y + full * 8), va);
            _mm512_mask_storeu_pd(y + full * 8, k, v);
        }
    }
}

}  // namespace

const KernelTable& avx512_table() {
    static const KernelTable table = {dot_avx512,        dot3_avx512,
                                      sum_avx512,        axpy_avx512,
                                      masked_sum_avx512, masked_dot_avx512,
                                      masked_add_avx512};
    return table;
}

}  // namespace halcurve::kern
