// Runtime backend selection for the vector kernels.

#include <bit>
#include <cstdlib>
#include <string>

#include "halcurve/errors.hpp"
#include "halcurve/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define HALCURVE_X86 1
#endif

namespace halcurve::kern {

const KernelTable& scalar_table();
#ifdef HALCURVE_X86
const KernelTable& avx2_table();
const KernelTable& avx512_table();
#endif

namespace {

bool cpu_supports(Backend b) {
    switch (b) {
        case Backend::scalar:
            return true;
#ifdef HALCURVE_X86
        case Backend::avx2:
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
        case Backend::avx512:
            return __builtin_cpu_supports("avx512f") &&
                   __builtin_cpu_supports("avx512dq") &&
                   __builtin_cpu_supports("avx512bw") &&
                   __builtin_cpu_supports("avx512vl");
#else
        default:
            return false;
#endif
    }
    return false;
}

const KernelTable* table_for(Backend b) {
    switch (b) {
        case Backend::scalar:
            return &scalar_table();
#ifdef HALCURVE_X86
        case Backend::avx2:
            return &avx2_table();
        case Backend::avx512:
            return &avx512_table();
#else
        default:
            break;
#endif
    }
    return &scalar_table();
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar:
            return "scalar";
        case Backend::avx2:
            return "avx2";
        case Backend::avx512:
            return "avx512";
    }
    return "?";
}

struct State {
    Backend backend;
    const KernelTable* table;
};

State initial_state() {
    Backend b = detect_backend();
    if (const char* env = std::getenv("HALCURVE_SIMD")) {
        const std::string want(env);
        Backend req;
        if (want == "scalar")
            req = Backend::scalar;
        else if (want == "avx2")
            req = Backend::avx2;
        else if (want == "avx512")
            req = Backend::avx512;
        else
            throw ValidationError("HALCURVE_SIMD must be scalar, avx2 or avx512 (got '" +
                                  want + "')");
        if (!cpu_supports(req))
            throw ValidationError(std::string("HALCURVE_SIMD requests backend '") +
                                  backend_name(req) + "' but this CPU lacks it");
        b = req;
    }
    return {b, table_for(b)};
}

State& state() {
    static State s = initial_state();
    return s;
}

}  // namespace

Backend detect_backend() {
    if (cpu_supports(Backend::avx512)) return Backend::avx512;
    if (cpu_supports(Backend::avx2)) return Backend::avx2;
    return Backend::scalar;
}

bool backend_supported(Backend b) { return cpu_supports(b); }

Backend active_backend() { return state().backend; }

void set_backend(Backend b) {
    if (!cpu_supports(b))
        throw ValidationError(std::string("kernel backend '") + backend_name(b) +
                              "' is not supported on this CPU");
    state() = {b, table_for(b)};
}

double dot(const double* x, const double* y, std::size_t n) {
    return state().table->dot(x, y, n);
}
double dot3(const double* w, const double* x, const double* y, std::size_t n) {
    return state().table->dot3(w, x, y, n);
}
double sum(const double* x, std::size_t n) { return state().table->sum(x, n); }
void axpy(double a, const double* x, double* y, std::size_t n) {
    state().table->axpy(a, x, y, n);
}
double masked_sum(const std::uint64_t* bits, const double* x, std::size_t n) {
    return state().table->masked_sum(bits, x, n);
}
double masked_dot(const std::uint64_t* bits, const double* x, const double* y,
                  std::size_t n) {
    return state().table->masked_dot(bits, x, y, n);
}
void masked_add(const std::uint64_t* bits, double a, double* y, std::size_t n) {
    state().table->masked_add(bits, a, y, n);
}

std::size_t bit_count(const std::uint64_t* bits, std::size_t n) {
    // Builders guarantee bits at positions >= n are zero.
    std::size_t c = 0;
    const std::size_t n_words = (n + 63) / 64;
    for (std::size_t w = 0; w < n_words; ++w) c += std::popcount(bits[w]);
    return c;
}

}  // namespace halcurve::kern
