// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64 only; callers reach it through the dispatch
// table in simd_dispatch.cpp, never directly.
#if defined(__x86_64__) || defined(_M_X64)

#include "sblt/simd.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstdint>
#include <limits>

namespace sblt::simd {
namespace {

// exp(x) for 4 doubles: round-to-nearest base-2 argument reduction,
// degree-13 Taylor on |r| <= ln2/2, then scale by 2^k via exponent bits.
// Accurate to a few ulp against std::exp over the normal range.
inline __m256d exp_pd(__m256d x) {
    const __m256d log2e  = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d hi_cut = _mm256_set1_pd(709.0);
    const __m256d lo_cut = _mm256_set1_pd(-708.0);

    __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo_cut), hi_cut);
    __m256d k  = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                                 _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r  = _mm256_fnmadd_pd(k, ln2_hi, xc);
    r          = _mm256_fnmadd_pd(k, ln2_lo, r);

    __m256d p = _mm256_set1_pd(1.6059043836821614599e-10);   // 1/13!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.0876756987868098979e-9));  // 1/12!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.5052108385441718775e-8));  // 1/11!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985890653e-7));  // 1/10!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985892511e-6));  // 1/9!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.4801587301587301566e-5));  // 1/8!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.9841269841269841253e-4));  // 1/7!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.3888888888888889419e-3));  // 1/6!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(8.3333333333333332177e-3));  // 1/5!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(4.1666666666666664354e-2));  // 1/4!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.6666666666666665741e-1));  // 1/3!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(5.0e-1));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    __m128i k32 = _mm256_cvtpd_epi32(k);
    __m256i k64 = _mm256_cvtepi32_epi64(k32);
    __m256i ebits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
    __m256d res = _mm256_mul_pd(p, _mm256_castsi256_pd(ebits));

    __m256d under = _mm256_cmp_pd(x, lo_cut, _CMP_LT_OQ);
    __m256d over  = _mm256_cmp_pd(x, hi_cut, _CMP_GT_OQ);
    res = _mm256_blendv_pd(res, _mm256_setzero_pd(), under);
    res = _mm256_blendv_pd(res, _mm256_set1_pd(std::numeric_limits<double>::infinity()), over);
    return res;
}

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
        a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
    }
    for (; i + 4 <= n; i += 4) a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    }
    for (; i + 4 <= n; i += 4)
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double dot3_avx2(const double* x, const double* y, const double* z, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xy = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        a0 = _mm256_fmadd_pd(xy, _mm256_loadu_pd(z + i), a0);
    }
    double acc = hsum(a0);
    for (; i < n; ++i) acc += x[i] * y[i] * z[i];
    return acc;
}

void heat_step_avx2(double* out, const double* u, std::size_t n, double alpha) {
    if (n < 3) return;
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d two = _mm256_set1_pd(2.0);
    std::size_t i = 1;
    for (; i + 5 <= n; i += 4) {
        __m256d um = _mm256_loadu_pd(u + i - 1);
        __m256d uc = _mm256_loadu_pd(u + i);
        __m256d up = _mm256_loadu_pd(u + i + 1);
        __m256d lap = _mm256_add_pd(um, _mm256_fnmadd_pd(two, uc, up));
        _mm256_storeu_pd(out + i, _mm256_fmadd_pd(va, lap, uc));
    }
    for (; i + 1 < n; ++i)
        out[i] = u[i] + alpha * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
}

void stencil3_avx2(double* out, const double* u, const double* cm,
                   const double* cc, const double* cp, std::size_t n) {
    if (n < 3) return;
    std::size_t i = 1;
    for (; i + 5 <= n; i += 4) {
        __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(cm + i), _mm256_loadu_pd(u + i - 1));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(cc + i), _mm256_loadu_pd(u + i), acc);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(cp + i), _mm256_loadu_pd(u + i + 1), acc);
        _mm256_storeu_pd(out + i, acc);
    }
    for (; i + 1 < n; ++i)
        out[i] = cm[i] * u[i - 1] + cc[i] * u[i] + cp[i] * u[i + 1];
}

void logistic_avx2(double* u, std::size_t n, double a, double b) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(u + i);
        __m256d num = _mm256_mul_pd(va, v);
        __m256d den = _mm256_fmadd_pd(vb, v, one);
        _mm256_storeu_pd(u + i, _mm256_div_pd(num, den));
    }
    for (; i < n; ++i) u[i] = a * u[i] / (1.0 + b * u[i]);
}

void exp_weight_avx2(double* out, const double* x, std::size_t n,
                     double lambda, double scale) {
    const __m256d vl = _mm256_set1_pd(-lambda);
    const __m256d vs = _mm256_set1_pd(scale);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        __m256d e = exp_pd(_mm256_mul_pd(vl, v));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_mul_pd(vs, v), e));
    }
    for (; i < n; ++i) out[i] = scale * x[i] * std::exp(-lambda * x[i]);
}

void sqrt_noise_clamp_avx2(double* u, const double* xi, std::size_t n, double c) {
    const __m256d vc = _mm256_set1_pd(c);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(u + i);
        __m256d s = _mm256_sqrt_pd(_mm256_mul_pd(v, vc));
        __m256d r = _mm256_fmadd_pd(s, _mm256_loadu_pd(xi + i), v);
        _mm256_storeu_pd(u + i, _mm256_max_pd(zero, r));
    }
    for (; i < n; ++i) {
        double r = u[i] + std::sqrt(u[i] * c) * xi[i];
        u[i] = r > 0.0 ? r : 0.0;
    }
}

}  // namespace

const Kernels& avx2_kernels() {
    static const Kernels k = {
        sum_avx2,      dot_avx2,      dot3_avx2,
        heat_step_avx2, stencil3_avx2, logistic_avx2,
        exp_weight_avx2, sqrt_noise_clamp_avx2,
        Isa::avx2,
    };
    return k;
}

}  // namespace sblt::simd

#endif  // x86-64
