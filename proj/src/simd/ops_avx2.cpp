#include "facetrait/simd/ops.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

// AVX2+FMA variants. Compiled with -mavx2 -mfma in its own translation unit;
// callers reach it only through the runtime dispatcher.

namespace facetrait::simd::avx2 {

namespace {

// lane[j] = (acc0[j]+acc1[j]) + (acc2[j]+acc3[j]); total = (l0+l1)+(l2+l3).
// Matches the scalar reference reduction exactly.
inline double reduce4(__m256d a0, __m256d a1, __m256d a2, __m256d a3) {
    __m256d v = _mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3));
    alignas(32) double lane[4];
    _mm256_store_pd(lane, v);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

inline __m256d load4_f32_as_f64(const float* p) {
    return _mm256_cvtps_pd(_mm_loadu_ps(p));
}

}  // namespace

double dot_f32(const float* a, const float* b, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd(), s1 = s0, s2 = s0, s3 = s0;
    std::size_t blocks = n / 16;
    for (std::size_t i = 0; i < blocks; ++i) {
        const float* pa = a + i * 16;
        const float* pb = b + i * 16;
        s0 = _mm256_fmadd_pd(load4_f32_as_f64(pa + 0), load4_f32_as_f64(pb + 0), s0);
        s1 = _mm256_fmadd_pd(load4_f32_as_f64(pa + 4), load4_f32_as_f64(pb + 4), s1);
        s2 = _mm256_fmadd_pd(load4_f32_as_f64(pa + 8), load4_f32_as_f64(pb + 8), s2);
        s3 = _mm256_fmadd_pd(load4_f32_as_f64(pa + 12), load4_f32_as_f64(pb + 12), s3);
    }
    double total = reduce4(s0, s1, s2, s3);
    for (std::size_t i = blocks * 16; i < n; ++i)
        total = std::fma(static_cast<double>(a[i]), static_cast<double>(b[i]), total);
    return total;
}

double sqdist_f32(const float* a, const float* b, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd(), s1 = s0, s2 = s0, s3 = s0;
    std::size_t blocks = n / 16;
    for (std::size_t i = 0; i < blocks; ++i) {
        const float* pa = a + i * 16;
        const float* pb = b + i * 16;
        __m256d d0 = _mm256_sub_pd(load4_f32_as_f64(pa + 0), load4_f32_as_f64(pb + 0));
        __m256d d1 = _mm256_sub_pd(load4_f32_as_f64(pa + 4), load4_f32_as_f64(pb + 4));
        __m256d d2 = _mm256_sub_pd(load4_f32_as_f64(pa + 8), load4_f32_as_f64(pb + 8));
        __m256d d3 = _mm256_sub_pd(load4_f32_as_f64(pa + 12), load4_f32_as_f64(pb + 12));
        s0 = _mm256_fmadd_pd(d0, d0, s0);
        s1 = _mm256_fmadd_pd(d1, d1, s1);
        s2 = _mm256_fmadd_pd(d2, d2, s2);
        s3 = _mm256_fmadd_pd(d3, d3, s3);
    }
    double total = reduce4(s0, s1, s2, s3);
    for (std::size_t i = blocks * 16; i < n; ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        total = std::fma(d, d, total);
    }
    return total;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd(), s1 = s0, s2 = s0, s3 = s0;
    std::size_t blocks = n / 16;
    for (std::size_t i = 0; i < blocks; ++i) {
        const double* pa = a + i * 16;
        const double* pb = b + i * 16;
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + 0), _mm256_loadu_pd(pb + 0), s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + 4), _mm256_loadu_pd(pb + 4), s1);
        s2 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + 8), _mm256_loadu_pd(pb + 8), s2);
        s3 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + 12), _mm256_loadu_pd(pb + 12), s3);
    }
    double total = reduce4(s0, s1, s2, s3);
    for (std::size_t i = blocks * 16; i < n; ++i) total = std::fma(a[i], b[i], total);
    return total;
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t quads = n / 4;
    for (std::size_t i = 0; i < quads; ++i) {
        __m256d vy = _mm256_loadu_pd(y + i * 4);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i * 4), vy);
        _mm256_storeu_pd(y + i * 4, vy);
    }
    for (std::size_t i = quads * 4; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

}  // namespace facetrait::simd::avx2

#endif
