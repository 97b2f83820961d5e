#include "facetrait/simd/ops.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

// NEON variants (aarch64, float64x2 lanes). Same 16-wide striping and
// reduction order as the scalar reference: register pair (r0,r1) stands for
// one 4-lane accumulator, lanes ordered r0[0], r0[1], r1[0], r1[1].

namespace facetrait::simd::neon {

namespace {

struct Acc4 {
    float64x2_t lo = vdupq_n_f64(0.0);
    float64x2_t hi = vdupq_n_f64(0.0);
};

inline double reduce4(const Acc4& a0, const Acc4& a1, const Acc4& a2, const Acc4& a3) {
    float64x2_t lo = vaddq_f64(vaddq_f64(a0.lo, a1.lo), vaddq_f64(a2.lo, a3.lo));
    float64x2_t hi = vaddq_f64(vaddq_f64(a0.hi, a1.hi), vaddq_f64(a2.hi, a3.hi));
    double l0 = vgetq_lane_f64(lo, 0), l1 = vgetq_lane_f64(lo, 1);
    double l2 = vgetq_lane_f64(hi, 0), l3 = vgetq_lane_f64(hi, 1);
    return (l0 + l1) + (l2 + l3);
}

inline void load4_f32_as_f64(const float* p, float64x2_t& lo, float64x2_t& hi) {
    float32x4_t v = vld1q_f32(p);
    lo = vcvt_f64_f32(vget_low_f32(v));
    hi = vcvt_f64_f32(vget_high_f32(v));
}

inline void fma_f32(Acc4& acc, const float* a, const float* b) {
    float64x2_t alo, ahi, blo, bhi;
    load4_f32_as_f64(a, alo, ahi);
    load4_f32_as_f64(b, blo, bhi);
    acc.lo = vfmaq_f64(acc.lo, alo, blo);
    acc.hi = vfmaq_f64(acc.hi, ahi, bhi);
}

inline void fma_sqdiff_f32(Acc4& acc, const float* a, const float* b) {
    float64x2_t alo, ahi, blo, bhi;
    load4_f32_as_f64(a, alo, ahi);
    load4_f32_as_f64(b, blo, bhi);
    float64x2_t dlo = vsubq_f64(alo, blo);
    float64x2_t dhi = vsubq_f64(ahi, bhi);
    acc.lo = vfmaq_f64(acc.lo, dlo, dlo);
    acc.hi = vfmaq_f64(acc.hi, dhi, dhi);
}

inline void fma_f64(Acc4& acc, const double* a, const double* b) {
    acc.lo = vfmaq_f64(acc.lo, vld1q_f64(a), vld1q_f64(b));
    acc.hi = vfmaq_f64(acc.hi, vld1q_f64(a + 2), vld1q_f64(b + 2));
}

}  // namespace

double dot_f32(const float* a, const float* b, std::size_t n) {
    Acc4 s0, s1, s2, s3;
    std::size_t blocks = n / 16;
    for (std::size_t i = 0; i < blocks; ++i) {
        const float* pa = a + i * 16;
        const float* pb = b + i * 16;
        fma_f32(s0, pa + 0, pb + 0);
        fma_f32(s1, pa + 4, pb + 4);
        fma_f32(s2, pa + 8, pb + 8);
        fma_f32(s3, pa + 12, pb + 12);
    }
    double total = reduce4(s0, s1, s2, s3);
    for (std::size_t i = blocks * 16; i < n; ++i)
        total = std::fma(static_cast<double>(a[i]), static_cast<double>(b[i]), total);
    return total;
}

double sqdist_f32(const float* a, const float* b, std::size_t n) {
    Acc4 s0, s1, s2, s3;
    std::size_t blocks = n / 16;
    for (std::size_t i = 0; i < blocks; ++i) {
        const float* pa = a + i * 16;
        const float* pb = b + i * 16;
        fma_sqdiff_f32(s0, pa + 0, pb + 0);
        fma_sqdiff_f32(s1, pa + 4, pb + 4);
        fma_sqdiff_f32(s2, pa + 8, pb + 8);
        fma_sqdiff_f32(s3, pa + 12, pb + 12);
    }
    double total = reduce4(s0, s1, s2, s3);
    for (std::size_t i = blocks * 16; i < n; ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        total = std::fma(d, d, total);
    }
    return total;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
    Acc4 s0, s1, s2, s3;
    std::size_t blocks = n / 16;
    for (std::size_t i = 0; i < blocks; ++i) {
        const double* pa = a + i * 16;
        const double* pb = b + i * 16;
        fma_f64(s0, pa + 0, pb + 0);
        fma_f64(s1, pa + 4, pb + 4);
        fma_f64(s2, pa + 8, pb + 8);
        fma_f64(s3, pa + 12, pb + 12);
    }
    double total = reduce4(s0, s1, s2, s3);
    for (std::size_t i = blocks * 16; i < n; ++i) total = std::fma(a[i], b[i], total);
    return total;
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(alpha);
    std::size_t pairs = n / 2;
    for (std::size_t i = 0; i < pairs; ++i) {
        float64x2_t vy = vld1q_f64(y + i * 2);
        vy = vfmaq_f64(vy, va, vld1q_f64(x + i * 2));
        vst1q_f64(y + i * 2, vy);
    }
    for (std::size_t i = pairs * 2; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

}  // namespace facetrait::simd::neon

#endif
