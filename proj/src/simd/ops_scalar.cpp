#include "facetrait/simd/ops.hpp"

#include <cmath>

// Reference kernels. Stripe the input into 16 independent accumulators
// (element base+k feeds accumulator k within each 16-wide block) and reduce
// with the fixed tree ((s0+s4)+(s8+s12)) per lane, then ((l0+l1)+(l2+l3)).
// Products are fused into the accumulator with fma, matching the vector
// backends' fmadd, so all backends agree bitwise.

namespace facetrait::simd::scalar {

namespace {

// accum(acc, i) folds element i into acc exactly as one vector lane would.
template <typename Accum>
double striped_sum(std::size_t n, Accum accum) {
    double s[16] = {};
    std::size_t blocks = n / 16;
    for (std::size_t b = 0; b < blocks; ++b) {
        std::size_t base = b * 16;
        for (std::size_t k = 0; k < 16; ++k) s[k] = accum(s[k], base + k);
    }
    double lane[4];
    for (std::size_t j = 0; j < 4; ++j)
        lane[j] = (s[0 + j] + s[4 + j]) + (s[8 + j] + s[12 + j]);
    double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (std::size_t i = blocks * 16; i < n; ++i) total = accum(total, i);
    return total;
}

}  // namespace

double dot_f32(const float* a, const float* b, std::size_t n) {
    return striped_sum(n, [&](double acc, std::size_t i) {
        return std::fma(static_cast<double>(a[i]), static_cast<double>(b[i]), acc);
    });
}

double sqdist_f32(const float* a, const float* b, std::size_t n) {
    return striped_sum(n, [&](double acc, std::size_t i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        return std::fma(d, d, acc);
    });
}

double dot_f64(const double* a, const double* b, std::size_t n) {
    return striped_sum(n, [&](double acc, std::size_t i) { return std::fma(a[i], b[i], acc); });
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

}  // namespace facetrait::simd::scalar
