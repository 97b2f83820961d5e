#include "facetrait/simd/ops.hpp"

namespace facetrait::simd {

namespace {

using DotF32 = double (*)(const float*, const float*, std::size_t);
using DotF64 = double (*)(const double*, const double*, std::size_t);
using Axpy = void (*)(double, const double*, double*, std::size_t);

struct Backend {
    const char* name;
    DotF32 dot_f32;
    DotF32 sqdist_f32;
    DotF64 dot_f64;
    Axpy axpy_f64;
};

Backend pick_backend() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return {"avx2", &avx2::dot_f32, &avx2::sqdist_f32, &avx2::dot_f64, &avx2::axpy_f64};
#elif defined(__aarch64__)
    return {"neon", &neon::dot_f32, &neon::sqdist_f32, &neon::dot_f64, &neon::axpy_f64};
#endif
    return {"scalar", &scalar::dot_f32, &scalar::sqdist_f32, &scalar::dot_f64,
            &scalar::axpy_f64};
}

const Backend& backend() {
    static const Backend b = pick_backend();
    return b;
}

}  // namespace

double dot_f32(const float* a, const float* b, std::size_t n) {
    return backend().dot_f32(a, b, n);
}
double sqdist_f32(const float* a, const float* b, std::size_t n) {
    return backend().sqdist_f32(a, b, n);
}
double dot_f64(const double* a, const double* b, std::size_t n) {
    return backend().dot_f64(a, b, n);
}
void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
    backend().axpy_f64(alpha, x, y, n);
}
const char* active_backend() { return backend().name; }

}  // namespace facetrait::simd
