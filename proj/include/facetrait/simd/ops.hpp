#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the kernel SVM, KNN scans, LDA solves
// and the MLP. All kernels accumulate in double regardless of input width.
//
// The scalar reference kernels use the same 16-way striped accumulation and
// the same reduction tree as the vector variants, so every backend produces
// bitwise-identical results and classifier output never depends on the host
// CPU. Equivalence is asserted exactly in tests.

namespace facetrait::simd {

// dot(a,b) over float inputs, double accumulation
double dot_f32(const float* a, const float* b, std::size_t n);
// squared Euclidean distance over float inputs
double sqdist_f32(const float* a, const float* b, std::size_t n);
// dot over double inputs
double dot_f64(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy_f64(double alpha, const double* x, double* y, std::size_t n);

// Active backend name: "avx2", "neon" or "scalar".
const char* active_backend();

namespace scalar {
double dot_f32(const float* a, const float* b, std::size_t n);
double sqdist_f32(const float* a, const float* b, std::size_t n);
double dot_f64(const double* a, const double* b, std::size_t n);
void axpy_f64(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot_f32(const float* a, const float* b, std::size_t n);
double sqdist_f32(const float* a, const float* b, std::size_t n);
double dot_f64(const double* a, const double* b, std::size_t n);
void axpy_f64(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot_f32(const float* a, const float* b, std::size_t n);
double sqdist_f32(const float* a, const float* b, std::size_t n);
double dot_f64(const double* a, const double* b, std::size_t n);
void axpy_f64(double alpha, const double* x, double* y, std::size_t n);
}  // namespace neon
#endif

}  // namespace facetrait::simd
