#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "facetrait/types.hpp"

namespace facetrait {

enum class KernelKind : std::uint8_t { Linear = 0, Polynomial = 1, Gaussian = 2 };

// Single-scale kernels:
//   Linear      x.y / sigma^2
//   Polynomial  (1 + x.y / sigma^2)^degree
//   Gaussian    exp(-|x-y|^2 / sigma^2)
// Default sigma = sqrt(d) keeps dot products O(1) for unnormalized features.
struct KernelSpec {
    KernelKind kind = KernelKind::Gaussian;
    int degree = 2;       // Polynomial only, 2 or 3
    double scale = 0.0;   // sigma; 0 means "use sqrt(dimension)" at train time

    double resolved_scale(std::size_t dimension) const;
};

double kernel_eval(const KernelSpec& spec, std::span<const float> x, std::span<const float> y);

struct SmoParams {
    double C = 1.0;
    double tol = 1e-3;          // KKT tolerance
    int max_passes = 10;        // consecutive full sweeps without an update
    std::size_t cache_bytes = 256 << 20;  // kernel-row LRU budget
    std::uint64_t seed = 0;
    std::size_t subsample = 0;  // 0 = use the full training set
    std::vector<double>* objective_trace = nullptr;  // optional per-sweep dual objective
};

// Dual solution; only records with alpha > 0 are retained.
// Signed labels: Female -> -1, Male -> +1.
struct SvmModel {
    std::vector<std::vector<float>> support_vectors;
    std::vector<double> support_labels;  // +-1
    std::vector<double> alphas;
    double bias = 0.0;
    double C = 1.0;
    KernelSpec kernel;
    std::size_t dimension = 0;
};

SvmModel smo_train(const EmbeddingDataset& data, KernelSpec spec, const SmoParams& params);

// f(x) = sum_i alpha_i y_i K(x_i, x) + b
double svm_decision(const SvmModel& model, std::span<const float> x);

// Male if f(x) > 0, Female otherwise (ties go to Female).
GenderLabel svm_predict(const SvmModel& model, std::span<const float> x);

}  // namespace facetrait
