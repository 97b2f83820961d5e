#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "facetrait/types.hpp"

namespace facetrait {

struct MlpArchitecture {
    std::size_t input_dim = 512;
    std::vector<std::size_t> hidden_sizes;  // nonempty; ReLU activations, logistic output
};

// Dense layer, row-major: out = act(W a_in + b), W is rows x cols.
struct MlpLayer {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> w;  // rows*cols
    std::vector<double> b;  // rows
};

struct MlpModel {
    MlpArchitecture arch;
    std::vector<MlpLayer> layers;  // hidden layers + final 1-unit logit layer
};

// Gradient with the same shape as the model's parameters.
using MlpGradient = std::vector<MlpLayer>;

struct MlpTrainConfig {
    double step = 1e-3;
    double momentum = 0.9;
    int epochs = 50;
    std::size_t batch_size = 256;
    std::uint64_t seed = 0;
};

// He-style init: N(0, 2/fan_in) weights, zero biases. Deterministic.
MlpModel mlp_init(const MlpArchitecture& arch, std::uint64_t seed);

// (probability, logit)
std::pair<double, double> mlp_forward(const MlpModel& model, std::span<const float> x);

// Mean binary cross-entropy over the batch and its exact gradient.
std::pair<double, MlpGradient> mlp_loss_grad(const MlpModel& model,
                                             const EmbeddingDataset& batch);

// Mini-batch gradient descent with classical momentum, seeded shuffles.
// loss_trace, when given, receives the mean training loss after each epoch.
MlpModel mlp_train(const EmbeddingDataset& data, const MlpArchitecture& arch,
                   const MlpTrainConfig& config, std::vector<double>* loss_trace = nullptr);

GenderLabel mlp_predict(const MlpModel& model, std::span<const float> x);

}  // namespace facetrait
