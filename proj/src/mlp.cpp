#include "facetrait/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "facetrait/rng.hpp"
#include "facetrait/simd/ops.hpp"

namespace facetrait {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// stable -[t log p + (1-t) log(1-p)] with p = sigmoid(z)
double cross_entropy(double z, double t) {
    return std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
}

void check_arch(const MlpArchitecture& arch) {
    if (arch.hidden_sizes.empty()) throw ContractError("MLP needs at least one hidden layer");
    if (arch.input_dim == 0) throw ContractError("MLP input dimension must be positive");
    for (auto h : arch.hidden_sizes)
        if (h == 0) throw ContractError("hidden layer sizes must be positive");
}

// forward pass storing post-activation values per layer; returns the logit
double forward_stash(const MlpModel& model, const std::vector<double>& x,
                     std::vector<std::vector<double>>& acts) {
    const std::vector<double>* in = &x;
    acts.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        auto& out = acts[l];
        out.resize(layer.rows);
        bool last = l + 1 == model.layers.size();
        for (std::size_t i = 0; i < layer.rows; ++i) {
            double z = layer.b[i] +
                       simd::dot_f64(layer.w.data() + i * layer.cols, in->data(), layer.cols);
            out[i] = last ? z : std::max(z, 0.0);
        }
        in = &out;
    }
    return acts.back()[0];
}

}  // namespace

MlpModel mlp_init(const MlpArchitecture& arch, std::uint64_t seed) {
    check_arch(arch);
    MlpModel model;
    model.arch = arch;
    Rng rng(derive_seed(seed, 0x6d6c70));
    std::size_t in = arch.input_dim;
    std::vector<std::size_t> sizes = arch.hidden_sizes;
    sizes.push_back(1);
    for (std::size_t s : sizes) {
        MlpLayer layer;
        layer.rows = s;
        layer.cols = in;
        layer.w.resize(s * in);
        layer.b.assign(s, 0.0);
        double scale = std::sqrt(2.0 / static_cast<double>(in));
        for (auto& v : layer.w) v = scale * rng.normal();
        model.layers.push_back(std::move(layer));
        in = s;
    }
    return model;
}

std::pair<double, double> mlp_forward(const MlpModel& model, std::span<const float> x) {
    if (x.size() != model.arch.input_dim) throw ContractError("mlp_forward dimension mismatch");
    std::vector<double> xd(x.begin(), x.end());
    std::vector<std::vector<double>> acts;
    double logit = forward_stash(model, xd, acts);
    return {sigmoid(logit), logit};
}

std::pair<double, MlpGradient> mlp_loss_grad(const MlpModel& model,
                                             const EmbeddingDataset& batch) {
    if (batch.empty()) throw ContractError("mlp_loss_grad: empty batch");
    if (batch.dimension() != model.arch.input_dim)
        throw ContractError("mlp_loss_grad dimension mismatch");

    MlpGradient grad;
    for (const auto& layer : model.layers) {
        MlpLayer g;
        g.rows = layer.rows;
        g.cols = layer.cols;
        g.w.assign(layer.w.size(), 0.0);
        g.b.assign(layer.b.size(), 0.0);
        grad.push_back(std::move(g));
    }

    double loss = 0.0;
    double inv_n = 1.0 / static_cast<double>(batch.size());
    std::vector<double> xd(batch.dimension());
    std::vector<std::vector<double>> acts;
    std::vector<double> delta, delta_prev;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        auto x = batch.features(r);
        for (std::size_t j = 0; j < xd.size(); ++j) xd[j] = x[j];
        double logit = forward_stash(model, xd, acts);
        double t = batch.label(r) == GenderLabel::Male ? 1.0 : 0.0;
        loss += cross_entropy(logit, t) * inv_n;

        delta.assign(1, (sigmoid(logit) - t) * inv_n);
        for (std::size_t li = model.layers.size(); li-- > 0;) {
            const auto& layer = model.layers[li];
            auto& g = grad[li];
            const std::vector<double>& below = li == 0 ? xd : acts[li - 1];
            for (std::size_t i = 0; i < layer.rows; ++i) {
                if (delta[i] == 0.0) continue;
                simd::axpy_f64(delta[i], below.data(), g.w.data() + i * layer.cols, layer.cols);
                g.b[i] += delta[i];
            }
            if (li == 0) break;
            // propagate through W then the ReLU mask of the layer below
            delta_prev.assign(layer.cols, 0.0);
            for (std::size_t i = 0; i < layer.rows; ++i)
                if (delta[i] != 0.0)
                    simd::axpy_f64(delta[i], layer.w.data() + i * layer.cols, delta_prev.data(),
                                   layer.cols);
            for (std::size_t j = 0; j < layer.cols; ++j)
                if (acts[li - 1][j] <= 0.0) delta_prev[j] = 0.0;
            std::swap(delta, delta_prev);
        }
    }
    return {loss, std::move(grad)};
}

MlpModel mlp_train(const EmbeddingDataset& data, const MlpArchitecture& arch,
                   const MlpTrainConfig& config, std::vector<double>* loss_trace) {
    if (data.count(GenderLabel::Female) == 0 || data.count(GenderLabel::Male) == 0)
        throw TrainingError("mlp_train: both classes required");
    if (data.dimension() != arch.input_dim)
        throw ContractError("mlp_train: architecture/data dimension mismatch");

    MlpModel model = mlp_init(arch, config.seed);
    std::size_t batch_size = std::min<std::size_t>(std::max<std::size_t>(config.batch_size, 1),
                                                   data.size());

    MlpGradient velocity;
    for (const auto& layer : model.layers) {
        MlpLayer v;
        v.rows = layer.rows;
        v.cols = layer.cols;
        v.w.assign(layer.w.size(), 0.0);
        v.b.assign(layer.b.size(), 0.0);
        velocity.push_back(std::move(v));
    }

    Rng shuffle_rng(derive_seed(config.seed, 0x73687566));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            std::size_t stop = std::min(start + batch_size, order.size());
            EmbeddingDataset batch(data.dimension());
            for (std::size_t i = start; i < stop; ++i) batch.add(data[order[i]]);

            auto [loss, grad] = mlp_loss_grad(model, batch);
            if (!std::isfinite(loss))
                throw TrainingError("mlp_train diverged (loss is not finite); reduce step size");
            epoch_loss += loss;
            ++batches;
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                auto& v = velocity[l];
                auto& layer = model.layers[l];
                for (std::size_t k = 0; k < v.w.size(); ++k) {
                    v.w[k] = config.momentum * v.w[k] - config.step * grad[l].w[k];
                    layer.w[k] += v.w[k];
                }
                for (std::size_t k = 0; k < v.b.size(); ++k) {
                    v.b[k] = config.momentum * v.b[k] - config.step * grad[l].b[k];
                    layer.b[k] += v.b[k];
                }
            }
        }
        if (loss_trace && batches > 0)
            loss_trace->push_back(epoch_loss / static_cast<double>(batches));
    }
    return model;
}

GenderLabel mlp_predict(const MlpModel& model, std::span<const float> x) {
    return mlp_forward(model, x).first > 0.5 ? GenderLabel::Male : GenderLabel::Female;
}

}  // namespace facetrait
