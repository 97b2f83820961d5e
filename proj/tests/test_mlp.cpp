#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "facetrait/mlp.hpp"
#include "facetrait/rng.hpp"

using namespace facetrait;

namespace {

EmbeddingDataset random_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
    EmbeddingDataset data(dim, "rand");
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<float> row(dim);
        for (auto& x : row) x = static_cast<float>(rng.normal());
        data.add({std::move(row), i % 2 == 0 ? GenderLabel::Female : GenderLabel::Male});
    }
    return data;
}

EmbeddingDataset blobs(std::size_t n, std::size_t dim, std::uint64_t seed) {
    EmbeddingDataset data(dim, "blobs");
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        GenderLabel label = i % 2 == 0 ? GenderLabel::Female : GenderLabel::Male;
        double mean = label == GenderLabel::Female ? -1.0 : 1.0;
        std::vector<float> row(dim);
        for (auto& x : row) x = static_cast<float>(mean + 0.4 * rng.normal());
        data.add({std::move(row), label});
    }
    return data;
}

// Smallest |pre-activation| over all hidden units and samples; finite
// differences are invalid within h of a ReLU kink.
double min_hidden_preactivation(const MlpModel& model, const EmbeddingDataset& batch) {
    double closest = 1e300;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        auto x = batch.features(r);
        std::vector<double> in(x.begin(), x.end());
        for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
            const auto& layer = model.layers[l];
            std::vector<double> out(layer.rows);
            for (std::size_t i = 0; i < layer.rows; ++i) {
                double z = layer.b[i];
                for (std::size_t j = 0; j < layer.cols; ++j) z += layer.w[i * layer.cols + j] * in[j];
                closest = std::min(closest, std::abs(z));
                out[i] = std::max(z, 0.0);
            }
            in = std::move(out);
        }
    }
    return closest;
}

}  // namespace

TEST_CASE("forward pass reproduces hand-computed logits") {
    // one hidden unit: h = relu(2x + 1), logit = 0.5h - 1
    MlpModel model;
    model.arch.input_dim = 1;
    model.arch.hidden_sizes = {1};
    model.layers.resize(2);
    model.layers[0] = {1, 1, {2.0}, {1.0}};
    model.layers[1] = {1, 1, {0.5}, {-1.0}};

    auto [p1, z1] = mlp_forward(model, std::vector<float>{1.0f});  // h=3, z=0.5
    CHECK(z1 == doctest::Approx(0.5));
    CHECK(p1 == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))));

    auto [p2, z2] = mlp_forward(model, std::vector<float>{-2.0f});  // relu(-3)=0, z=-1
    CHECK(z2 == doctest::Approx(-1.0));
    CHECK(p2 == doctest::Approx(1.0 / (1.0 + std::exp(1.0))));

    // sigma(1) spot value
    model.layers[1] = {1, 1, {0.5}, {-0.5}};  // x=1 -> z=1
    CHECK(mlp_forward(model, std::vector<float>{1.0f}).first ==
          doctest::Approx(0.7310585786).epsilon(1e-9));
}

TEST_CASE("analytic gradient matches central finite differences over 20+ seeds") {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 40 && checked < 24; ++seed) {
        Rng rng(derive_seed(0x61, seed));
        std::size_t dim = 1 + rng.uniform_index(4);
        std::vector<std::size_t> hidden;
        std::size_t layers = 1 + rng.uniform_index(2);
        for (std::size_t l = 0; l < layers; ++l) hidden.push_back(1 + rng.uniform_index(4));

        MlpArchitecture arch;
        arch.input_dim = dim;
        arch.hidden_sizes = hidden;
        auto model = mlp_init(arch, seed);
        auto batch = random_dataset(3 + rng.uniform_index(6), dim, derive_seed(0x62, seed));
        // Central differences are meaningless across a ReLU kink; only
        // batches whose hidden pre-activations sit clear of zero qualify.
        if (min_hidden_preactivation(model, batch) < 1e-3) continue;
        ++checked;

        auto [loss, grad] = mlp_loss_grad(model, batch);
        REQUIRE(grad.size() == model.layers.size());
        CHECK(std::isfinite(loss));

        const double h = 1e-6;
        double max_rel = 0.0;
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            for (std::size_t widx = 0; widx < model.layers[l].w.size() + model.layers[l].b.size();
                 ++widx) {
                auto poke = [&](double delta) {
                    MlpModel m = model;
                    if (widx < m.layers[l].w.size())
                        m.layers[l].w[widx] += delta;
                    else
                        m.layers[l].b[widx - m.layers[l].w.size()] += delta;
                    return mlp_loss_grad(m, batch).first;
                };
                double fd = (poke(h) - poke(-h)) / (2.0 * h);
                double analytic = widx < grad[l].w.size()
                                      ? grad[l].w[widx]
                                      : grad[l].b[widx - grad[l].w.size()];
                double rel = std::abs(fd - analytic) / std::max(1.0, std::abs(analytic));
                max_rel = std::max(max_rel, rel);
            }
        }
        CHECK(max_rel <= 1e-5);
    }
    CHECK(checked >= 20);
}

TEST_CASE("zero output layer on balanced data gives loss ln 2") {
    MlpArchitecture arch;
    arch.input_dim = 3;
    arch.hidden_sizes = {4};
    auto model = mlp_init(arch, 5);
    auto& out = model.layers.back();
    std::fill(out.w.begin(), out.w.end(), 0.0);
    std::fill(out.b.begin(), out.b.end(), 0.0);
    auto batch = random_dataset(40, 3, 0x63);
    CHECK(mlp_loss_grad(model, batch).first == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("init is seeded He-style and epochs=0 returns the init") {
    MlpArchitecture arch;
    arch.input_dim = 8;
    arch.hidden_sizes = {16};
    auto a = mlp_init(arch, 9);
    auto b = mlp_init(arch, 9);
    auto c = mlp_init(arch, 10);
    CHECK(a.layers[0].w == b.layers[0].w);
    CHECK(a.layers[0].w != c.layers[0].w);
    for (double bias : a.layers[0].b) CHECK(bias == 0.0);

    double ss = 0.0;
    for (double w : a.layers[0].w) ss += w * w;
    double var = ss / double(a.layers[0].w.size());
    CHECK(var == doctest::Approx(2.0 / 8.0).epsilon(0.5));  // He variance, loose sampling band

    MlpTrainConfig config;
    config.epochs = 0;
    config.seed = 9;
    auto data = random_dataset(20, 8, 0x64);
    auto trained = mlp_train(data, arch, config);
    CHECK(trained.layers[0].w == a.layers[0].w);
    CHECK(trained.layers[1].w == a.layers[1].w);
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
    auto data = blobs(120, 6, 0x65);
    MlpArchitecture arch;
    arch.input_dim = 6;
    arch.hidden_sizes = {8, 4};
    MlpTrainConfig config;
    config.epochs = 5;
    config.seed = 123;
    std::vector<double> trace1, trace2;
    auto m1 = mlp_train(data, arch, config, &trace1);
    auto m2 = mlp_train(data, arch, config, &trace2);
    REQUIRE(trace1.size() == 5);
    CHECK(trace1 == trace2);
    for (std::size_t l = 0; l < m1.layers.size(); ++l) {
        CHECK(m1.layers[l].w == m2.layers[l].w);
        CHECK(m1.layers[l].b == m2.layers[l].b);
    }
}

TEST_CASE("training loss decreases and blobs are separated") {
    auto data = blobs(240, 6, 0x66);
    MlpArchitecture arch;
    arch.input_dim = 6;
    arch.hidden_sizes = {10};
    MlpTrainConfig config;
    config.epochs = 40;
    config.seed = 3;
    std::vector<double> trace;
    auto model = mlp_train(data, arch, config, &trace);
    REQUIRE(trace.size() == 40);
    CHECK(trace.back() < trace.front());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (mlp_predict(model, data.features(i)) == data.label(i)) ++correct;
    }
    CHECK(double(correct) / double(data.size()) > 0.95);
}

TEST_CASE("invalid architectures and dimension mismatches are rejected") {
    MlpArchitecture empty;
    empty.input_dim = 4;
    CHECK_THROWS_AS(mlp_init(empty, 0), Error);
    MlpArchitecture arch;
    arch.input_dim = 4;
    arch.hidden_sizes = {3};
    auto model = mlp_init(arch, 0);
    CHECK_THROWS_AS(mlp_forward(model, std::vector<float>{1.0f}), ContractError);
}
