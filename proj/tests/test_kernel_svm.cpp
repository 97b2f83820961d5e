#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "facetrait/kernel_svm.hpp"
#include "facetrait/rng.hpp"
#include "qp_oracle.hpp"

using namespace facetrait;

namespace {

EmbeddingDataset two_blobs(std::size_t n_per_class, std::size_t dim, double separation,
                           double sigma, std::uint64_t seed) {
    EmbeddingDataset data(dim, "blobs");
    Rng rng(seed);
    for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
        GenderLabel label = (i % 2 == 0) ? GenderLabel::Female : GenderLabel::Male;
        double mean = (label == GenderLabel::Female) ? -separation : separation;
        std::vector<float> row(dim);
        for (auto& x : row) x = static_cast<float>(mean + sigma * rng.normal());
        data.add({std::move(row), label});
    }
    return data;
}

EmbeddingDataset random_problem(std::size_t n, std::size_t dim, Rng& rng) {
    EmbeddingDataset data(dim, "qp");
    bool seen_f = false, seen_m = false;
    for (std::size_t i = 0; i < n; ++i) {
        GenderLabel label;
        if (i == n - 2 && !seen_f) label = GenderLabel::Female;
        else if (i == n - 1 && !seen_m) label = GenderLabel::Male;
        else label = rng.uniform() < 0.5 ? GenderLabel::Female : GenderLabel::Male;
        (label == GenderLabel::Female ? seen_f : seen_m) = true;
        std::vector<float> row(dim);
        for (auto& x : row) x = static_cast<float>(rng.normal());
        data.add({std::move(row), label});
    }
    return data;
}

double model_dual_objective(const SvmModel& model, const EmbeddingDataset& data,
                            const KernelSpec& spec) {
    // Reconstruct full alphas over the dataset by matching records to SVs.
    std::vector<double> alpha(data.size(), 0.0);
    for (std::size_t s = 0; s < model.support_vectors.size(); ++s) {
        for (std::size_t i = 0; i < data.size(); ++i) {
            auto f = data.features(i);
            bool same = true;
            for (std::size_t j = 0; j < f.size(); ++j) {
                if (f[j] != model.support_vectors[s][j]) {
                    same = false;
                    break;
                }
            }
            if (same && alpha[i] == 0.0) {
                alpha[i] = model.alphas[s];
                break;
            }
        }
    }
    double w = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (alpha[i] == 0.0) continue;
        w += alpha[i];
        double yi = data.label(i) == GenderLabel::Male ? 1.0 : -1.0;
        for (std::size_t j = 0; j < data.size(); ++j) {
            if (alpha[j] == 0.0) continue;
            double yj = data.label(j) == GenderLabel::Male ? 1.0 : -1.0;
            w -= 0.5 * alpha[i] * alpha[j] * yi * yj *
                 kernel_eval(spec, data.features(i), data.features(j));
        }
    }
    return w;
}

}  // namespace

TEST_CASE("kernel values match closed forms") {
    std::vector<float> x = {1.0f, 0.0f};
    std::vector<float> y = {0.0f, 1.0f};
    KernelSpec spec;
    spec.scale = 1.0;

    spec.kind = KernelKind::Linear;
    CHECK(kernel_eval(spec, x, y) == doctest::Approx(0.0));
    CHECK(kernel_eval(spec, x, x) == doctest::Approx(1.0));

    spec.kind = KernelKind::Polynomial;
    spec.degree = 2;
    CHECK(kernel_eval(spec, x, x) == doctest::Approx(4.0));  // (1+1)^2
    spec.degree = 3;
    CHECK(kernel_eval(spec, x, x) == doctest::Approx(8.0));

    spec.kind = KernelKind::Gaussian;
    // |x-y|^2 = 2, sigma = sqrt(2): exp(-1)
    spec.scale = std::sqrt(2.0);
    CHECK(kernel_eval(spec, x, y) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(kernel_eval(spec, x, y) == doctest::Approx(0.36787944117144233).epsilon(1e-12));

    // default sigma is sqrt(dimension)
    KernelSpec def;
    CHECK(def.resolved_scale(512) == doctest::Approx(std::sqrt(512.0)));
    CHECK(KernelSpec{KernelKind::Linear, 2, 3.0}.resolved_scale(512) == doctest::Approx(3.0));
}

TEST_CASE("two-point problem recovers the analytic solution") {
    // x1 = -1 (Female), x2 = +1 (Male), linear kernel, sigma 1, C large:
    // symmetric solution alpha1 = alpha2 = 0.5, b = 0.
    EmbeddingDataset data(1, "pair");
    data.add({{-1.0f}, GenderLabel::Female});
    data.add({{1.0f}, GenderLabel::Male});
    KernelSpec spec;
    spec.kind = KernelKind::Linear;
    spec.scale = 1.0;
    SmoParams params;
    params.C = 10.0;
    params.tol = 1e-10;
    params.max_passes = 20;
    auto model = smo_train(data, spec, params);
    REQUIRE(model.alphas.size() == 2);
    CHECK(model.alphas[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(model.alphas[1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(model.bias == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(svm_decision(model, std::vector<float>{2.0f}) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(svm_predict(model, std::vector<float>{0.25f}) == GenderLabel::Male);
    CHECK(svm_predict(model, std::vector<float>{-0.25f}) == GenderLabel::Female);
}

TEST_CASE("SMO invariants: box, equality constraint, retained alphas positive") {
    auto data = two_blobs(40, 6, 0.4, 0.5, 0x31);
    for (auto kind : {KernelKind::Linear, KernelKind::Polynomial, KernelKind::Gaussian}) {
        KernelSpec spec;
        spec.kind = kind;
        SmoParams params;
        params.seed = 7;
        auto model = smo_train(data, spec, params);
        double balance = 0.0;
        for (std::size_t i = 0; i < model.alphas.size(); ++i) {
            CHECK(model.alphas[i] > 0.0);
            CHECK(model.alphas[i] <= model.C + 1e-12);
            balance += model.alphas[i] * model.support_labels[i];
        }
        CHECK(std::abs(balance) < 1e-8);
    }
}

TEST_CASE("SMO matches the projected-gradient QP oracle on small problems") {
    Rng rng(0x32);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t n = 4 + rng.uniform_index(17);   // 4..20
        std::size_t dim = 1 + rng.uniform_index(4);  // 1..4
        auto data = random_problem(n, dim, rng);
        KernelSpec spec;
        switch (trial % 4) {
            case 0: spec.kind = KernelKind::Linear; break;
            case 1: spec.kind = KernelKind::Polynomial; spec.degree = 2; break;
            case 2: spec.kind = KernelKind::Polynomial; spec.degree = 3; break;
            default: spec.kind = KernelKind::Gaussian; break;
        }
        spec.scale = 1.0;

        SmoParams params;
        params.C = 1.0;
        params.tol = 1e-8;
        params.max_passes = 50;
        params.seed = derive_seed(0x33, trial);
        auto model = smo_train(data, spec, params);

        qp_oracle::Problem problem;
        problem.C = params.C;
        problem.K.assign(n, std::vector<double>(n));
        problem.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            problem.y[i] = data.label(i) == GenderLabel::Male ? 1.0 : -1.0;
            for (std::size_t j = 0; j < n; ++j) {
                problem.K[i][j] = kernel_eval(spec, data.features(i), data.features(j));
            }
        }
        auto alpha_star = qp_oracle::solve(problem);
        double oracle_obj = qp_oracle::objective(problem, alpha_star);
        double smo_obj = model_dual_objective(model, data, spec);
        CAPTURE(trial);
        CAPTURE(smo_obj);
        CAPTURE(oracle_obj);
        CHECK(std::abs(smo_obj - oracle_obj) < 1e-6);
        ++checked;
    }
    CHECK(checked == 40);
}

TEST_CASE("Gaussian decisions are translation invariant") {
    auto data = two_blobs(25, 4, 0.5, 0.4, 0x34);
    EmbeddingDataset shifted(4, "shifted");
    const float shift = 3.25f;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<float> row(data.features(i).begin(), data.features(i).end());
        for (auto& x : row) x += shift;
        shifted.add({std::move(row), data.label(i)});
    }
    KernelSpec spec;
    spec.kind = KernelKind::Gaussian;
    SmoParams params;
    params.seed = 3;
    params.tol = 1e-8;
    params.max_passes = 30;
    auto m1 = smo_train(data, spec, params);
    auto m2 = smo_train(shifted, spec, params);
    Rng rng(0x35);
    for (int i = 0; i < 50; ++i) {
        std::vector<float> q(4);
        for (auto& x : q) x = static_cast<float>(rng.normal());
        std::vector<float> q_shifted(q);
        for (auto& x : q_shifted) x += shift;
        // float storage of the shifted inputs perturbs distances at ~1e-7
        CHECK(std::abs(svm_decision(m1, q) - svm_decision(m2, q_shifted)) < 1e-3);
    }
}

TEST_CASE("separable blobs reach high training accuracy with every kernel") {
    auto train = two_blobs(60, 8, 0.6, 0.3, 0x36);
    auto probe = two_blobs(40, 8, 0.6, 0.3, 0x37);
    for (auto kind : {KernelKind::Linear, KernelKind::Polynomial, KernelKind::Gaussian}) {
        KernelSpec spec;
        spec.kind = kind;
        SmoParams params;
        params.seed = 11;
        auto model = smo_train(train, spec, params);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < probe.size(); ++i) {
            if (svm_predict(model, probe.features(i)) == probe.label(i)) ++correct;
        }
        CHECK(double(correct) / double(probe.size()) >= 0.97);
    }
}

TEST_CASE("objective trace is recorded and nondecreasing at the end") {
    auto data = two_blobs(30, 4, 0.5, 0.4, 0x38);
    std::vector<double> trace;
    KernelSpec spec;
    SmoParams params;
    params.objective_trace = &trace;
    auto model = smo_train(data, spec, params);
    REQUIRE(!trace.empty());
    CHECK(trace.back() >= trace.front() - 1e-9);
    CHECK(model.dimension == 4);
}

TEST_CASE("subsampling caps the training set deterministically") {
    auto data = two_blobs(50, 4, 0.6, 0.3, 0x39);
    KernelSpec spec;
    SmoParams params;
    params.subsample = 20;
    params.seed = 5;
    auto m1 = smo_train(data, spec, params);
    auto m2 = smo_train(data, spec, params);
    CHECK(m1.support_vectors.size() <= 20);
    REQUIRE(m1.alphas.size() == m2.alphas.size());
    for (std::size_t i = 0; i < m1.alphas.size(); ++i) {
        CHECK(m1.alphas[i] == m2.alphas[i]);
    }
    CHECK(m1.bias == m2.bias);
}

TEST_CASE("degenerate inputs are rejected") {
    EmbeddingDataset single(2, "single");
    single.add({{1.0f, 2.0f}, GenderLabel::Male});
    KernelSpec spec;
    CHECK_THROWS_AS(smo_train(single, spec, SmoParams{}), TrainingError);
}
