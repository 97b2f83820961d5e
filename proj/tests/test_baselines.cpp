#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <vector>

#include "facetrait/baselines.hpp"
#include "facetrait/rng.hpp"

using namespace facetrait;

namespace {

EmbeddingDataset gaussian_1d(std::size_t n_per_class, double mu_f, double mu_m, double sigma,
                             std::uint64_t seed) {
    EmbeddingDataset data(1, "1d");
    Rng rng(seed);
    for (std::size_t i = 0; i < n_per_class; ++i) {
        data.add({{static_cast<float>(mu_f + sigma * rng.normal())}, GenderLabel::Female});
        data.add({{static_cast<float>(mu_m + sigma * rng.normal())}, GenderLabel::Male});
    }
    return data;
}

EmbeddingDataset random_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
    EmbeddingDataset data(dim, "rand");
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<float> row(dim);
        for (auto& x : row) x = static_cast<float>(rng.normal());
        data.add({std::move(row),
                  i % 2 == 0 ? GenderLabel::Female : GenderLabel::Male});
    }
    return data;
}

// Zero crossing of a 1-d score function by bisection.
template <typename F>
double find_threshold(F&& score, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (score(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("logistic gradient matches central finite differences") {
    Rng rng(0x41);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 3 + rng.uniform_index(30);
        std::size_t dim = 1 + rng.uniform_index(6);
        auto data = random_dataset(n, dim, derive_seed(0x42, trial));
        LogRegModel model;
        model.weights.resize(dim);
        for (auto& w : model.weights) w = 0.5 * rng.normal();
        model.bias = 0.5 * rng.normal();
        model.l2_lambda = (trial % 2 == 0) ? 0.0 : 0.01;

        auto [loss, grad] = logreg_loss_grad(model, data);
        REQUIRE(grad.size() == dim + 1);
        const double h = 1e-6;
        double max_rel = 0.0;
        for (std::size_t p = 0; p <= dim; ++p) {
            auto perturbed = [&](double delta) {
                LogRegModel m = model;
                if (p < dim)
                    m.weights[p] += delta;
                else
                    m.bias += delta;
                return logreg_loss_grad(m, data).first;
            };
            double fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
            double rel = std::abs(fd - grad[p]) / std::max(1.0, std::abs(grad[p]));
            max_rel = std::max(max_rel, rel);
        }
        CHECK(max_rel <= 1e-6);
        CHECK(std::isfinite(loss));
    }
}

TEST_CASE("zero model on balanced data has loss ln 2") {
    auto data = random_dataset(40, 4, 0x43);
    LogRegModel model;
    model.weights.assign(4, 0.0);
    auto [loss, grad] = logreg_loss_grad(model, data);
    CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    (void)grad;
}

TEST_CASE("logistic regression separates 1-d blobs") {
    auto data = gaussian_1d(300, -1.0, 1.0, 0.3, 0x44);
    auto model = logreg_train(data, 1e-4);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (logreg_predict(model, data.features(i)) == data.label(i)) ++correct;
    }
    CHECK(double(correct) / double(data.size()) > 0.99);
    CHECK(logreg_score(model, std::vector<float>{2.0f}) > 0.0);
    CHECK(logreg_score(model, std::vector<float>{-2.0f}) < 0.0);
}

TEST_CASE("LDA threshold sits at the midpoint of symmetric blobs") {
    // mu_f = 0, mu_m = 2, equal priors: decision boundary at x = 1.
    auto data = gaussian_1d(20000, 0.0, 2.0, 1.0, 0x45);
    auto model = lda_fit(data);
    double threshold =
        find_threshold([&](double x) { return lda_score(model, std::vector<float>{float(x)}); },
                       -1.0, 3.0);
    CHECK(std::abs(threshold - 1.0) < 1e-3 * 40);  // sample-mean noise at n=20k
    // Against the sample statistics the midpoint recovery is near-exact.
    double mu_f = model.mean_female[0], mu_m = model.mean_male[0];
    CHECK(std::abs(threshold - 0.5 * (mu_f + mu_m)) < 1e-6);  // float-cast probe rounding
}

TEST_CASE("LDA prior shift moves the threshold to 1 + ln(9)/2") {
    // 9:1 Female:Male with unit variance and means 0/2 shifts the boundary to
    // x* = 1 + ln(9)/2 = 2.0986...
    EmbeddingDataset data(1, "shifted");
    Rng rng(0x46);
    for (std::size_t i = 0; i < 45000; ++i) {
        data.add({{static_cast<float>(rng.normal())}, GenderLabel::Female});
    }
    for (std::size_t i = 0; i < 5000; ++i) {
        data.add({{static_cast<float>(2.0 + rng.normal())}, GenderLabel::Male});
    }
    auto model = lda_fit(data);
    double threshold =
        find_threshold([&](double x) { return lda_score(model, std::vector<float>{float(x)}); },
                       0.0, 4.0);
    const double expected = 1.0 + std::log(9.0) / 2.0;
    CHECK(expected == doctest::Approx(2.0986).epsilon(1e-4));
    CHECK(std::abs(threshold - expected) < 0.05);  // sampling noise
    // Exact against the fitted moments:
    double mu_f = model.mean_female[0], mu_m = model.mean_male[0];
    double var = model.chol_lower[0] * model.chol_lower[0];
    double exact = 0.5 * (mu_f + mu_m) + var * std::log(9.0) / (mu_m - mu_f);
    CHECK(std::abs(threshold - exact) < 1e-6);
}

TEST_CASE("LDA handles correlated multivariate data") {
    EmbeddingDataset data(2, "corr");
    Rng rng(0x47);
    for (std::size_t i = 0; i < 4000; ++i) {
        double z1 = rng.normal(), z2 = rng.normal();
        // shared covariance, means (0,0) vs (1,1)
        float a = float(z1), b = float(0.8 * z1 + 0.6 * z2);
        if (i % 2 == 0) {
            data.add({{a, b}, GenderLabel::Female});
        } else {
            data.add({{a + 1.0f, b + 1.0f}, GenderLabel::Male});
        }
    }
    auto model = lda_fit(data);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (lda_predict(model, data.features(i)) == data.label(i)) ++correct;
    }
    // Bayes accuracy for these moments is Phi(sqrt(1.11)/2) ~ 0.70
    CHECK(double(correct) / double(data.size()) > 0.66);
    CHECK(double(correct) / double(data.size()) < 0.74);
}

TEST_CASE("naive Bayes posterior matches the closed form at x=0") {
    // Classes N(0,1) (Female) and N(2,1) (Male), equal priors:
    // P(Male | x=0) = 1 / (1 + e^2).
    GnbModel model;
    model.dimension = 1;
    model.mean[0] = {0.0};
    model.mean[1] = {2.0};
    model.var[0] = {1.0};
    model.var[1] = {1.0};
    model.log_prior[0] = model.log_prior[1] = std::log(0.5);
    double p = gnb_posterior(model, std::vector<float>{0.0f});
    CHECK(std::abs(p - 1.0 / (1.0 + std::exp(2.0))) < 1e-6);
    CHECK(p == doctest::Approx(0.11920292).epsilon(1e-6));
    CHECK(gnb_predict(model, std::vector<float>{0.0f}) == GenderLabel::Female);
    CHECK(gnb_predict(model, std::vector<float>{1.5f}) == GenderLabel::Male);
}

TEST_CASE("gnb_fit recovers sample moments with n-1 variance") {
    EmbeddingDataset data(1, "moments");
    data.add({{0.0f}, GenderLabel::Female});
    data.add({{2.0f}, GenderLabel::Female});
    data.add({{4.0f}, GenderLabel::Male});
    data.add({{8.0f}, GenderLabel::Male});
    auto model = gnb_fit(data);
    CHECK(model.mean[0][0] == doctest::Approx(1.0));
    CHECK(model.mean[1][0] == doctest::Approx(6.0));
    CHECK(model.var[0][0] == doctest::Approx(2.0));  // ((0-1)^2+(2-1)^2)/(2-1)
    CHECK(model.var[1][0] == doctest::Approx(8.0));
    CHECK(model.log_prior[0] == doctest::Approx(std::log(0.5)));
    // constant feature hits the variance floor instead of dividing by zero
    EmbeddingDataset flat(1, "flat");
    flat.add({{1.0f}, GenderLabel::Female});
    flat.add({{1.0f}, GenderLabel::Female});
    flat.add({{2.0f}, GenderLabel::Male});
    flat.add({{2.0f}, GenderLabel::Male});
    auto m2 = gnb_fit(flat);
    CHECK(m2.var[0][0] >= GnbModel::kVarianceFloor);
}

TEST_CASE("KNN predictions match an exhaustive oracle") {
    auto training = std::make_shared<EmbeddingDataset>(random_dataset(300, 5, 0x48));
    Rng rng(0x49);
    for (auto metric : {KnnMetric::Euclidean, KnnMetric::Cosine}) {
        for (auto weighting : {KnnWeighting::Uniform, KnnWeighting::InverseDistance}) {
            for (std::size_t k : {std::size_t(1), std::size_t(7), std::size_t(10)}) {
                auto model = knn_build(training, k, metric, weighting);
                for (int q = 0; q < 120; ++q) {
                    std::vector<float> query(5);
                    for (auto& x : query) x = static_cast<float>(rng.normal());

                    // oracle: full sort by (distance, index), then weighted vote
                    std::vector<std::pair<double, std::size_t>> dist;
                    for (std::size_t i = 0; i < training->size(); ++i) {
                        auto f = training->features(i);
                        double d;
                        if (metric == KnnMetric::Euclidean) {
                            d = 0.0;
                            for (std::size_t j = 0; j < 5; ++j) {
                                d += (double(f[j]) - query[j]) * (double(f[j]) - query[j]);
                            }
                            d = std::sqrt(d);
                        } else {
                            double dot = 0, na = 0, nb = 0;
                            for (std::size_t j = 0; j < 5; ++j) {
                                dot += double(f[j]) * query[j];
                                na += double(f[j]) * f[j];
                                nb += double(query[j]) * query[j];
                            }
                            d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
                        }
                        dist.push_back({d, i});
                    }
                    std::sort(dist.begin(), dist.end());
                    double female = 0, male = 0;
                    for (std::size_t i = 0; i < k; ++i) {
                        double w = weighting == KnnWeighting::Uniform
                                       ? 1.0
                                       : 1.0 / (dist[i].first + KnnModel::kDistanceEpsilon);
                        (training->label(dist[i].second) == GenderLabel::Male ? male : female) +=
                            w;
                    }
                    GenderLabel expected =
                        male > female ? GenderLabel::Male : GenderLabel::Female;

                    auto [got, score] = knn_predict(model, query);
                    CHECK(got == expected);
                    CHECK(score == doctest::Approx(male / (male + female)).epsilon(1e-9));
                }
            }
        }
    }
}

TEST_CASE("cosine KNN is scale invariant, Euclidean is not") {
    auto training = std::make_shared<EmbeddingDataset>(random_dataset(100, 4, 0x4a));
    auto cosine = knn_build(training, 5, KnnMetric::Cosine, KnnWeighting::Uniform);
    Rng rng(0x4b);
    for (int q = 0; q < 50; ++q) {
        std::vector<float> query(4);
        for (auto& x : query) x = static_cast<float>(rng.normal());
        std::vector<float> scaled(query);
        for (auto& x : scaled) x *= 37.5f;
        CHECK(knn_predict(cosine, query).first == knn_predict(cosine, scaled).first);
    }
}

TEST_CASE("k = n reduces to (weighted) majority, ties go Female") {
    EmbeddingDataset data(1, "maj");
    data.add({{0.0f}, GenderLabel::Female});
    data.add({{1.0f}, GenderLabel::Female});
    data.add({{2.0f}, GenderLabel::Male});
    auto training = std::make_shared<EmbeddingDataset>(data);
    auto model = knn_build(training, 3, KnnMetric::Euclidean, KnnWeighting::Uniform);
    CHECK(knn_predict(model, std::vector<float>{5.0f}).first == GenderLabel::Female);

    // exact 1:1 vote -> Female
    EmbeddingDataset pair(1, "tie");
    pair.add({{0.0f}, GenderLabel::Female});
    pair.add({{2.0f}, GenderLabel::Male});
    auto tie = knn_build(std::make_shared<EmbeddingDataset>(pair), 2, KnnMetric::Euclidean,
                         KnnWeighting::Uniform);
    CHECK(knn_predict(tie, std::vector<float>{1.0f}).first == GenderLabel::Female);
}

TEST_CASE("knn_build validates inputs") {
    auto training = std::make_shared<EmbeddingDataset>(random_dataset(10, 3, 0x4c));
    CHECK_THROWS_AS(knn_build(training, 0, KnnMetric::Euclidean, KnnWeighting::Uniform),
                    ContractError);
    CHECK_THROWS_AS(knn_build(training, 11, KnnMetric::Euclidean, KnnWeighting::Uniform),
                    ContractError);
    EmbeddingDataset with_zero(2, "zero");
    with_zero.add({{0.0f, 0.0f}, GenderLabel::Female});
    with_zero.add({{1.0f, 1.0f}, GenderLabel::Male});
    CHECK_THROWS_AS(knn_build(std::make_shared<EmbeddingDataset>(with_zero), 1, KnnMetric::Cosine,
                              KnnWeighting::Uniform),
                    ValidationError);
}
