#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "facetrait/types.hpp"

namespace facetrait {

// ---- logistic regression ----

struct LogRegModel {
    std::vector<double> weights;
    double bias = 0.0;
    double l2_lambda = 0.0;
};

struct LogRegConfig {
    double step = 1.0;        // initial line-search step
    int epochs = 500;
    double grad_tol = 1e-6;   // infinity-norm stop
    std::uint64_t seed = 0;
};

// Mean cross-entropy + (lambda/2)|w|^2 (bias unregularized) and its exact
// gradient over (weights..., bias).
std::pair<double, std::vector<double>> logreg_loss_grad(const LogRegModel& model,
                                                        const EmbeddingDataset& data);

LogRegModel logreg_train(const EmbeddingDataset& data, double lambda,
                         const LogRegConfig& config = {});

double logreg_score(const LogRegModel& model, std::span<const float> x);  // logit, >0 = Male
GenderLabel logreg_predict(const LogRegModel& model, std::span<const float> x);

// ---- linear discriminant (full pooled covariance) ----

struct LdaModel {
    std::vector<double> mean_female;
    std::vector<double> mean_male;
    std::vector<double> chol_lower;  // d*d row-major Cholesky factor of the pooled covariance
    double log_prior_female = 0.0;
    double log_prior_male = 0.0;
    std::size_t dimension = 0;
    // cached discriminant: score(x) = beta.x + offset
    std::vector<double> beta;
    double offset = 0.0;
};

LdaModel lda_fit(const EmbeddingDataset& data);
double lda_score(const LdaModel& model, std::span<const float> x);  // log posterior odds Male:Female
GenderLabel lda_predict(const LdaModel& model, std::span<const float> x);

// ---- Gaussian naive Bayes ----

struct GnbModel {
    std::vector<double> mean[2];  // indexed by GenderLabel
    std::vector<double> var[2];   // floored at kVarianceFloor
    double log_prior[2] = {0.0, 0.0};
    std::size_t dimension = 0;

    static constexpr double kVarianceFloor = 1e-9;
};

GnbModel gnb_fit(const EmbeddingDataset& data);
double gnb_posterior(const GnbModel& model, std::span<const float> x);  // P(Male | x)
GenderLabel gnb_predict(const GnbModel& model, std::span<const float> x);

// ---- k-nearest neighbors ----

enum class KnnMetric : std::uint8_t { Euclidean = 0, Cosine = 1 };
enum class KnnWeighting : std::uint8_t { Uniform = 0, InverseDistance = 1 };

struct KnnModel {
    std::shared_ptr<const EmbeddingDataset> training;
    std::size_t k = 1;
    KnnMetric metric = KnnMetric::Euclidean;
    KnnWeighting weighting = KnnWeighting::Uniform;
    std::vector<double> training_norms;  // cached for Cosine

    static constexpr double kDistanceEpsilon = 1e-12;
};

KnnModel knn_build(std::shared_ptr<const EmbeddingDataset> training, std::size_t k,
                   KnnMetric metric, KnnWeighting weighting);

// Label plus the Male weight fraction among the k voters. Distance ties break
// by training-set order, vote ties by Female.
std::pair<GenderLabel, double> knn_predict(const KnnModel& model, std::span<const float> x);

}  // namespace facetrait
