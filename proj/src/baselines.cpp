#include "facetrait/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

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

void require_both_classes(const EmbeddingDataset& data, const char* who) {
    if (data.empty()) throw TrainingError(std::string(who) + ": empty dataset");
    if (data.count(GenderLabel::Female) == 0 || data.count(GenderLabel::Male) == 0)
        throw TrainingError(std::string(who) + ": both classes required");
}

double logit_at(const LogRegModel& model, std::span<const float> x) {
    double z = model.bias;
    for (std::size_t j = 0; j < x.size(); ++j) z += model.weights[j] * x[j];
    return z;
}

}  // namespace

// ---- logistic regression ----

std::pair<double, std::vector<double>> logreg_loss_grad(const LogRegModel& model,
                                                        const EmbeddingDataset& data) {
    if (data.empty()) throw ContractError("logreg_loss_grad: empty dataset");
    std::size_t d = data.dimension();
    if (model.weights.size() != d) throw ContractError("logreg model/data dimension mismatch");

    double loss = 0.0;
    std::vector<double> grad(d + 1, 0.0);
    double inv_n = 1.0 / static_cast<double>(data.size());
    std::vector<double> xd(d);
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto x = data.features(i);
        for (std::size_t j = 0; j < d; ++j) xd[j] = x[j];
        double z = model.bias + simd::dot_f64(model.weights.data(), xd.data(), d);
        double t = data.label(i) == GenderLabel::Male ? 1.0 : 0.0;
        loss += cross_entropy(z, t) * inv_n;
        double r = (sigmoid(z) - t) * inv_n;
        simd::axpy_f64(r, xd.data(), grad.data(), d);
        grad[d] += r;
    }
    double w2 = simd::dot_f64(model.weights.data(), model.weights.data(), d);
    loss += 0.5 * model.l2_lambda * w2;
    simd::axpy_f64(model.l2_lambda, model.weights.data(), grad.data(), d);
    return {loss, std::move(grad)};
}

LogRegModel logreg_train(const EmbeddingDataset& data, double lambda,
                         const LogRegConfig& config) {
    require_both_classes(data, "logreg_train");
    std::size_t d = data.dimension();
    LogRegModel model;
    model.weights.assign(d, 0.0);
    model.l2_lambda = lambda;

    auto [loss, grad] = logreg_loss_grad(model, data);
    double step = config.step;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax <= config.grad_tol) break;
        double g2 = simd::dot_f64(grad.data(), grad.data(), grad.size());

        // backtracking with Armijo condition; step carries over and regrows
        LogRegModel trial = model;
        double trial_loss;
        while (true) {
            trial.weights = model.weights;
            simd::axpy_f64(-step, grad.data(), trial.weights.data(), d);
            trial.bias = model.bias - step * grad[d];
            trial_loss = logreg_loss_grad(trial, data).first;
            if (trial_loss <= loss - 0.5 * step * g2 || step < 1e-16) break;
            step *= 0.5;
        }
        model = trial;
        std::tie(loss, grad) = logreg_loss_grad(model, data);
        step *= 2.0;
    }
    return model;
}

double logreg_score(const LogRegModel& model, std::span<const float> x) {
    if (x.size() != model.weights.size()) throw ContractError("logreg dimension mismatch");
    return logit_at(model, x);
}

GenderLabel logreg_predict(const LogRegModel& model, std::span<const float> x) {
    return logreg_score(model, x) > 0.0 ? GenderLabel::Male : GenderLabel::Female;
}

// ---- linear discriminant ----

namespace {

// in-place lower Cholesky of a row-major d*d matrix
void cholesky(std::vector<double>& a, std::size_t d) {
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * d + j] -
                       simd::dot_f64(a.data() + i * d, a.data() + j * d, j);
            if (i == j) {
                if (s <= 0.0) throw NumericError("pooled covariance not positive definite");
                a[i * d + j] = std::sqrt(s);
            } else {
                a[i * d + j] = s / a[j * d + j];
            }
        }
        for (std::size_t j = i + 1; j < d; ++j) a[i * d + j] = 0.0;
    }
}

// solve (L L^T) x = b
std::vector<double> chol_solve(const std::vector<double>& l, std::size_t d,
                               std::vector<double> b) {
    for (std::size_t i = 0; i < d; ++i)
        b[i] = (b[i] - simd::dot_f64(l.data() + i * d, b.data(), i)) / l[i * d + i];
    for (std::size_t ii = d; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < d; ++j) s -= l[j * d + ii] * b[j];
        b[ii] = s / l[ii * d + ii];
    }
    return b;
}

}  // namespace

LdaModel lda_fit(const EmbeddingDataset& data) {
    std::size_t n[2] = {data.count(GenderLabel::Female), data.count(GenderLabel::Male)};
    if (n[0] < 2 || n[1] < 2)
        throw TrainingError("lda_fit: each class needs at least 2 records");
    std::size_t d = data.dimension();

    std::vector<double> mean[2] = {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto x = data.features(i);
        auto& m = mean[static_cast<int>(data.label(i))];
        for (std::size_t j = 0; j < d; ++j) m[j] += x[j];
    }
    for (int c = 0; c < 2; ++c)
        for (auto& v : mean[c]) v /= static_cast<double>(n[c]);

    // within-class scatter / (n - 2), upper triangle then mirrored
    std::vector<double> cov(d * d, 0.0);
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto x = data.features(i);
        const auto& m = mean[static_cast<int>(data.label(i))];
        for (std::size_t j = 0; j < d; ++j) centered[j] = x[j] - m[j];
        for (std::size_t j = 0; j < d; ++j)
            simd::axpy_f64(centered[j], centered.data() + j, cov.data() + j * d + j, d - j);
    }
    double denom = static_cast<double>(data.size() - 2);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j; k < d; ++k) {
            cov[j * d + k] /= denom;
            cov[k * d + j] = cov[j * d + k];
        }
    double trace = 0.0;
    for (std::size_t j = 0; j < d; ++j) trace += cov[j * d + j];
    double ridge = 1e-6 * trace / static_cast<double>(d);
    if (ridge <= 0.0) ridge = 1e-12;
    for (std::size_t j = 0; j < d; ++j) cov[j * d + j] += ridge;

    cholesky(cov, d);

    LdaModel model;
    model.dimension = d;
    model.mean_female = mean[0];
    model.mean_male = mean[1];
    double total = static_cast<double>(data.size());
    model.log_prior_female = std::log(static_cast<double>(n[0]) / total);
    model.log_prior_male = std::log(static_cast<double>(n[1]) / total);
    model.chol_lower = cov;

    std::vector<double> diff(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = mean[1][j] - mean[0][j];
    model.beta = chol_solve(model.chol_lower, d, std::move(diff));
    std::vector<double> mid(d);
    for (std::size_t j = 0; j < d; ++j) mid[j] = 0.5 * (mean[0][j] + mean[1][j]);
    model.offset = -simd::dot_f64(model.beta.data(), mid.data(), d) + model.log_prior_male -
                   model.log_prior_female;
    return model;
}

double lda_score(const LdaModel& model, std::span<const float> x) {
    if (x.size() != model.dimension) throw ContractError("lda_score dimension mismatch");
    double s = model.offset;
    for (std::size_t j = 0; j < x.size(); ++j) s += model.beta[j] * x[j];
    return s;
}

GenderLabel lda_predict(const LdaModel& model, std::span<const float> x) {
    return lda_score(model, x) > 0.0 ? GenderLabel::Male : GenderLabel::Female;
}

// ---- Gaussian naive Bayes ----

GnbModel gnb_fit(const EmbeddingDataset& data) {
    std::size_t n[2] = {data.count(GenderLabel::Female), data.count(GenderLabel::Male)};
    if (n[0] < 2 || n[1] < 2)
        throw TrainingError("gnb_fit: each class needs at least 2 records");
    std::size_t d = data.dimension();

    GnbModel model;
    model.dimension = d;
    for (int c = 0; c < 2; ++c) {
        model.mean[c].assign(d, 0.0);
        model.var[c].assign(d, 0.0);
        model.log_prior[c] =
            std::log(static_cast<double>(n[c]) / static_cast<double>(data.size()));
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto x = data.features(i);
        auto& m = model.mean[static_cast<int>(data.label(i))];
        for (std::size_t j = 0; j < d; ++j) m[j] += x[j];
    }
    for (int c = 0; c < 2; ++c)
        for (auto& v : model.mean[c]) v /= static_cast<double>(n[c]);
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto x = data.features(i);
        int c = static_cast<int>(data.label(i));
        for (std::size_t j = 0; j < d; ++j) {
            double dev = x[j] - model.mean[c][j];
            model.var[c][j] += dev * dev;
        }
    }
    for (int c = 0; c < 2; ++c)
        for (auto& v : model.var[c])
            v = std::max(v / static_cast<double>(n[c] - 1), GnbModel::kVarianceFloor);
    return model;
}

double gnb_posterior(const GnbModel& model, std::span<const float> x) {
    if (x.size() != model.dimension) throw ContractError("gnb_posterior dimension mismatch");
    double log_joint[2];
    for (int c = 0; c < 2; ++c) {
        double lj = model.log_prior[c];
        for (std::size_t j = 0; j < x.size(); ++j) {
            double dev = x[j] - model.mean[c][j];
            lj -= 0.5 * (dev * dev / model.var[c][j] +
                         std::log(2.0 * std::numbers::pi * model.var[c][j]));
        }
        log_joint[c] = lj;
    }
    double m = std::max(log_joint[0], log_joint[1]);
    double pf = std::exp(log_joint[0] - m);
    double pm = std::exp(log_joint[1] - m);
    return pm / (pf + pm);
}

GenderLabel gnb_predict(const GnbModel& model, std::span<const float> x) {
    return gnb_posterior(model, x) > 0.5 ? GenderLabel::Male : GenderLabel::Female;
}

// ---- k-nearest neighbors ----

KnnModel knn_build(std::shared_ptr<const EmbeddingDataset> training, std::size_t k,
                   KnnMetric metric, KnnWeighting weighting) {
    if (!training || training->empty()) throw TrainingError("knn_build: empty training set");
    if (k < 1 || k > training->size())
        throw ContractError("knn_build: k must lie in [1, training size]");
    KnnModel model;
    model.training = std::move(training);
    model.k = k;
    model.metric = metric;
    model.weighting = weighting;
    if (metric == KnnMetric::Cosine) {
        model.training_norms.reserve(model.training->size());
        for (std::size_t i = 0; i < model.training->size(); ++i) {
            auto t = model.training->features(i);
            double norm = std::sqrt(simd::dot_f32(t.data(), t.data(), t.size()));
            if (norm == 0.0)
                throw ValidationError("zero-norm training vector at index " + std::to_string(i) +
                                      " under cosine metric");
            model.training_norms.push_back(norm);
        }
    }
    return model;
}

std::pair<GenderLabel, double> knn_predict(const KnnModel& model, std::span<const float> x) {
    const auto& train = *model.training;
    if (x.size() != train.dimension()) throw ContractError("knn_predict dimension mismatch");

    double xnorm = 0.0;
    if (model.metric == KnnMetric::Cosine) {
        xnorm = std::sqrt(simd::dot_f32(x.data(), x.data(), x.size()));
        if (xnorm == 0.0) throw ValidationError("zero-norm query under cosine metric");
    }

    std::vector<std::pair<double, std::size_t>> dist(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        auto t = train.features(i);
        double d;
        if (model.metric == KnnMetric::Euclidean) {
            d = std::sqrt(simd::sqdist_f32(x.data(), t.data(), x.size()));
        } else {
            d = 1.0 - simd::dot_f32(x.data(), t.data(), x.size()) /
                          (xnorm * model.training_norms[i]);
        }
        dist[i] = {d, i};
    }
    // (distance, index) order makes distance ties deterministic
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(model.k),
                      dist.end());

    double weight[2] = {0.0, 0.0};
    for (std::size_t r = 0; r < model.k; ++r) {
        auto [d, i] = dist[r];
        double w = model.weighting == KnnWeighting::Uniform
                       ? 1.0
                       : 1.0 / (d + KnnModel::kDistanceEpsilon);
        weight[static_cast<int>(train.label(i))] += w;
    }
    double total = weight[0] + weight[1];
    double male_fraction = total > 0.0 ? weight[1] / total : 0.0;
    GenderLabel label =
        weight[1] > weight[0] ? GenderLabel::Male : GenderLabel::Female;  // tie -> Female
    return {label, male_fraction};
}

}  // namespace facetrait
