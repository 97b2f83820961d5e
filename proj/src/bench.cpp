#include "facetrait/bench.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "facetrait/baselines.hpp"
#include "facetrait/kernel_svm.hpp"
#include "facetrait/mlp.hpp"
#include "facetrait/rng.hpp"
#include "facetrait/trees.hpp"

namespace facetrait {

namespace {

AnyModel train_svm(const EmbeddingDataset& data, const BenchOptions& opt, KernelKind kind,
                   int degree) {
    KernelSpec kernel;
    kernel.kind = kind;
    kernel.degree = degree;
    SmoParams params;
    params.seed = derive_seed(opt.seed, 101);
    params.subsample = opt.svm_subsample;
    return smo_train(data, kernel, params);
}

AnyModel train_knn(const EmbeddingDataset& data, KnnMetric metric, std::size_t k, bool weighted) {
    return knn_build(std::make_shared<EmbeddingDataset>(data), k, metric,
                     weighted ? KnnWeighting::InverseDistance : KnnWeighting::Uniform);
}

AnyModel train_mlp(const EmbeddingDataset& data, const BenchOptions& opt,
                   std::vector<std::size_t> hidden, int epochs) {
    MlpArchitecture arch;
    arch.input_dim = data.dimension();
    arch.hidden_sizes = std::move(hidden);
    MlpTrainConfig config;
    config.epochs = epochs;
    config.seed = derive_seed(opt.seed, 202);
    return mlp_train(data, arch, config);
}

AnyModel train_ensemble(const EmbeddingDataset& data, const BenchOptions& opt, EnsembleKind kind) {
    const std::size_t learners = 30;
    const std::uint64_t seed = derive_seed(opt.seed, 303);
    switch (kind) {
        case EnsembleKind::Bagging:
            return bagging_train(data, learners, 100, seed);
        case EnsembleKind::AdaBoost:
            return adaboost_train(data, learners, 20, 0.1, seed);
        case EnsembleKind::RusBoost:
            return rusboost_train(data, learners, 20, 0.1, seed);
        case EnsembleKind::SubspaceDiscriminant:
            return subspace_discriminant_train(data, learners, data.dimension() / 2, seed);
    }
    throw ContractError("unknown ensemble kind");
}

AnyModel train_tree(const EmbeddingDataset& data, std::size_t max_splits) {
    std::vector<double> weights(data.size(), 1.0);
    return tree_train(data, weights, max_splits);
}

std::string csv_field(const std::string& value) {
    if (value.find(',') == std::string::npos && value.find('"') == std::string::npos) {
        return value;
    }
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string sanitize_error(std::string message) {
    for (char& c : message) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return message;
}

}  // namespace

std::vector<BenchEntry> benchmark_suite() {
    std::vector<BenchEntry> suite;
    auto add = [&suite](std::string model, std::string settings, auto&& fn) {
        suite.push_back({std::move(model), std::move(settings), std::forward<decltype(fn)>(fn)});
    };

    add("SVM", "Kernel: Gaussian", [](const EmbeddingDataset& d, const BenchOptions& o) {
        return train_svm(d, o, KernelKind::Gaussian, 0);
    });
    add("SVM", "Kernel: Quadratic", [](const EmbeddingDataset& d, const BenchOptions& o) {
        return train_svm(d, o, KernelKind::Polynomial, 2);
    });
    add("SVM", "Kernel: Cubic", [](const EmbeddingDataset& d, const BenchOptions& o) {
        return train_svm(d, o, KernelKind::Polynomial, 3);
    });
    add("SVM", "Kernel: Linear", [](const EmbeddingDataset& d, const BenchOptions& o) {
        return train_svm(d, o, KernelKind::Linear, 0);
    });

    add("Logistic Regression", "-", [](const EmbeddingDataset& d, const BenchOptions& o) {
        LogRegConfig config;
        config.seed = derive_seed(o.seed, 404);
        return logreg_train(d, 1e-4, config);
    });

    add("Linear Discriminant", "Covariance Structure: Full",
        [](const EmbeddingDataset& d, const BenchOptions&) { return lda_fit(d); });

    add("KNN", "Cosine Distance K=1", [](const EmbeddingDataset& d, const BenchOptions&) {
        return train_knn(d, KnnMetric::Cosine, 1, false);
    });
    add("KNN", "Euc. Distance Weighted K=10", [](const EmbeddingDataset& d, const BenchOptions&) {
        return train_knn(d, KnnMetric::Euclidean, 10, true);
    });
    add("KNN", "Euc. Distance K=10", [](const EmbeddingDataset& d, const BenchOptions&) {
        return train_knn(d, KnnMetric::Euclidean, 10, false);
    });
    add("KNN", "Euc. Distance K=100", [](const EmbeddingDataset& d, const BenchOptions&) {
        return train_knn(d, KnnMetric::Euclidean, 100, false);
    });

    add("MLP", "Hidden Layers: 1 Neurons: 1000",
        [](const EmbeddingDataset& d, const BenchOptions& o) { return train_mlp(d, o, {1000}, 5); });
    add("MLP", "Hidden Layers: 3 Neurons: {10,10,10}",
        [](const EmbeddingDataset& d, const BenchOptions& o) {
            return train_mlp(d, o, {10, 10, 10}, 40);
        });
    add("MLP", "Hidden Layers: 1 Neurons: 10",
        [](const EmbeddingDataset& d, const BenchOptions& o) { return train_mlp(d, o, {10}, 40); });
    add("MLP", "Hidden Layers: 2 Neurons: {10,10}",
        [](const EmbeddingDataset& d, const BenchOptions& o) {
            return train_mlp(d, o, {10, 10}, 40);
        });
    add("MLP", "Hidden Layers: 1 Neurons: 100",
        [](const EmbeddingDataset& d, const BenchOptions& o) { return train_mlp(d, o, {100}, 25); });

    add("Ensembles", "Subspace Discriminant", [](const EmbeddingDataset& d, const BenchOptions& o) {
        return train_ensemble(d, o, EnsembleKind::SubspaceDiscriminant);
    });
    add("Ensembles", "Bagged Trees", [](const EmbeddingDataset& d, const BenchOptions& o) {
        return train_ensemble(d, o, EnsembleKind::Bagging);
    });
    add("Ensembles", "Boosted Trees", [](const EmbeddingDataset& d, const BenchOptions& o) {
        return train_ensemble(d, o, EnsembleKind::AdaBoost);
    });
    add("Ensembles", "RUSBoosted Trees", [](const EmbeddingDataset& d, const BenchOptions& o) {
        return train_ensemble(d, o, EnsembleKind::RusBoost);
    });

    add("Naive Bayes", "Gaussian",
        [](const EmbeddingDataset& d, const BenchOptions&) { return gnb_fit(d); });

    add("Decision Tree", "Max # of Splits: 100",
        [](const EmbeddingDataset& d, const BenchOptions&) { return train_tree(d, 100); });
    add("Decision Tree", "Max # of Splits: 20",
        [](const EmbeddingDataset& d, const BenchOptions&) { return train_tree(d, 20); });
    add("Decision Tree", "Max # of Splits: 4",
        [](const EmbeddingDataset& d, const BenchOptions&) { return train_tree(d, 4); });

    return suite;
}

std::vector<BenchRow> run_bench(const std::vector<BenchEntry>& suite, const EmbeddingDataset& train,
                                const EmbeddingDataset& val, const BenchOptions& options,
                                std::ostream* progress) {
    using clock = std::chrono::steady_clock;
    std::vector<BenchRow> rows;
    rows.reserve(suite.size());
    for (const auto& entry : suite) {
        BenchRow row;
        row.model = entry.model;
        row.settings = entry.settings;
        if (progress) {
            *progress << entry.model << " [" << entry.settings << "] ... " << std::flush;
        }
        try {
            auto t0 = clock::now();
            AnyModel model = entry.train(train, options);
            auto t1 = clock::now();
            std::vector<GenderLabel> predicted;
            std::vector<GenderLabel> truth;
            predicted.reserve(val.size());
            truth.reserve(val.size());
            for (std::size_t i = 0; i < val.size(); ++i) {
                predicted.push_back(model_predict(model, val.features(i)));
                truth.push_back(val.label(i));
            }
            auto t2 = clock::now();
            row.confusion = confusion_from_predictions(truth, predicted);
            row.accuracy = accuracy(row.confusion);
            row.f1 = f_measure(row.confusion);
            row.train_s = std::chrono::duration<double>(t1 - t0).count();
            row.eval_s = std::chrono::duration<double>(t2 - t1).count();
            if (progress) {
                *progress << std::fixed << std::setprecision(1) << 100.0 * row.accuracy << "% in "
                          << std::setprecision(2) << row.train_s << "s\n";
            }
        } catch (const std::exception& ex) {
            row.failed = true;
            row.error = ex.what();
            if (progress) {
                *progress << "FAILED: " << ex.what() << '\n';
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << "model,settings,tf,tm,ff,fm,accuracy_pct,f1_pct,train_s,eval_s\n";
    for (const auto& row : rows) {
        out << csv_field(row.model) << ',' << csv_field(row.settings) << ',';
        if (row.failed) {
            out << ",,,,ERROR," << csv_field(sanitize_error(row.error)) << ",,\n";
            continue;
        }
        out << row.confusion.true_females << ',' << row.confusion.true_males << ','
            << row.confusion.false_females << ',' << row.confusion.false_males << ',';
        out << std::fixed << std::setprecision(1) << 100.0 * row.accuracy << ','
            << std::setprecision(2) << 100.0 * row.f1 << ',' << std::setprecision(3) << row.train_s
            << ',' << row.eval_s << '\n';
        out.unsetf(std::ios::fixed);
    }
    return out.str();
}

EmbeddingDataset make_synthetic_clusters(std::size_t n, std::size_t dim, double offset,
                                         double sigma, std::uint64_t seed) {
    EmbeddingDataset data(dim, "synthetic");
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        GenderLabel label = (i % 2 == 0) ? GenderLabel::Female : GenderLabel::Male;
        double mean = (label == GenderLabel::Female) ? -offset : offset;
        std::vector<float> row(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            row[j] = static_cast<float>(mean + sigma * rng.normal());
        }
        data.add({std::move(row), label});
    }
    return data;
}

}  // namespace facetrait
