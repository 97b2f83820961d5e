#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "facetrait/evaluation.hpp"
#include "facetrait/model_io.hpp"
#include "facetrait/types.hpp"

namespace facetrait {

struct BenchOptions {
    std::uint64_t seed = 0;
    std::size_t svm_subsample = 8000;  // 0 = never subsample
};

struct BenchEntry {
    std::string model;     // Table column "ML Model"
    std::string settings;  // Table column "Settings", verbatim
    std::function<AnyModel(const EmbeddingDataset&, const BenchOptions&)> train;
};

struct BenchRow {
    std::string model;
    std::string settings;
    ConfusionCounts confusion;
    double accuracy = 0.0;
    double f1 = 0.0;
    double train_s = 0.0;
    double eval_s = 0.0;
    bool failed = false;
    std::string error;
};

// The 23 benchmark configurations, one per published result row.
std::vector<BenchEntry> benchmark_suite();

// Trains and evaluates every entry sequentially; a failing entry is recorded
// on its row and the suite continues.
std::vector<BenchRow> run_bench(const std::vector<BenchEntry>& suite,
                                const EmbeddingDataset& train, const EmbeddingDataset& val,
                                const BenchOptions& options, std::ostream* progress = nullptr);

// header: model,settings,tf,tm,ff,fm,accuracy_pct,f1_pct,train_s,eval_s
std::string bench_csv(const std::vector<BenchRow>& rows);

// Two Gaussian clusters in `dim` dimensions with means -offset*1 (Female)
// and +offset*1 (Male), per-component sigma; n/2 records per class.
EmbeddingDataset make_synthetic_clusters(std::size_t n, std::size_t dim, double offset,
                                         double sigma, std::uint64_t seed);

}  // namespace facetrait
