#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "facetrait/types.hpp"

namespace facetrait {

// The four confusion quantities. false_females counts true-Male records
// predicted Female; false_males counts true-Female records predicted Male.
struct ConfusionCounts {
    std::uint64_t true_females = 0;
    std::uint64_t true_males = 0;
    std::uint64_t false_females = 0;
    std::uint64_t false_males = 0;

    std::uint64_t total() const {
        return true_females + true_males + false_females + false_males;
    }
};

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (fpr, tpr), anchored (0,0)..(1,1)
    double auc = 0.0;
    GenderLabel positive_class = GenderLabel::Female;
};

struct LatencyStats {
    double mean_s = 0.0;
    double p50_s = 0.0;
    double p95_s = 0.0;
};

struct EvalReport {
    ConfusionCounts confusion;
    double accuracy = 0.0;
    double macro_recall = 0.0;
    double macro_precision = 0.0;
    double f_measure = 0.0;
    bool degenerate_terms = false;  // some per-class term had a zero denominator
    RocCurve roc_female;
    RocCurve roc_male;
    LatencyStats latency;
    std::string model_tag;

    std::string to_json() const;
};

ConfusionCounts confusion_from_predictions(const std::vector<GenderLabel>& truth,
                                           const std::vector<GenderLabel>& predicted);

double accuracy(const ConfusionCounts& c);

// Per-class recall/precision averaged over the two classes. A term whose
// denominator is zero contributes 0 and sets the degenerate flag.
std::pair<double, double> macro_recall_precision(const ConfusionCounts& c,
                                                 bool* degenerate = nullptr);

double f_measure(const ConfusionCounts& c);

// Threshold sweep over distinct score values, higher score = more positive.
// Tied scores collapse into single sweep steps; AUC by trapezoidal rule.
RocCurve roc_curve(const std::vector<GenderLabel>& truth, const std::vector<double>& scores,
                   GenderLabel positive);

LatencyStats measure_latency(const std::function<void(const std::vector<float>&)>& predict,
                             const std::vector<std::vector<float>>& inputs, std::size_t warmup,
                             std::size_t reps);

// Report assembled from truth, predictions and Male-oriented scores
// (higher = more Male); the female ROC uses the negated scores.
EvalReport evaluate(const std::vector<GenderLabel>& truth,
                    const std::vector<GenderLabel>& predicted,
                    const std::vector<double>& male_scores, const std::string& model_tag);

}  // namespace facetrait
