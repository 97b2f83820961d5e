#include "facetrait/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace facetrait {

ConfusionCounts confusion_from_predictions(const std::vector<GenderLabel>& truth,
                                           const std::vector<GenderLabel>& predicted) {
    if (truth.size() != predicted.size() || truth.empty())
        throw ContractError("truth/prediction lists must have equal nonzero length");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == GenderLabel::Female)
            (predicted[i] == GenderLabel::Female ? c.true_females : c.false_males)++;
        else
            (predicted[i] == GenderLabel::Male ? c.true_males : c.false_females)++;
    }
    return c;
}

double accuracy(const ConfusionCounts& c) {
    if (c.total() == 0) throw ContractError("accuracy of empty confusion");
    return static_cast<double>(c.true_males + c.true_females) / static_cast<double>(c.total());
}

std::pair<double, double> macro_recall_precision(const ConfusionCounts& c, bool* degenerate) {
    auto tf = static_cast<double>(c.true_females);
    auto tm = static_cast<double>(c.true_males);
    auto ff = static_cast<double>(c.false_females);
    auto fm = static_cast<double>(c.false_males);
    bool degen = false;
    auto term = [&degen](double num, double den) {
        if (den == 0.0) {
            degen = true;
            return 0.0;
        }
        return num / den;
    };
    double recall = 0.5 * (term(tf, tf + fm) + term(tm, tm + ff));
    double precision = 0.5 * (term(tf, tf + ff) + term(tm, tm + fm));
    if (degenerate) *degenerate = degen;
    return {recall, precision};
}

double f_measure(const ConfusionCounts& c) {
    auto [recall, precision] = macro_recall_precision(c);
    if (recall + precision == 0.0) return 0.0;
    return 2.0 * recall * precision / (recall + precision);
}

RocCurve roc_curve(const std::vector<GenderLabel>& truth, const std::vector<double>& scores,
                   GenderLabel positive) {
    if (truth.size() != scores.size() || truth.empty())
        throw ContractError("truth/score lists must have equal nonzero length");
    std::size_t pos_total = 0, neg_total = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!std::isfinite(scores[i])) throw ContractError("non-finite score");
        (truth[i] == positive ? pos_total : neg_total)++;
    }
    if (pos_total == 0 || neg_total == 0)
        throw ContractError("ROC needs both classes present in truth");

    std::vector<std::size_t> order(truth.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.positive_class = positive;
    roc.points.emplace_back(0.0, 0.0);
    double auc = 0.0;
    std::size_t tp = 0, fp = 0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        // consume the whole tie group so tied scores form one sweep step
        double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (truth[order[i]] == positive ? tp : fp)++;
            ++i;
        }
        double fpr = static_cast<double>(fp) / static_cast<double>(neg_total);
        double tpr = static_cast<double>(tp) / static_cast<double>(pos_total);
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
        roc.points.emplace_back(fpr, tpr);
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    roc.auc = auc;
    return roc;
}

LatencyStats measure_latency(const std::function<void(const std::vector<float>&)>& predict,
                             const std::vector<std::vector<float>>& inputs, std::size_t warmup,
                             std::size_t reps) {
    if (reps < 1) throw ContractError("reps must be >= 1");
    if (inputs.empty()) throw ContractError("no inputs");
    using clock = std::chrono::steady_clock;
    for (std::size_t i = 0; i < warmup; ++i) predict(inputs[i % inputs.size()]);
    std::vector<double> samples;
    samples.reserve(reps);
    for (std::size_t i = 0; i < reps; ++i) {
        const auto& x = inputs[i % inputs.size()];
        auto t0 = clock::now();
        predict(x);
        auto t1 = clock::now();
        samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    LatencyStats st;
    st.mean_s = std::accumulate(samples.begin(), samples.end(), 0.0) /
                static_cast<double>(samples.size());
    auto quantile = [&](double q) {
        auto idx = static_cast<std::size_t>(q * static_cast<double>(samples.size() - 1));
        return samples[idx];
    };
    st.p50_s = quantile(0.5);
    st.p95_s = quantile(0.95);
    return st;
}

EvalReport evaluate(const std::vector<GenderLabel>& truth,
                    const std::vector<GenderLabel>& predicted,
                    const std::vector<double>& male_scores, const std::string& model_tag) {
    EvalReport r;
    r.confusion = confusion_from_predictions(truth, predicted);
    r.accuracy = accuracy(r.confusion);
    std::tie(r.macro_recall, r.macro_precision) =
        macro_recall_precision(r.confusion, &r.degenerate_terms);
    r.f_measure = f_measure(r.confusion);
    r.roc_male = roc_curve(truth, male_scores, GenderLabel::Male);
    std::vector<double> female_scores(male_scores.size());
    std::transform(male_scores.begin(), male_scores.end(), female_scores.begin(),
                   [](double s) { return -s; });
    r.roc_female = roc_curve(truth, female_scores, GenderLabel::Female);
    r.model_tag = model_tag;
    return r;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["confusion"] = {{"tf", confusion.true_females},
                      {"tm", confusion.true_males},
                      {"ff", confusion.false_females},
                      {"fm", confusion.false_males}};
    j["accuracy"] = accuracy;
    j["macro_recall"] = macro_recall;
    j["macro_precision"] = macro_precision;
    j["f_measure"] = f_measure;
    auto roc_json = [](const RocCurve& roc) {
        nlohmann::json r;
        r["positive"] = to_string(roc.positive_class);
        auto pts = nlohmann::json::array();
        for (const auto& [fpr, tpr] : roc.points) pts.push_back({fpr, tpr});
        r["points"] = std::move(pts);
        r["auc"] = roc.auc;
        return r;
    };
    j["roc"] = {{"female", roc_json(roc_female)}, {"male", roc_json(roc_male)}};
    j["latency"] = {{"mean_s", latency.mean_s}, {"p50_s", latency.p50_s},
                    {"p95_s", latency.p95_s}};
    j["model_tag"] = model_tag;
    if (degenerate_terms) j["degenerate_terms"] = true;
    return j.dump(2);
}

}  // namespace facetrait
