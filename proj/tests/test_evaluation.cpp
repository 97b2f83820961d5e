#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facetrait/evaluation.hpp"
#include "facetrait/rng.hpp"

using namespace facetrait;
using nlohmann::json;

namespace {

struct PublishedRow {
    std::uint64_t tf, tm, ff, fm;
    double accuracy_pct;
    double f1_pct;
};

// Confusion counts and reported Accuracy%/F1% of every published benchmark
// row; our formulas must reproduce the reported columns from the counts.
const PublishedRow kPublishedRows[] = {
    {5705, 5526, 282, 136, 96.4, 96.43}, {5705, 5502, 306, 136, 96.2, 96.23},
    {5682, 5492, 316, 159, 95.9, 95.94}, {5303, 5217, 591, 538, 90.3, 90.31},
    {5639, 5486, 322, 202, 95.5, 95.51}, {5588, 5453, 355, 253, 94.8, 94.79},
    {5768, 5342, 466, 73, 95.4, 95.48},  {5803, 3372, 2436, 38, 78.8, 81.57},
    {5820, 2672, 3136, 21, 72.9, 77.18}, {5841, 511, 5297, 0, 54.5, 63.49},
    {5545, 5436, 372, 296, 94.3, 94.27}, {5528, 5401, 407, 313, 93.8, 93.82},
    {5498, 5424, 384, 343, 93.8, 93.76}, {5464, 5402, 406, 377, 93.3, 93.28},
    {5401, 5339, 469, 440, 92.2, 92.20}, {5447, 5350, 458, 394, 92.7, 92.69},
    {5127, 5088, 720, 714, 87.7, 87.69}, {4888, 4938, 870, 953, 84.4, 84.35},
    {4242, 4191, 1617, 1599, 72.4, 72.39}, {4922, 4697, 1111, 919, 82.6, 82.59},
    {4334, 4287, 1521, 1507, 74.0, 74.01}, {3985, 4246, 1562, 1856, 70.7, 70.69},
    {3825, 4121, 1687, 2016, 68.2, 68.25},
};

// Tie-adjusted Mann-Whitney AUC: (wins + ties/2) / (P*N) by pair counting.
double mann_whitney_auc(const std::vector<GenderLabel>& truth, const std::vector<double>& scores,
                        GenderLabel positive) {
    double wins = 0.0, ties = 0.0;
    std::size_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] != positive) continue;
        ++pos;
        for (std::size_t j = 0; j < truth.size(); ++j) {
            if (truth[j] == positive) continue;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                ties += 1.0;
        }
    }
    for (auto t : truth)
        if (t != positive) ++neg;
    if (pos == 0 || neg == 0) return 0.5;
    return (wins + 0.5 * ties) / (double(pos) * double(neg));
}

}  // namespace

TEST_CASE("published accuracy and F1 columns reproduce from counts within 0.05 pp") {
    for (const auto& row : kPublishedRows) {
        ConfusionCounts c{row.tf, row.tm, row.ff, row.fm};
        CHECK(std::abs(100.0 * accuracy(c) - row.accuracy_pct) < 0.05);
        CHECK(std::abs(100.0 * f_measure(c) - row.f1_pct) < 0.05);
    }
}

TEST_CASE("worked example: (5705,5526,282,136)") {
    ConfusionCounts c{5705, 5526, 282, 136};
    CHECK(100.0 * accuracy(c) == doctest::Approx(96.4).epsilon(0.0006));
    CHECK(100.0 * f_measure(c) == doctest::Approx(96.43).epsilon(0.0001));
}

TEST_CASE("degenerate per-class term contributes zero and sets the flag") {
    // No record predicted Male: male precision denominator is zero.
    ConfusionCounts c{10, 0, 5, 0};
    bool degenerate = false;
    auto [recall, precision] = macro_recall_precision(c, &degenerate);
    CHECK(degenerate);
    CHECK(recall == doctest::Approx(0.5));           // (1 + 0)/2
    CHECK(precision == doctest::Approx(10.0 / 30));  // (10/15 + 0)/2
    // The K=100 KNN row has FM=0 and still yields the published F1.
    ConfusionCounts knn{5841, 511, 5297, 0};
    CHECK(std::abs(100.0 * f_measure(knn) - 63.49) < 0.05);
}

TEST_CASE("confusion_from_predictions uses the female-positive convention") {
    using enum GenderLabel;
    std::vector<GenderLabel> truth = {Female, Female, Male, Male, Male};
    std::vector<GenderLabel> pred = {Female, Male, Female, Male, Male};
    auto c = confusion_from_predictions(truth, pred);
    CHECK(c.true_females == 1);
    CHECK(c.true_males == 2);
    CHECK(c.false_females == 1);  // true Male predicted Female
    CHECK(c.false_males == 1);    // true Female predicted Male
}

TEST_CASE("ROC anchors, known AUC values") {
    using enum GenderLabel;
    SUBCASE("perfect separation => AUC 1") {
        auto roc = roc_curve({Male, Male, Female, Female}, {0.9, 0.8, 0.2, 0.1}, Male);
        CHECK(roc.auc == doctest::Approx(1.0));
        CHECK(roc.points.front() == std::pair<double, double>{0.0, 0.0});
        CHECK(roc.points.back() == std::pair<double, double>{1.0, 1.0});
    }
    SUBCASE("one inversion on 2+2 => AUC 0.75") {
        auto roc = roc_curve({Male, Female, Male, Female}, {0.9, 0.8, 0.7, 0.1}, Male);
        CHECK(roc.auc == doctest::Approx(0.75));
    }
    SUBCASE("all scores tied => chance 0.5") {
        auto roc = roc_curve({Male, Female, Male, Female}, {0.5, 0.5, 0.5, 0.5}, Male);
        CHECK(roc.auc == doctest::Approx(0.5));
        CHECK(roc.points.size() == 2);  // single sweep step plus origin
    }
}

TEST_CASE("trapezoidal AUC equals tie-adjusted Mann-Whitney on random score sets") {
    Rng rng(0x21);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 2 + rng.uniform_index(511);
        std::vector<GenderLabel> truth(n);
        std::vector<double> scores(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = rng.uniform() < 0.5 ? GenderLabel::Male : GenderLabel::Female;
            (truth[i] == GenderLabel::Male ? has_pos : has_neg) = true;
            // Quantized scores inject plenty of exact ties.
            scores[i] = std::floor(rng.uniform() * 8.0) / 8.0;
        }
        if (!has_pos || !has_neg) continue;
        auto roc = roc_curve(truth, scores, GenderLabel::Male);
        double oracle = mann_whitney_auc(truth, scores, GenderLabel::Male);
        CHECK(std::abs(roc.auc - oracle) < 1e-12);
    }
}

TEST_CASE("EvalReport JSON carries the exact field names") {
    using enum GenderLabel;
    std::vector<GenderLabel> truth = {Female, Male, Female, Male};
    std::vector<GenderLabel> pred = {Female, Male, Male, Male};
    std::vector<double> male_scores = {0.1, 0.9, 0.6, 0.8};
    auto report = evaluate(truth, pred, male_scores, "demo");
    auto j = json::parse(report.to_json());
    CHECK(j["confusion"]["tf"] == 1);
    CHECK(j["confusion"]["tm"] == 2);
    CHECK(j["confusion"]["ff"] == 0);
    CHECK(j["confusion"]["fm"] == 1);
    CHECK(j.contains("accuracy"));
    CHECK(j.contains("macro_recall"));
    CHECK(j.contains("macro_precision"));
    CHECK(j.contains("f_measure"));
    CHECK(j["roc"]["female"].contains("auc"));
    CHECK(j["roc"]["male"]["positive"] == "male");
    CHECK(j["roc"]["male"]["points"].front().size() == 2);
    CHECK(j["latency"].contains("mean_s"));
    CHECK(j["latency"].contains("p50_s"));
    CHECK(j["latency"].contains("p95_s"));
    CHECK(j["model_tag"] == "demo");
    // female ROC scores are the negated male scores
    CHECK(report.roc_female.auc == doctest::Approx(mann_whitney_auc(
                                       truth, {-0.1, -0.9, -0.6, -0.8}, GenderLabel::Female)));
}

TEST_CASE("latency percentiles are ordered") {
    std::vector<std::vector<float>> inputs(8, std::vector<float>(16, 1.0f));
    auto stats = measure_latency([](const std::vector<float>&) {}, inputs, 1, 3);
    CHECK(stats.mean_s >= 0.0);
    CHECK(stats.p50_s <= stats.p95_s);
}
