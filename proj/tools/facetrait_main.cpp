// facetrait: extract | train | eval | bench

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "facetrait/arcface.hpp"
#include "facetrait/baselines.hpp"
#include "facetrait/bench.hpp"
#include "facetrait/embedding_store.hpp"
#include "facetrait/evaluation.hpp"
#include "facetrait/kernel_svm.hpp"
#include "facetrait/mlp.hpp"
#include "facetrait/model_io.hpp"
#include "facetrait/rng.hpp"
#include "facetrait/trees.hpp"

namespace ft = facetrait;
using nlohmann::json;

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("FACETRAIT_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            std::cerr << "warning: FACETRAIT_SEED is not a number, using 0\n";
        }
    }
    return 0;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ft::StorageError("cannot open for writing: " + path);
    out << text;
    if (!out) throw ft::StorageError("write failed: " + path);
}

std::string roc_csv(const ft::RocCurve& female, const ft::RocCurve& male) {
    std::ostringstream out;
    out << "positive,fpr,tpr\n";
    out.precision(17);
    for (const auto& [fpr, tpr] : female.points) out << "female," << fpr << ',' << tpr << '\n';
    for (const auto& [fpr, tpr] : male.points) out << "male," << fpr << ',' << tpr << '\n';
    return out.str();
}

// Two side-by-side ROC panels: axes, diagonal, curve polyline, AUC caption.
std::string roc_svg(const ft::RocCurve& female, const ft::RocCurve& male) {
    constexpr double kPanel = 280.0;
    constexpr double kMargin = 45.0;
    constexpr double kGap = 40.0;
    auto panel = [&](const ft::RocCurve& curve, double x0, const std::string& title) {
        const double y0 = kMargin;
        auto px = [&](double fpr) { return x0 + fpr * kPanel; };
        auto py = [&](double tpr) { return y0 + (1.0 - tpr) * kPanel; };
        std::ostringstream s;
        s << "  <rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << kPanel
          << "\" height=\"" << kPanel << "\" fill=\"none\" stroke=\"black\"/>\n";
        s << "  <line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
          << py(1) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
        s << "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
        for (const auto& [fpr, tpr] : curve.points) s << px(fpr) << ',' << py(tpr) << ' ';
        s << "\"/>\n";
        std::ostringstream auc;
        auc.precision(4);
        auc << curve.auc;
        s << "  <text x=\"" << x0 + kPanel / 2 << "\" y=\"" << y0 - 12
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << title
          << " (AUC " << auc.str() << ")</text>\n";
        s << "  <text x=\"" << x0 + kPanel / 2 << "\" y=\"" << y0 + kPanel + 30
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">False positive"
             " rate</text>\n";
        s << "  <text x=\"" << x0 - 30 << "\" y=\"" << y0 + kPanel / 2
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\""
          << "rotate(-90 " << x0 - 30 << ' ' << y0 + kPanel / 2
          << ")\">True positive rate</text>\n";
        return s.str();
    };
    const double width = kMargin * 2 + kPanel * 2 + kGap;
    const double height = kMargin * 2 + kPanel + 20;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << panel(female, kMargin, "Positive: Female");
    out << panel(male, kMargin + kPanel + kGap, "Positive: Male");
    out << "</svg>\n";
    return out.str();
}

struct TrainFlags {
    std::string data_path;
    std::string out_path;
    std::string algo;
    std::string kernel = "gaussian";
    double sigma = 0.0;
    double C = 1.0;
    double tol = 1e-3;
    int max_passes = 10;
    std::size_t svm_subsample = 0;
    double lambda = 1e-4;
    int epochs = 0;  // 0 = family default
    std::size_t k = 1;
    std::string metric = "euclidean";
    bool weighted = false;
    std::size_t max_splits = 100;
    std::size_t n_learners = 30;
    double learn_rate = 0.1;
    std::size_t subspace_dim = 0;
    std::vector<std::size_t> hidden = {100};
    std::size_t batch_size = 256;
    double step = 0.0;  // 0 = family default
    double momentum = 0.9;
    bool normalize = false;
    std::uint64_t seed = 0;
};

ft::AnyModel train_from_flags(const ft::EmbeddingDataset& data, const TrainFlags& f,
                              json& config_echo) {
    config_echo["algo"] = f.algo;
    config_echo["seed"] = f.seed;
    config_echo["normalize"] = f.normalize;
    if (f.algo == "svm") {
        ft::KernelSpec spec;
        if (f.kernel == "linear") {
            spec.kind = ft::KernelKind::Linear;
        } else if (f.kernel == "quadratic") {
            spec.kind = ft::KernelKind::Polynomial;
            spec.degree = 2;
        } else if (f.kernel == "cubic") {
            spec.kind = ft::KernelKind::Polynomial;
            spec.degree = 3;
        } else if (f.kernel == "gaussian") {
            spec.kind = ft::KernelKind::Gaussian;
        } else {
            throw CLI::ValidationError("--kernel",
                                       "unknown kernel '" + f.kernel +
                                           "' (linear, quadratic, cubic, gaussian)");
        }
        spec.scale = f.sigma;
        ft::SmoParams params;
        params.C = f.C;
        params.tol = f.tol;
        params.max_passes = f.max_passes;
        params.seed = f.seed;
        params.subsample = f.svm_subsample;
        config_echo["kernel"] = f.kernel;
        config_echo["sigma"] = spec.resolved_scale(data.dimension());
        config_echo["C"] = f.C;
        config_echo["tol"] = f.tol;
        config_echo["subsample"] = f.svm_subsample;
        return ft::smo_train(data, spec, params);
    }
    if (f.algo == "logreg") {
        ft::LogRegConfig config;
        config.seed = f.seed;
        if (f.epochs > 0) config.epochs = f.epochs;
        config_echo["lambda"] = f.lambda;
        config_echo["epochs"] = config.epochs;
        return ft::logreg_train(data, f.lambda, config);
    }
    if (f.algo == "lda") {
        return ft::lda_fit(data);
    }
    if (f.algo == "gnb") {
        return ft::gnb_fit(data);
    }
    if (f.algo == "knn") {
        ft::KnnMetric metric;
        if (f.metric == "euclidean") {
            metric = ft::KnnMetric::Euclidean;
        } else if (f.metric == "cosine") {
            metric = ft::KnnMetric::Cosine;
        } else {
            throw CLI::ValidationError("--metric", "unknown metric '" + f.metric +
                                                       "' (euclidean, cosine)");
        }
        config_echo["k"] = f.k;
        config_echo["metric"] = f.metric;
        config_echo["weighted"] = f.weighted;
        return ft::knn_build(std::make_shared<ft::EmbeddingDataset>(data), f.k, metric,
                             f.weighted ? ft::KnnWeighting::InverseDistance
                                        : ft::KnnWeighting::Uniform);
    }
    if (f.algo == "tree") {
        config_echo["max_splits"] = f.max_splits;
        std::vector<double> weights(data.size(), 1.0);
        return ft::tree_train(data, weights, f.max_splits);
    }
    if (f.algo == "bagging" || f.algo == "adaboost" || f.algo == "rusboost" ||
        f.algo == "subspace") {
        config_echo["n_learners"] = f.n_learners;
        if (f.algo == "bagging") {
            config_echo["max_splits"] = f.max_splits;
            return ft::bagging_train(data, f.n_learners, f.max_splits, f.seed);
        }
        if (f.algo == "adaboost") {
            config_echo["max_splits"] = f.max_splits;
            config_echo["learn_rate"] = f.learn_rate;
            return ft::adaboost_train(data, f.n_learners, f.max_splits, f.learn_rate, f.seed);
        }
        if (f.algo == "rusboost") {
            config_echo["max_splits"] = f.max_splits;
            config_echo["learn_rate"] = f.learn_rate;
            return ft::rusboost_train(data, f.n_learners, f.max_splits, f.learn_rate, f.seed);
        }
        std::size_t dim = f.subspace_dim ? f.subspace_dim : data.dimension() / 2;
        config_echo["subspace_dim"] = dim;
        return ft::subspace_discriminant_train(data, f.n_learners, dim, f.seed);
    }
    if (f.algo == "mlp") {
        ft::MlpArchitecture arch;
        arch.input_dim = data.dimension();
        arch.hidden_sizes = f.hidden;
        ft::MlpTrainConfig config;
        config.seed = f.seed;
        config.batch_size = f.batch_size;
        config.momentum = f.momentum;
        if (f.epochs > 0) config.epochs = f.epochs;
        if (f.step > 0.0) config.step = f.step;
        config_echo["hidden"] = f.hidden;
        config_echo["epochs"] = config.epochs;
        config_echo["step"] = config.step;
        config_echo["batch_size"] = config.batch_size;
        return ft::mlp_train(data, arch, config);
    }
    throw CLI::ValidationError(
        "--algo", "unknown algorithm '" + f.algo +
                      "' (svm, logreg, lda, gnb, knn, tree, bagging, adaboost, rusboost, "
                      "subspace, mlp)");
}

int cmd_extract(const std::string& images, const std::string& model_path, const std::string& out,
                bool stub, bool bgr, bool channels_last, bool nearest, std::size_t batch) {
    ft::PreprocessManifest manifest;
    if (bgr) manifest.channel_order = ft::ChannelOrder::BGR;
    if (channels_last) manifest.layout = ft::TensorLayout::ChannelsLast;
    if (nearest) manifest.resize_filter = ft::ResizeFilter::Nearest;

    std::unique_ptr<ft::InferenceEngine> engine;
    if (stub) {
        engine = ft::make_stub_engine();
    } else {
        ft::InferenceAdapter adapter;
        adapter.model_path = model_path;
        engine = ft::make_onnx_engine(adapter);
    }
    ft::ExtractionSummary summary;
    ft::EmbeddingDataset data = ft::extract_directory(*engine, images, manifest, batch, &summary);
    if (data.size() == 0) throw ft::ValidationError("no images extracted under " + images);
    ft::save_aef(data, out);
    std::cout << "female=" << summary.female_count << " male=" << summary.male_count
              << " skipped=" << summary.skipped << " -> " << out << '\n';
    return 0;
}

int cmd_train(const TrainFlags& flags) {
    ft::EmbeddingDataset data = ft::load_aef(flags.data_path);
    if (flags.normalize) data = ft::l2_normalize(data);

    json config_echo;
    auto t0 = std::chrono::steady_clock::now();
    ft::AnyModel model = train_from_flags(data, flags, config_echo);
    auto t1 = std::chrono::steady_clock::now();

    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (ft::model_predict(model, data.features(i)) == data.label(i)) ++correct;
    }

    ft::ModelArtifact artifact;
    artifact.model = std::move(model);
    artifact.config_echo = config_echo.dump();
    artifact.created_unix = static_cast<std::uint64_t>(std::time(nullptr));
    artifact.dataset_fingerprint = ft::fingerprint_file(flags.data_path);
    ft::save_model(artifact, flags.out_path);

    double train_s = std::chrono::duration<double>(t1 - t0).count();
    std::cout << ft::family_tag(artifact.model) << ": training accuracy "
              << 100.0 * static_cast<double>(correct) / static_cast<double>(data.size())
              << "% in " << train_s << "s -> " << flags.out_path << '\n';
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& report_path, const std::string& roc_path,
             const std::string& svg_path, bool normalize) {
    ft::ModelArtifact artifact = ft::load_model(model_path);
    ft::EmbeddingDataset data = ft::load_aef(data_path);
    if (normalize) data = ft::l2_normalize(data);
    if (ft::model_dimension(artifact.model) != data.dimension()) {
        throw ft::ValidationError("model dimension " +
                                  std::to_string(ft::model_dimension(artifact.model)) +
                                  " does not match dataset dimension " +
                                  std::to_string(data.dimension()));
    }

    std::vector<ft::GenderLabel> truth, predicted;
    std::vector<double> male_scores;
    truth.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        truth.push_back(data.label(i));
        predicted.push_back(ft::model_predict(artifact.model, data.features(i)));
        male_scores.push_back(ft::model_male_score(artifact.model, data.features(i)));
    }
    ft::EvalReport report =
        ft::evaluate(truth, predicted, male_scores, ft::family_tag(artifact.model));

    std::vector<std::vector<float>> probes;
    for (std::size_t i = 0; i < std::min<std::size_t>(data.size(), 64); ++i) {
        probes.emplace_back(data.features(i).begin(), data.features(i).end());
    }
    report.latency = ft::measure_latency(
        [&](const std::vector<float>& x) {
            volatile auto r = ft::model_predict(artifact.model, x);
            (void)r;
        },
        probes, 2, 5);

    if (!report_path.empty()) write_text_file(report_path, report.to_json());
    if (!roc_path.empty()) write_text_file(roc_path, roc_csv(report.roc_female, report.roc_male));
    if (!svg_path.empty()) write_text_file(svg_path, roc_svg(report.roc_female, report.roc_male));

    const auto& c = report.confusion;
    std::cout << report.model_tag << " | TF=" << c.true_females << " TM=" << c.true_males
              << " FF=" << c.false_females << " FM=" << c.false_males << " | Acc "
              << 100.0 * report.accuracy << "% F1 " << 100.0 * report.f_measure << "% | AUC(F) "
              << report.roc_female.auc << " AUC(M) " << report.roc_male.auc << '\n';
    return 0;
}

int cmd_bench(const std::string& train_path, const std::string& val_path, const std::string& out,
              const ft::BenchOptions& options) {
    ft::EmbeddingDataset train = ft::load_aef(train_path);
    ft::EmbeddingDataset val = ft::load_aef(val_path);
    auto suite = ft::benchmark_suite();
    auto rows = ft::run_bench(suite, train, val, options, &std::cerr);
    std::string csv = ft::bench_csv(rows);
    if (out.empty()) {
        std::cout << csv;
    } else {
        write_text_file(out, csv);
    }
    std::size_t ok = 0;
    for (const auto& row : rows)
        if (!row.failed) ++ok;
    std::cerr << ok << "/" << rows.size() << " entries succeeded\n";
    return ok == 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gender classification from frozen face-recognition embeddings"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // extract
    auto* extract = app.add_subcommand("extract", "Embed an image directory into an AEF file");
    std::string ex_images, ex_model, ex_out;
    bool ex_stub = false, ex_bgr = false, ex_channels_last = false, ex_nearest = false;
    std::size_t ex_batch = 16;
    extract->add_option("--images", ex_images, "Root with female/ and male/ subdirectories")
        ->required();
    extract->add_option("--model", ex_model, "ONNX embedding model path");
    extract->add_option("--out", ex_out, "Output AEF path")->required();
    extract->add_flag("--stub-adapter", ex_stub, "Use deterministic pseudo-embeddings");
    extract->add_flag("--bgr", ex_bgr, "Feed BGR channel order");
    extract->add_flag("--channels-last", ex_channels_last, "NHWC tensor layout");
    extract->add_flag("--nearest", ex_nearest, "Nearest-neighbor resize");
    extract->add_option("--batch", ex_batch, "Extraction batch size");

    // train
    auto* train = app.add_subcommand("train", "Train a classifier on an AEF file");
    TrainFlags tf;
    tf.seed = default_seed();
    train->add_option("--data", tf.data_path, "Training AEF path")->required();
    train->add_option("--algo", tf.algo,
                      "svm|logreg|lda|gnb|knn|tree|bagging|adaboost|rusboost|subspace|mlp")
        ->required();
    train->add_option("--out", tf.out_path, "Output model path")->required();
    train->add_option("--kernel", tf.kernel, "SVM kernel: linear|quadratic|cubic|gaussian");
    train->add_option("--sigma", tf.sigma, "Kernel scale (0 = sqrt(dimension))");
    train->add_option("--C", tf.C, "SVM box constraint");
    train->add_option("--tol", tf.tol, "SMO KKT tolerance");
    train->add_option("--max-passes", tf.max_passes, "SMO idle sweeps before stopping");
    train->add_option("--svm-subsample", tf.svm_subsample, "Cap SVM training size (0 = all)");
    train->add_option("--lambda", tf.lambda, "Logistic-regression L2 strength");
    train->add_option("--epochs", tf.epochs, "Training epochs (logreg/mlp)");
    train->add_option("--k", tf.k, "KNN neighbor count");
    train->add_option("--metric", tf.metric, "KNN metric: euclidean|cosine");
    train->add_flag("--weighted", tf.weighted, "Inverse-distance KNN weighting");
    train->add_option("--max-splits", tf.max_splits, "Tree split budget");
    train->add_option("--n-learners", tf.n_learners, "Ensemble size");
    train->add_option("--learn-rate", tf.learn_rate, "Boosting learn rate");
    train->add_option("--subspace-dim", tf.subspace_dim, "Subspace size (0 = dimension/2)");
    train->add_option("--hidden", tf.hidden, "MLP hidden sizes, e.g. --hidden 10 10");
    train->add_option("--batch-size", tf.batch_size, "MLP mini-batch size");
    train->add_option("--step", tf.step, "MLP learning rate");
    train->add_option("--momentum", tf.momentum, "MLP momentum");
    train->add_flag("--normalize", tf.normalize, "L2-normalize features first");
    train->add_option("--seed", tf.seed, "RNG seed (default: FACETRAIT_SEED or 0)");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a saved model on an AEF file");
    std::string ev_model, ev_data, ev_report, ev_roc, ev_svg;
    bool ev_normalize = false;
    eval->add_option("--model", ev_model, "Model artifact path")->required();
    eval->add_option("--data", ev_data, "Validation AEF path")->required();
    eval->add_option("--report", ev_report, "EvalReport JSON output path");
    eval->add_option("--roc", ev_roc, "ROC CSV output path");
    eval->add_option("--roc-svg", ev_svg, "Two-panel ROC SVG output path");
    eval->add_flag("--normalize", ev_normalize, "L2-normalize features first");

    // bench
    auto* bench = app.add_subcommand("bench", "Run the published 23-entry benchmark suite");
    std::string be_train, be_val, be_out;
    ft::BenchOptions be_options;
    be_options.seed = default_seed();
    bench->add_option("--train", be_train, "Training AEF path")->required();
    bench->add_option("--val", be_val, "Validation AEF path")->required();
    bench->add_option("--out", be_out, "Output CSV path (default: stdout)");
    bench->add_option("--seed", be_options.seed, "RNG seed (default: FACETRAIT_SEED or 0)");
    bench->add_option("--svm-subsample", be_options.svm_subsample,
                      "Cap SVM training size (0 = all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (extract->parsed()) {
            if (!ex_stub && ex_model.empty()) {
                std::cerr << "extract: --model is required unless --stub-adapter is given\n";
                return 2;
            }
            return cmd_extract(ex_images, ex_model, ex_out, ex_stub, ex_bgr, ex_channels_last,
                               ex_nearest, ex_batch);
        }
        if (train->parsed()) return cmd_train(tf);
        if (eval->parsed()) return cmd_eval(ev_model, ev_data, ev_report, ev_roc, ev_svg,
                                            ev_normalize);
        if (bench->parsed()) return cmd_bench(be_train, be_val, be_out, be_options);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const ft::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
