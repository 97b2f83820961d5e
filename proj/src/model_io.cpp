#include "facetrait/model_io.hpp"

#include <zlib.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

namespace facetrait {

namespace {

// ---- little-endian byte buffer ----

class Writer {
  public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void str(const std::string& s) {
        u64(s.size());
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    void f64_vec(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void f32_vec(const std::vector<float>& v) {
        u64(v.size());
        for (float x : v) f32(x);
    }
    void raw(const std::vector<std::uint8_t>& v) {
        buf_.insert(buf_.end(), v.begin(), v.end());
    }
    std::vector<std::uint8_t> take() { return std::move(buf_); }
    const std::vector<std::uint8_t>& bytes() const { return buf_; }

  private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
  public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32() {
        auto p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        auto p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str() {
        auto n = checked_count(u64(), 1);
        auto p = take(n);
        return {reinterpret_cast<const char*>(p), n};
    }
    std::vector<double> f64_vec() {
        auto n = checked_count(u64(), 8);
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    std::vector<float> f32_vec() {
        auto n = checked_count(u64(), 4);
        std::vector<float> v(n);
        for (auto& x : v) x = f32();
        return v;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

  private:
    std::size_t checked_count(std::uint64_t n, std::size_t elem) {
        if (n * elem > remaining()) throw FormatError("truncated model payload");
        return static_cast<std::size_t>(n);
    }
    const std::uint8_t* take(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw FormatError("truncated model payload");
        const std::uint8_t* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

// ---- per-family payloads ----

void write_svm(Writer& w, const SvmModel& m) {
    w.u8(static_cast<std::uint8_t>(m.kernel.kind));
    w.u32(static_cast<std::uint32_t>(m.kernel.degree));
    w.f64(m.kernel.scale);
    w.f64(m.bias);
    w.f64(m.C);
    w.u64(m.dimension);
    w.u64(m.support_vectors.size());
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i) {
        w.f64(m.alphas[i]);
        w.f64(m.support_labels[i]);
        w.f32_vec(m.support_vectors[i]);
    }
}

SvmModel read_svm(Reader& r) {
    SvmModel m;
    m.kernel.kind = static_cast<KernelKind>(r.u8());
    m.kernel.degree = static_cast<int>(r.u32());
    m.kernel.scale = r.f64();
    m.bias = r.f64();
    m.C = r.f64();
    m.dimension = r.u64();
    auto n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        m.alphas.push_back(r.f64());
        m.support_labels.push_back(r.f64());
        m.support_vectors.push_back(r.f32_vec());
    }
    return m;
}

void write_logreg(Writer& w, const LogRegModel& m) {
    w.f64_vec(m.weights);
    w.f64(m.bias);
    w.f64(m.l2_lambda);
}

LogRegModel read_logreg(Reader& r) {
    LogRegModel m;
    m.weights = r.f64_vec();
    m.bias = r.f64();
    m.l2_lambda = r.f64();
    return m;
}

void write_lda(Writer& w, const LdaModel& m) {
    w.u64(m.dimension);
    w.f64_vec(m.mean_female);
    w.f64_vec(m.mean_male);
    w.f64_vec(m.chol_lower);
    w.f64(m.log_prior_female);
    w.f64(m.log_prior_male);
    w.f64_vec(m.beta);
    w.f64(m.offset);
}

LdaModel read_lda(Reader& r) {
    LdaModel m;
    m.dimension = r.u64();
    m.mean_female = r.f64_vec();
    m.mean_male = r.f64_vec();
    m.chol_lower = r.f64_vec();
    m.log_prior_female = r.f64();
    m.log_prior_male = r.f64();
    m.beta = r.f64_vec();
    m.offset = r.f64();
    return m;
}

void write_gnb(Writer& w, const GnbModel& m) {
    w.u64(m.dimension);
    for (int c = 0; c < 2; ++c) {
        w.f64_vec(m.mean[c]);
        w.f64_vec(m.var[c]);
        w.f64(m.log_prior[c]);
    }
}

GnbModel read_gnb(Reader& r) {
    GnbModel m;
    m.dimension = r.u64();
    for (int c = 0; c < 2; ++c) {
        m.mean[c] = r.f64_vec();
        m.var[c] = r.f64_vec();
        m.log_prior[c] = r.f64();
    }
    return m;
}

void write_dataset(Writer& w, const EmbeddingDataset& ds) {
    w.u64(ds.dimension());
    w.u64(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        w.u8(static_cast<std::uint8_t>(ds.label(i)));
        w.f32_vec(ds[i].features);
    }
}

EmbeddingDataset read_dataset(Reader& r) {
    auto dim = r.u64();
    auto n = r.u64();
    EmbeddingDataset ds(dim);
    for (std::uint64_t i = 0; i < n; ++i) {
        auto lb = r.u8();
        if (lb > 1) throw FormatError("bad label byte in embedded dataset");
        EmbeddingRecord rec;
        rec.label = static_cast<GenderLabel>(lb);
        rec.features = r.f32_vec();
        ds.add(std::move(rec));
    }
    return ds;
}

void write_knn(Writer& w, const KnnModel& m) {
    w.u64(m.k);
    w.u8(static_cast<std::uint8_t>(m.metric));
    w.u8(static_cast<std::uint8_t>(m.weighting));
    write_dataset(w, *m.training);
}

KnnModel read_knn(Reader& r) {
    auto k = r.u64();
    auto metric = static_cast<KnnMetric>(r.u8());
    auto weighting = static_cast<KnnWeighting>(r.u8());
    auto ds = std::make_shared<EmbeddingDataset>(read_dataset(r));
    return knn_build(std::move(ds), k, metric, weighting);
}

void write_tree(Writer& w, const DecisionTree& m) {
    w.u64(m.max_splits);
    w.u64(m.dimension);
    w.u64(m.nodes.size());
    for (const auto& n : m.nodes) {
        w.u32(static_cast<std::uint32_t>(n.feature + 1));  // 0 = leaf
        w.f64(n.threshold);
        w.u32(static_cast<std::uint32_t>(n.left + 1));
        w.u32(static_cast<std::uint32_t>(n.right + 1));
        w.u8(static_cast<std::uint8_t>(n.label));
        w.f64(n.male_fraction);
    }
}

DecisionTree read_tree(Reader& r) {
    DecisionTree m;
    m.max_splits = r.u64();
    m.dimension = r.u64();
    auto n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        TreeNode node;
        node.feature = static_cast<int>(r.u32()) - 1;
        node.threshold = r.f64();
        node.left = static_cast<int>(r.u32()) - 1;
        node.right = static_cast<int>(r.u32()) - 1;
        auto lb = r.u8();
        if (lb > 1) throw FormatError("bad leaf label");
        node.label = static_cast<GenderLabel>(lb);
        node.male_fraction = r.f64();
        m.nodes.push_back(node);
    }
    if (m.nodes.empty()) throw FormatError("empty tree");
    return m;
}

void write_ensemble(Writer& w, const EnsembleModel& m) {
    w.u8(static_cast<std::uint8_t>(m.kind));
    w.u64(m.seed);
    w.u64(m.dimension);
    w.u64(m.learners.size());
    for (const auto& l : m.learners) {
        w.f64(l.weight);
        w.u64(l.feature_subset.size());
        for (auto f : l.feature_subset) w.u32(f);
        if (std::holds_alternative<DecisionTree>(l.base)) {
            w.u8(0);
            write_tree(w, std::get<DecisionTree>(l.base));
        } else {
            w.u8(1);
            write_lda(w, std::get<LdaModel>(l.base));
        }
    }
}

EnsembleModel read_ensemble(Reader& r) {
    EnsembleModel m;
    m.kind = static_cast<EnsembleKind>(r.u8());
    m.seed = r.u64();
    m.dimension = r.u64();
    auto n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        EnsembleLearner l;
        l.weight = r.f64();
        auto subset_n = r.u64();
        for (std::uint64_t j = 0; j < subset_n; ++j) l.feature_subset.push_back(r.u32());
        auto type = r.u8();
        if (type == 0)
            l.base = read_tree(r);
        else if (type == 1)
            l.base = read_lda(r);
        else
            throw FormatError("unknown ensemble learner type");
        m.learners.push_back(std::move(l));
    }
    return m;
}

void write_mlp(Writer& w, const MlpModel& m) {
    w.u64(m.arch.input_dim);
    w.u64(m.arch.hidden_sizes.size());
    for (auto h : m.arch.hidden_sizes) w.u64(h);
    w.u64(m.layers.size());
    for (const auto& layer : m.layers) {
        w.u64(layer.rows);
        w.u64(layer.cols);
        w.f64_vec(layer.w);
        w.f64_vec(layer.b);
    }
}

MlpModel read_mlp(Reader& r) {
    MlpModel m;
    m.arch.input_dim = r.u64();
    auto hn = r.u64();
    for (std::uint64_t i = 0; i < hn; ++i) m.arch.hidden_sizes.push_back(r.u64());
    auto ln = r.u64();
    for (std::uint64_t i = 0; i < ln; ++i) {
        MlpLayer layer;
        layer.rows = r.u64();
        layer.cols = r.u64();
        layer.w = r.f64_vec();
        layer.b = r.f64_vec();
        if (layer.w.size() != layer.rows * layer.cols || layer.b.size() != layer.rows)
            throw FormatError("inconsistent MLP layer shape");
        m.layers.push_back(std::move(layer));
    }
    return m;
}

const char* ensemble_tag(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::Bagging: return "bagging";
        case EnsembleKind::AdaBoost: return "adaboost";
        case EnsembleKind::RusBoost: return "rusboost";
        case EnsembleKind::SubspaceDiscriminant: return "subspace";
    }
    return "ensemble";
}

}  // namespace

const char* family_tag(const AnyModel& model) {
    return std::visit(
        [](const auto& m) -> const char* {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SvmModel>) return "svm";
            else if constexpr (std::is_same_v<T, LogRegModel>) return "logreg";
            else if constexpr (std::is_same_v<T, LdaModel>) return "lda";
            else if constexpr (std::is_same_v<T, GnbModel>) return "gnb";
            else if constexpr (std::is_same_v<T, KnnModel>) return "knn";
            else if constexpr (std::is_same_v<T, DecisionTree>) return "tree";
            else if constexpr (std::is_same_v<T, EnsembleModel>) return ensemble_tag(m.kind);
            else return "mlp";
        },
        model);
}

std::size_t model_dimension(const AnyModel& model) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SvmModel>) return m.dimension;
            else if constexpr (std::is_same_v<T, LogRegModel>) return m.weights.size();
            else if constexpr (std::is_same_v<T, LdaModel>) return m.dimension;
            else if constexpr (std::is_same_v<T, GnbModel>) return m.dimension;
            else if constexpr (std::is_same_v<T, KnnModel>) return m.training->dimension();
            else if constexpr (std::is_same_v<T, DecisionTree>) return m.dimension;
            else if constexpr (std::is_same_v<T, EnsembleModel>) return m.dimension;
            else return m.arch.input_dim;
        },
        model);
}

GenderLabel model_predict(const AnyModel& model, std::span<const float> x) {
    return std::visit(
        [&](const auto& m) -> GenderLabel {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SvmModel>) return svm_predict(m, x);
            else if constexpr (std::is_same_v<T, LogRegModel>) return logreg_predict(m, x);
            else if constexpr (std::is_same_v<T, LdaModel>) return lda_predict(m, x);
            else if constexpr (std::is_same_v<T, GnbModel>) return gnb_predict(m, x);
            else if constexpr (std::is_same_v<T, KnnModel>) return knn_predict(m, x).first;
            else if constexpr (std::is_same_v<T, DecisionTree>) return tree_predict(m, x).first;
            else if constexpr (std::is_same_v<T, EnsembleModel>)
                return ensemble_predict(m, x).first;
            else return mlp_predict(m, x);
        },
        model);
}

double model_male_score(const AnyModel& model, std::span<const float> x) {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SvmModel>) return svm_decision(m, x);
            else if constexpr (std::is_same_v<T, LogRegModel>) return logreg_score(m, x);
            else if constexpr (std::is_same_v<T, LdaModel>) return lda_score(m, x);
            else if constexpr (std::is_same_v<T, GnbModel>) return gnb_posterior(m, x);
            else if constexpr (std::is_same_v<T, KnnModel>) return knn_predict(m, x).second;
            else if constexpr (std::is_same_v<T, DecisionTree>) return tree_predict(m, x).second;
            else if constexpr (std::is_same_v<T, EnsembleModel>)
                return ensemble_predict(m, x).second;
            else return mlp_forward(m, x).first;
        },
        model);
}

std::vector<std::uint8_t> serialize_model(const ModelArtifact& artifact) {
    Writer w;
    w.raw({'F', 'T', 'M', '1'});
    w.u32(ModelArtifact::kFormatVersion);
    w.str(family_tag(artifact.model));
    w.str(artifact.config_echo);
    w.u64(artifact.created_unix);
    w.u64(artifact.dataset_fingerprint);

    Writer payload;
    std::visit(
        [&payload](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SvmModel>) write_svm(payload, m);
            else if constexpr (std::is_same_v<T, LogRegModel>) write_logreg(payload, m);
            else if constexpr (std::is_same_v<T, LdaModel>) write_lda(payload, m);
            else if constexpr (std::is_same_v<T, GnbModel>) write_gnb(payload, m);
            else if constexpr (std::is_same_v<T, KnnModel>) write_knn(payload, m);
            else if constexpr (std::is_same_v<T, DecisionTree>) write_tree(payload, m);
            else if constexpr (std::is_same_v<T, EnsembleModel>) write_ensemble(payload, m);
            else write_mlp(payload, m);
        },
        artifact.model);
    auto payload_bytes = payload.take();
    w.u64(payload_bytes.size());
    w.raw(payload_bytes);

    auto crc = static_cast<std::uint32_t>(
        crc32(0L, w.bytes().data(), static_cast<uInt>(w.bytes().size())));
    w.u32(crc);
    return w.take();
}

ModelArtifact deserialize_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "FTM1", 4) != 0)
        throw FormatError("not an FTM1 model container");
    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i)
        stored_crc |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + static_cast<std::size_t>(i)])
                      << (8 * i);
    auto computed = static_cast<std::uint32_t>(
        crc32(0L, bytes.data(), static_cast<uInt>(bytes.size() - 4)));
    if (stored_crc != computed) throw CorruptionError("FTM1 checksum mismatch");

    Reader r(bytes.subspan(4, bytes.size() - 8));
    std::uint32_t version = r.u32();
    if (version != ModelArtifact::kFormatVersion)
        throw FormatError("unsupported FTM1 version " + std::to_string(version));
    std::string tag = r.str();
    ModelArtifact artifact;
    artifact.config_echo = r.str();
    artifact.created_unix = r.u64();
    artifact.dataset_fingerprint = r.u64();
    auto payload_len = r.u64();
    if (payload_len != r.remaining()) throw FormatError("FTM1 payload length mismatch");

    if (tag == "svm") artifact.model = read_svm(r);
    else if (tag == "logreg") artifact.model = read_logreg(r);
    else if (tag == "lda") artifact.model = read_lda(r);
    else if (tag == "gnb") artifact.model = read_gnb(r);
    else if (tag == "knn") artifact.model = read_knn(r);
    else if (tag == "tree") artifact.model = read_tree(r);
    else if (tag == "bagging" || tag == "adaboost" || tag == "rusboost" || tag == "subspace")
        artifact.model = read_ensemble(r);
    else if (tag == "mlp") artifact.model = read_mlp(r);
    else throw FormatError("unknown model family '" + tag + "'");
    return artifact;
}

void save_model(const ModelArtifact& artifact, const std::filesystem::path& path) {
    auto bytes = serialize_model(artifact);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw StorageError("cannot open for writing: " + path.string());
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw StorageError("write failed: " + path.string());
}

ModelArtifact load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw StorageError("cannot open: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    return static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

std::uint64_t fingerprint_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw StorageError("cannot open: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    return crc32(0L, bytes.data(), static_cast<uInt>(bytes.size()));
}

}  // namespace facetrait
