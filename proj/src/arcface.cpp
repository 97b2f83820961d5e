#include "facetrait/arcface.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "facetrait/rng.hpp"

namespace facetrait {

namespace {

constexpr std::size_t kH = PreprocessManifest::kTargetHeight;
constexpr std::size_t kW = PreprocessManifest::kTargetWidth;

// raw pixel as RGB float triple, gray replicated, alpha dropped
void pixel_rgb(const Image& img, std::size_t x, std::size_t y, float out[3]) {
    const std::uint8_t* p = img.pixels.data() + (y * img.width + x) * img.channels;
    if (img.channels == 1) {
        out[0] = out[1] = out[2] = static_cast<float>(p[0]);
    } else {
        out[0] = static_cast<float>(p[0]);
        out[1] = static_cast<float>(p[1]);
        out[2] = static_cast<float>(p[2]);
    }
}

}  // namespace

ImageTensor preprocess_image(const Image& raw, const PreprocessManifest& manifest) {
    if (raw.width == 0 || raw.height == 0 || raw.pixels.empty())
        throw ValidationError("empty image");
    if (raw.channels != 1 && raw.channels != 3 && raw.channels != 4)
        throw ValidationError("unsupported channel count " + std::to_string(raw.channels));
    if (raw.pixels.size() != raw.width * raw.height * raw.channels)
        throw ContractError("image buffer size mismatch");
    if (manifest.scale_divisor == 0.0) throw ContractError("scale_divisor must be nonzero");

    // resample into an RGB float plane set
    std::vector<float> rgb(3 * kH * kW);
    bool passthrough = raw.width == kW && raw.height == kH;
    double sx = static_cast<double>(raw.width) / kW;
    double sy = static_cast<double>(raw.height) / kH;
    for (std::size_t y = 0; y < kH; ++y) {
        for (std::size_t x = 0; x < kW; ++x) {
            float val[3];
            if (passthrough) {
                pixel_rgb(raw, x, y, val);
            } else if (manifest.resize_filter == ResizeFilter::Nearest) {
                auto src_x = std::min(static_cast<std::size_t>((x + 0.5) * sx), raw.width - 1);
                auto src_y = std::min(static_cast<std::size_t>((y + 0.5) * sy), raw.height - 1);
                pixel_rgb(raw, src_x, src_y, val);
            } else {
                double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                       static_cast<double>(raw.width - 1));
                double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                       static_cast<double>(raw.height - 1));
                auto x0 = static_cast<std::size_t>(fx);
                auto y0 = static_cast<std::size_t>(fy);
                std::size_t x1 = std::min(x0 + 1, raw.width - 1);
                std::size_t y1 = std::min(y0 + 1, raw.height - 1);
                double wx = fx - static_cast<double>(x0);
                double wy = fy - static_cast<double>(y0);
                float p00[3], p01[3], p10[3], p11[3];
                pixel_rgb(raw, x0, y0, p00);
                pixel_rgb(raw, x1, y0, p01);
                pixel_rgb(raw, x0, y1, p10);
                pixel_rgb(raw, x1, y1, p11);
                for (int c = 0; c < 3; ++c) {
                    double top = p00[c] + wx * (p01[c] - p00[c]);
                    double bot = p10[c] + wx * (p11[c] - p10[c]);
                    val[c] = static_cast<float>(top + wy * (bot - top));
                }
            }
            for (int c = 0; c < 3; ++c) rgb[(static_cast<std::size_t>(c) * kH + y) * kW + x] = val[c];
        }
    }

    ImageTensor tensor;
    tensor.manifest = manifest;
    tensor.data.resize(3 * kH * kW);
    for (std::size_t c = 0; c < 3; ++c) {
        std::size_t src_c = manifest.channel_order == ChannelOrder::RGB ? c : 2 - c;
        for (std::size_t y = 0; y < kH; ++y)
            for (std::size_t x = 0; x < kW; ++x) {
                double v = (rgb[(src_c * kH + y) * kW + x] - manifest.scale_offset) /
                           manifest.scale_divisor;
                std::size_t dst = manifest.layout == TensorLayout::ChannelsFirst
                                      ? (c * kH + y) * kW + x
                                      : (y * kW + x) * 3 + c;
                tensor.data[dst] = static_cast<float>(v);
            }
    }
    return tensor;
}

namespace {

class StubEngine final : public InferenceEngine {
  public:
    std::vector<float> run(const ImageTensor& tensor) override {
        // FNV-1a over the tensor bytes seeds the pseudo-embedding stream
        std::uint64_t h = 0xcbf29ce484222325ULL;
        const auto* bytes = reinterpret_cast<const std::uint8_t*>(tensor.data.data());
        for (std::size_t i = 0; i < tensor.data.size() * sizeof(float); ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
        Rng rng(h);
        std::vector<float> out(512);
        for (auto& v : out) v = static_cast<float>(2.0 * rng.uniform() - 1.0);
        return out;
    }
    const char* name() const override { return "stub"; }
};

}  // namespace

std::unique_ptr<InferenceEngine> make_stub_engine() { return std::make_unique<StubEngine>(); }

std::unique_ptr<InferenceEngine> make_onnx_engine(const InferenceAdapter& adapter) {
    if (!std::filesystem::exists(adapter.model_path))
        throw StorageError("model file not found: " + adapter.model_path.string());
    throw Error(
        "this build has no ONNX inference runtime; use --stub-adapter, or rebuild with an "
        "engine behind the InferenceEngine contract");
}

std::vector<float> extract_embedding(InferenceEngine& engine, const ImageTensor& tensor) {
    if (tensor.data.size() != 3 * kH * kW)
        throw ContractError("tensor shape mismatch: expected 1x3x112x112");
    auto out = engine.run(tensor);
    if (out.size() != engine.output_dim())
        throw Error("inference engine returned " + std::to_string(out.size()) +
                    " components, expected " + std::to_string(engine.output_dim()));
    for (float v : out)
        if (!std::isfinite(v)) throw Error("inference engine returned non-finite output");
    return out;
}

namespace {

bool has_image_extension(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

}  // namespace

EmbeddingDataset extract_directory(InferenceEngine& engine, const std::filesystem::path& root,
                                   const PreprocessManifest& manifest, std::size_t batch,
                                   ExtractionSummary* summary) {
    if (batch < 1) throw ContractError("batch must be positive");
    if (!std::filesystem::is_directory(root))
        throw ValidationError("extraction root is not a directory: " + root.string());

    std::vector<std::pair<std::filesystem::path, GenderLabel>> files;
    bool any_class_dir = false;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        std::string name = entry.path().filename().string();
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        GenderLabel label;
        if (name == "female")
            label = GenderLabel::Female;
        else if (name == "male")
            label = GenderLabel::Male;
        else
            continue;
        any_class_dir = true;
        for (const auto& f : std::filesystem::recursive_directory_iterator(entry.path()))
            if (f.is_regular_file() && has_image_extension(f.path()))
                files.emplace_back(f.path(), label);
    }
    if (!any_class_dir)
        throw ValidationError("no female/ or male/ class directory under " + root.string());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.first.string() < b.first.string(); });

    ExtractionSummary local;
    EmbeddingDataset ds(engine.output_dim(), root.filename().string());
    for (const auto& [path, label] : files) {
        Image img;
        try {
            img = decode_image(path);
        } catch (const Error& e) {
            std::cerr << "skipping " << path.string() << ": " << e.what() << "\n";
            ++local.skipped;
            continue;
        }
        auto tensor = preprocess_image(img, manifest);
        EmbeddingRecord rec;
        rec.features = extract_embedding(engine, tensor);
        rec.label = label;
        ds.add(std::move(rec));
        (label == GenderLabel::Female ? local.female_count : local.male_count)++;
    }
    if (ds.empty()) throw Error("no image could be extracted under " + root.string());
    std::cerr << "extracted " << local.female_count << " female + " << local.male_count
              << " male embeddings (" << local.skipped << " skipped)\n";
    if (summary) *summary = local;
    return ds;
}

}  // namespace facetrait
