#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "facetrait/types.hpp"

namespace facetrait {

enum class ChannelOrder : std::uint8_t { RGB = 0, BGR = 1 };
enum class TensorLayout : std::uint8_t { ChannelsFirst = 0, ChannelsLast = 1 };
enum class ResizeFilter : std::uint8_t { Bilinear = 0, Nearest = 1 };

// Preprocessing the ArcFace asset expects; only the 112x112x3 input shape
// is fixed, so everything else is configurable and recorded.
struct PreprocessManifest {
    static constexpr std::size_t kTargetHeight = 112;
    static constexpr std::size_t kTargetWidth = 112;
    ChannelOrder channel_order = ChannelOrder::RGB;
    TensorLayout layout = TensorLayout::ChannelsFirst;
    double scale_offset = 127.5;
    double scale_divisor = 127.5;
    ResizeFilter resize_filter = ResizeFilter::Bilinear;
};

// Decoded 8-bit image, interleaved rows, RGB(A) channel order.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;  // 1, 3 or 4
    std::vector<std::uint8_t> pixels;
};

// 1x3x112x112 (channels-first) or 1x112x112x3 float tensor.
struct ImageTensor {
    std::vector<float> data;
    PreprocessManifest manifest;
};

// Resize to 112x112, replicate gray / drop alpha, apply
// (pixel - offset) / divisor, emit per manifest order and layout.
// Already-112x112 inputs pass through without resampling.
ImageTensor preprocess_image(const Image& raw, const PreprocessManifest& manifest);

// JPEG/PNG decode from disk (backed by OpenCV imgcodecs).
Image decode_image(const std::filesystem::path& path);

// Inference contract. Engines need not be reentrant; callers serialize calls
// on one instance.
class InferenceEngine {
  public:
    virtual ~InferenceEngine() = default;
    virtual std::vector<float> run(const ImageTensor& tensor) = 0;
    virtual std::size_t output_dim() const { return 512; }
    virtual const char* name() const = 0;
};

struct InferenceAdapter {
    std::filesystem::path model_path;
    std::string input_name = "data";
    std::string output_name = "fc1";
    std::string device = "cpu";
};

// Deterministic hash-based pseudo-embeddings; lets the whole pipeline run
// without the 250 MB model asset.
std::unique_ptr<InferenceEngine> make_stub_engine();

// ONNX-backed engine; throws unless the build has an inference runtime.
std::unique_ptr<InferenceEngine> make_onnx_engine(const InferenceAdapter& adapter);

// 512-component raw model output, validated finite. No normalization.
std::vector<float> extract_embedding(InferenceEngine& engine, const ImageTensor& tensor);

struct ExtractionSummary {
    std::size_t female_count = 0;
    std::size_t male_count = 0;
    std::size_t skipped = 0;
};

// Walks root/{female,male}/*.{jpg,jpeg,png} (case-insensitive), one record
// per readable image in lexicographic path order. Unreadable files are
// skipped, logged to stderr and counted in the summary.
EmbeddingDataset extract_directory(InferenceEngine& engine, const std::filesystem::path& root,
                                   const PreprocessManifest& manifest, std::size_t batch = 16,
                                   ExtractionSummary* summary = nullptr);

}  // namespace facetrait
