#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "facetrait/baselines.hpp"
#include "facetrait/kernel_svm.hpp"
#include "facetrait/mlp.hpp"
#include "facetrait/trees.hpp"
#include "facetrait/types.hpp"

namespace facetrait {

using AnyModel = std::variant<SvmModel, LogRegModel, LdaModel, GnbModel, KnnModel, DecisionTree,
                              EnsembleModel, MlpModel>;

// "svm", "logreg", "lda", "gnb", "knn", "tree", "bagging", "adaboost",
// "rusboost", "subspace" or "mlp"
const char* family_tag(const AnyModel& model);

std::size_t model_dimension(const AnyModel& model);
GenderLabel model_predict(const AnyModel& model, std::span<const float> x);
// a continuous score, higher = more Male; used for ROC sweeps
double model_male_score(const AnyModel& model, std::span<const float> x);

struct ModelArtifact {
    AnyModel model;
    std::string config_echo;  // JSON text of the configuration that built the model
    std::uint64_t created_unix = 0;
    std::uint64_t dataset_fingerprint = 0;  // CRC-32 of the training AEF bytes, 0 if unknown

    static constexpr std::uint32_t kFormatVersion = 1;
};

// FTM1 container: "FTM1" | version | family tag | configuration block |
// payload block | CRC-32 of all prior bytes. Checksum or version mismatch is
// always rejected, never migrated.
std::vector<std::uint8_t> serialize_model(const ModelArtifact& artifact);
ModelArtifact deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelArtifact& artifact, const std::filesystem::path& path);
ModelArtifact load_model(const std::filesystem::path& path);

// CRC-32 of a whole file; the dataset fingerprint stored in artifacts.
std::uint64_t fingerprint_file(const std::filesystem::path& path);

// CRC-32 used by the FTM1 trailer, exposed for byte-level container tests.
std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace facetrait
