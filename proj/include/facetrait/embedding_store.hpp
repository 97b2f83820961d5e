#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "facetrait/types.hpp"

namespace facetrait {

// AEF container, little-endian:
//   "AEF1" | count u32 | dimension u32 | 4 zero bytes |
//   per record: label byte (0/1) + dimension * float32
// Round-trips are byte-exact on the feature components.

void save_aef(const EmbeddingDataset& dataset, const std::filesystem::path& path);
EmbeddingDataset load_aef(const std::filesystem::path& path);

// One record per line, `label,f1,...,fD`, no header. Label is 0/1 or
// female/male (case-insensitive).
EmbeddingDataset load_csv(const std::filesystem::path& path, std::size_t dimension);

// Scales every record to unit Euclidean norm. Opt-in; the default pipeline
// runs on raw features.
EmbeddingDataset l2_normalize(const EmbeddingDataset& dataset);

// Deterministic per-class split: the first part receives
// round(fraction * class_count) records of each class. Parts keep the
// input's relative record order.
std::pair<EmbeddingDataset, EmbeddingDataset> stratified_split(const EmbeddingDataset& dataset,
                                                               double fraction,
                                                               std::uint64_t seed);

}  // namespace facetrait
