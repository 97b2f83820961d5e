#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace facetrait {

// Canonical label encoding: Female=0, Male=1, everywhere (files, confusion
// indexing, signed SVM labels derive from this).
enum class GenderLabel : std::uint8_t { Female = 0, Male = 1 };

inline const char* to_string(GenderLabel g) {
    return g == GenderLabel::Female ? "female" : "male";
}

// Error taxonomy. Everything user-facing derives from Error so the CLI can
// catch one type and print a one-line diagnostic.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class StorageError : public Error {
  public:
    using Error::Error;
};
class FormatError : public Error {
  public:
    using Error::Error;
};
class ParseError : public Error {
  public:
    using Error::Error;
};
class ValidationError : public Error {
  public:
    using Error::Error;
};
class ContractError : public Error {
  public:
    using Error::Error;
};
class TrainingError : public Error {
  public:
    using Error::Error;
};
class NumericError : public Error {
  public:
    using Error::Error;
};
class CorruptionError : public Error {
  public:
    using Error::Error;
};

struct EmbeddingRecord {
    std::vector<float> features;  // stored at 32-bit; downstream math is 64-bit
    GenderLabel label = GenderLabel::Female;
};

class EmbeddingDataset {
  public:
    EmbeddingDataset() = default;
    EmbeddingDataset(std::size_t dimension, std::string source_tag = {})
        : dimension_(dimension), source_tag_(std::move(source_tag)) {}

    void add(EmbeddingRecord rec) {
        if (rec.features.size() != dimension_)
            throw ContractError("record dimension " + std::to_string(rec.features.size()) +
                                " does not match dataset dimension " + std::to_string(dimension_));
        records_.push_back(std::move(rec));
    }

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const EmbeddingRecord& operator[](std::size_t i) const { return records_[i]; }
    const std::vector<EmbeddingRecord>& records() const { return records_; }
    const std::string& source_tag() const { return source_tag_; }
    void set_source_tag(std::string tag) { source_tag_ = std::move(tag); }

    std::span<const float> features(std::size_t i) const { return records_[i].features; }
    GenderLabel label(std::size_t i) const { return records_[i].label; }

    std::size_t count(GenderLabel g) const {
        std::size_t n = 0;
        for (const auto& r : records_)
            if (r.label == g) ++n;
        return n;
    }

  private:
    std::size_t dimension_ = 0;
    std::vector<EmbeddingRecord> records_;
    std::string source_tag_;
};

}  // namespace facetrait
