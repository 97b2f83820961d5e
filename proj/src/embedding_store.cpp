#include "facetrait/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "facetrait/rng.hpp"

namespace facetrait {

namespace {

constexpr char kMagic[4] = {'A', 'E', 'F', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    char buf[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                   static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(buf, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void save_aef(const EmbeddingDataset& dataset, const std::filesystem::path& path) {
    for (std::size_t i = 0; i < dataset.size(); ++i)
        for (float v : dataset[i].features)
            if (!std::isfinite(v))
                throw ValidationError("non-finite feature component in record " +
                                      std::to_string(i));

    std::ofstream os(path, std::ios::binary);
    if (!os) throw StorageError("cannot open for writing: " + path.string());
    os.write(kMagic, 4);
    put_u32(os, static_cast<std::uint32_t>(dataset.size()));
    put_u32(os, static_cast<std::uint32_t>(dataset.dimension()));
    const char zeros[4] = {0, 0, 0, 0};
    os.write(zeros, 4);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        char label = static_cast<char>(dataset[i].label);
        os.write(&label, 1);
        static_assert(sizeof(float) == 4);
        // float32 components are written verbatim; host is little-endian
        os.write(reinterpret_cast<const char*>(dataset[i].features.data()),
                 static_cast<std::streamsize>(dataset.dimension() * 4));
    }
    if (!os) throw StorageError("write failed: " + path.string());
}

EmbeddingDataset load_aef(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw StorageError("cannot open: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("not an AEF file: " + path.string());
    std::uint32_t count = get_u32(bytes.data() + 4);
    std::uint32_t dim = get_u32(bytes.data() + 8);
    std::size_t record_bytes = 1 + static_cast<std::size_t>(dim) * 4;
    if (bytes.size() != 16 + static_cast<std::size_t>(count) * record_bytes)
        throw FormatError("AEF file truncated or oversized: " + path.string() + " (declares " +
                          std::to_string(count) + " records of dim " + std::to_string(dim) + ")");

    EmbeddingDataset ds(dim);
    const unsigned char* p = bytes.data() + 16;
    for (std::uint32_t i = 0; i < count; ++i) {
        unsigned char lb = *p++;
        if (lb > 1)
            throw FormatError("bad label byte " + std::to_string(lb) + " in record " +
                              std::to_string(i));
        EmbeddingRecord rec;
        rec.label = static_cast<GenderLabel>(lb);
        rec.features.resize(dim);
        std::memcpy(rec.features.data(), p, static_cast<std::size_t>(dim) * 4);
        p += static_cast<std::size_t>(dim) * 4;
        ds.add(std::move(rec));
    }
    return ds;
}

EmbeddingDataset load_csv(const std::filesystem::path& path, std::size_t dimension) {
    std::ifstream is(path);
    if (!is) throw StorageError("cannot open: " + path.string());
    EmbeddingDataset ds(dimension);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != dimension + 1)
            throw ParseError("line " + std::to_string(lineno) + ": expected " +
                             std::to_string(dimension + 1) + " fields, got " +
                             std::to_string(fields.size()));

        EmbeddingRecord rec;
        std::string lab = fields[0];
        std::transform(lab.begin(), lab.end(), lab.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (lab == "0" || lab == "female")
            rec.label = GenderLabel::Female;
        else if (lab == "1" || lab == "male")
            rec.label = GenderLabel::Male;
        else
            throw ParseError("line " + std::to_string(lineno) + ": bad label '" + fields[0] + "'");

        rec.features.reserve(dimension);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            try {
                std::size_t pos = 0;
                float v = std::stof(fields[c], &pos);
                if (pos != fields[c].size()) throw std::invalid_argument("trailing garbage");
                rec.features.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(lineno) + ", column " +
                                 std::to_string(c + 1) + ": cannot parse '" + fields[c] + "'");
            }
        }
        ds.add(std::move(rec));
    }
    return ds;
}

EmbeddingDataset l2_normalize(const EmbeddingDataset& dataset) {
    EmbeddingDataset out(dataset.dimension(), dataset.source_tag());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& rec = dataset[i];
        double sq = 0.0;
        for (float v : rec.features) sq += static_cast<double>(v) * v;
        if (sq == 0.0)
            throw ValidationError("zero-norm record at index " + std::to_string(i));
        double inv = 1.0 / std::sqrt(sq);
        EmbeddingRecord nr;
        nr.label = rec.label;
        nr.features.reserve(rec.features.size());
        for (float v : rec.features) nr.features.push_back(static_cast<float>(v * inv));
        out.add(std::move(nr));
    }
    return out;
}

std::pair<EmbeddingDataset, EmbeddingDataset> stratified_split(const EmbeddingDataset& dataset,
                                                               double fraction,
                                                               std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ContractError("fraction must lie in (0,1)");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < dataset.size(); ++i)
        by_class[static_cast<std::size_t>(dataset[i].label)].push_back(i);
    for (int c = 0; c < 2; ++c)
        if (by_class[c].size() < 2)
            throw TrainingError(std::string("class ") + (c == 0 ? "female" : "male") +
                                " has fewer than 2 records");

    std::vector<bool> in_first(dataset.size(), false);
    Rng rng(seed);
    for (int c = 0; c < 2; ++c) {
        auto idx = by_class[c];
        rng.shuffle(idx);
        auto take = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < take; ++k) in_first[idx[k]] = true;
    }

    EmbeddingDataset a(dataset.dimension(), dataset.source_tag());
    EmbeddingDataset b(dataset.dimension(), dataset.source_tag());
    for (std::size_t i = 0; i < dataset.size(); ++i)
        (in_first[i] ? a : b).add(dataset[i]);
    return {std::move(a), std::move(b)};
}

}  // namespace facetrait
