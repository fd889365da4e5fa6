#pragma once

// Binary feature store: one self-delimiting record per image holding that
// image's named per-layer feature vectors, indexed by a CSV sidecar manifest
// of (id, label, byte offset).

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "stylerep/errors.hpp"
#include "stylerep/features.hpp"

namespace stylerep {

inline constexpr uint32_t kUnlabeled = 0xFFFFFFFFu;

struct StoreLayer {
    std::string name;
    std::vector<float> values;
};

struct StoreRecord {
    std::string id;
    uint32_t label = kUnlabeled;
    std::vector<StoreLayer> layers;
};

std::string encode_record(const StoreRecord& record);
StoreRecord decode_record(const std::string& bytes, std::size_t& pos, const std::string& where);

struct ManifestEntry {
    std::string id;
    uint32_t label = kUnlabeled;
    uint64_t offset = 0;
};

// Reads the sidecar manifest next to `store_path`; a missing file is an empty
// store (fresh extraction), a malformed one is an error.
std::string store_manifest_path(const std::string& store_path);
std::vector<ManifestEntry> load_store_manifest(const std::string& store_path);

// Appends records to a store file and keeps the sidecar manifest in sync.
class FeatureStoreWriter {
  public:
    enum class Mode { Truncate, Append };
    FeatureStoreWriter(const std::string& store_path, Mode mode);

    uint64_t append(const StoreRecord& record); // returns the record's offset
    void close();

  private:
    std::string store_path_;
    uint64_t offset_ = 0;
    std::ofstream store_;
    std::ofstream manifest_;
};

StoreRecord read_record_at(const std::string& store_path, uint64_t offset);

// Dense design matrix for one layer (or the concatenation of every layer when
// `layer` == "all"), in manifest order. Unlabeled records carry label -1.
struct LayerMatrix {
    FeatureMatrix features{0, 0};
    std::vector<int> labels;
    std::vector<std::string> ids;
};

LayerMatrix load_layer_matrix(const std::string& store_path, const std::string& layer);

} // namespace stylerep
