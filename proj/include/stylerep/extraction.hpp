#pragma once

// Batch style-feature extraction: preprocess every dataset image, run the
// extractor network, and append one feature-store record per image.

#include <string>
#include <vector>

#include "stylerep/dataset.hpp"
#include "stylerep/image.hpp"
#include "stylerep/network.hpp"

namespace stylerep {

struct ExtractionConfig {
    std::vector<std::string> taps;
    PreprocessConfig pre;
    int workers = 1;
};

struct ExtractionStats {
    int written = 0;
    int resumed = 0; // ids already present in the store manifest
    int failed = 0;  // undecodable images, logged and skipped
    std::vector<std::string> messages;
};

// Appends records for every dataset image not already indexed by the store
// manifest. Records land in dataset order regardless of worker count, so a
// completed store is byte-identical for any --workers value.
ExtractionStats run_extraction(const LabeledDataset& ds, const Network& net,
                               const ExtractionConfig& cfg, const std::string& store_path);

} // namespace stylerep
