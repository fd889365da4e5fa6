#pragma once

// Labeled image datasets: ingestion from a label CSV, JSON manifests, and
// stratified train/validation splitting.

#include <array>
#include <string>
#include <vector>

#include "stylerep/errors.hpp"

namespace stylerep {

struct DatasetRecord {
    std::string id;   // label-file image name, unique within the dataset
    std::string path; // absolute or manifest-relative image path
    int label = -1;   // index into LabeledDataset::class_names
};

struct LabeledDataset {
    std::vector<DatasetRecord> records;
    std::vector<std::string> class_names;        // sorted, label i = class_names[i]
    std::array<float, 3> channel_means{0, 0, 0}; // dataset RGB means in [0,255]

    int classes() const { return static_cast<int>(class_names.size()); }
    std::vector<int> class_counts() const;
};

struct IngestResult {
    LabeledDataset dataset;
    int skipped = 0; // rows whose image was missing or undecodable
    std::vector<std::string> messages;
};

// Reads a `filename,style` CSV and verifies every referenced image decodes.
// Unreadable images are skipped (counted, not fatal); class names are the
// sorted set of styles that survive. Channel means come from the kept images.
IngestResult ingest(const std::string& images_dir, const std::string& labels_csv);

// Drops classes with fewer than `min_count` records and relabels densely.
LabeledDataset min_class_filter(const LabeledDataset& ds, int min_count);

struct SplitResult {
    LabeledDataset train;
    LabeledDataset validation;
    std::vector<std::string> warnings;
};

// Samples round(fraction * count) records per class into the validation set
// (at least one when the class is large enough to afford it); a single-record
// class stays wholly in train with a warning. Record order is preserved.
SplitResult stratified_split(const LabeledDataset& ds, double fraction, uint64_t seed);

void save_manifest(const LabeledDataset& ds, const std::string& path);
LabeledDataset load_manifest(const std::string& path);

} // namespace stylerep
