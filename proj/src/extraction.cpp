#include "stylerep/extraction.hpp"

#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "stylerep/feature_store.hpp"
#include "stylerep/gram.hpp"

namespace stylerep {

ExtractionStats run_extraction(const LabeledDataset& ds, const Network& net,
                               const ExtractionConfig& cfg, const std::string& store_path) {
    if (cfg.taps.empty()) throw DataError("extraction needs at least one tap layer");
    if (cfg.workers < 1) throw DataError(str("worker count ", cfg.workers, " < 1"));
    cfg.pre.validate();

    // Store records under the canonical layer names so later lookups do not
    // depend on how the caller spelled the taps.
    const std::vector<int> tap_indices = net.spec.resolve_taps(cfg.taps);
    std::vector<std::string> tap_names;
    for (int idx : tap_indices)
        tap_names.push_back(net.spec.layers[static_cast<std::size_t>(idx)].name);

    std::unordered_set<std::string> done;
    for (const auto& entry : load_store_manifest(store_path)) done.insert(entry.id);

    ExtractionStats stats;
    std::vector<const DatasetRecord*> todo;
    for (const auto& rec : ds.records) {
        if (done.count(rec.id)) {
            ++stats.resumed;
        } else {
            todo.push_back(&rec);
        }
    }

    FeatureStoreWriter writer(store_path,
                              done.empty() ? FeatureStoreWriter::Mode::Truncate
                                           : FeatureStoreWriter::Mode::Append);

    // Workers fill a chunk of records in parallel; the single writer then
    // appends them in dataset order so the store does not depend on timing.
    struct Slot {
        StoreRecord record;
        bool ok = false;
        std::string message;
        std::string fatal; // structural error; aborts the whole extraction
    };
    const std::size_t chunk = static_cast<std::size_t>(cfg.workers) * 4;
    for (std::size_t base = 0; base < todo.size(); base += chunk) {
        const std::size_t n = std::min(chunk, todo.size() - base);
        std::vector<Slot> slots(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(cfg.workers)
#endif
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
            const DatasetRecord& rec = *todo[base + static_cast<std::size_t>(i)];
            Slot& slot = slots[static_cast<std::size_t>(i)];
            try {
                const Tensor image = preprocess_image(rec.path, cfg.pre);
                const StyleFeature feat = extract_style_features(net, image, tap_names, rec.id);
                slot.record.id = rec.id;
                slot.record.label =
                    rec.label >= 0 ? static_cast<uint32_t>(rec.label) : kUnlabeled;
                for (std::size_t t = 0; t < tap_names.size(); ++t)
                    slot.record.layers.push_back({tap_names[t], feat.flattened[t]});
                slot.ok = true;
            } catch (const DataError& e) {
                slot.message = str("skipping '", rec.id, "': ", e.what());
            } catch (const std::exception& e) {
                // Geometry/numeric failures hit every image alike; letting
                // them escape an OpenMP region would terminate the process,
                // so carry them out and rethrow below.
                slot.fatal = str("extraction of '", rec.id, "' failed: ", e.what());
            }
        }
        for (auto& slot : slots) {
            if (!slot.fatal.empty()) throw DataError(slot.fatal);
            if (slot.ok) {
                writer.append(slot.record);
                ++stats.written;
            } else {
                ++stats.failed;
                stats.messages.push_back(std::move(slot.message));
            }
        }
    }
    writer.close();
    return stats;
}

} // namespace stylerep
