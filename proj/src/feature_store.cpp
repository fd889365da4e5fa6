#include "stylerep/feature_store.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "stylerep/bytes.hpp"

namespace stylerep {

namespace {

constexpr char kMagic[4] = {'N', 'S', 'F', '1'};
constexpr uint32_t kVersion = 1;

bool iequal(const std::string& a, const std::string& b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

} // namespace

std::string encode_record(const StoreRecord& record) {
    if (record.id.empty()) throw DataError("feature record has an empty image id");
    if (record.id.size() > 0xFFFF)
        throw DataError(str("image id of ", record.id.size(), " bytes exceeds 65535"));
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(record.layers.size()));
    for (const auto& layer : record.layers) {
        if (layer.name.empty() || layer.name.size() > 0xFFFF)
            throw DataError(str("bad layer name length ", layer.name.size(), " in record '",
                                record.id, "'"));
        put_u16(out, static_cast<uint16_t>(layer.name.size()));
        out.append(layer.name);
        put_u32(out, static_cast<uint32_t>(layer.values.size()));
        for (float v : layer.values) put_f32(out, v);
    }
    put_u16(out, static_cast<uint16_t>(record.id.size()));
    out.append(record.id);
    put_u32(out, record.label);
    return out;
}

StoreRecord decode_record(const std::string& bytes, std::size_t& pos,
                          const std::string& where) {
    ByteCursor cur{bytes, pos, where};
    const std::string magic = cur.string(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic))
        throw DataError(str(where, ": bad record magic at byte ", pos));
    const uint32_t version = cur.u32();
    if (version != kVersion)
        throw DataError(str(where, ": unsupported record version ", version));
    StoreRecord rec;
    const uint32_t layer_count = cur.u32();
    rec.layers.reserve(layer_count);
    for (uint32_t l = 0; l < layer_count; ++l) {
        StoreLayer layer;
        layer.name = cur.string(cur.u16());
        const uint32_t len = cur.u32();
        layer.values.resize(len);
        for (uint32_t i = 0; i < len; ++i) layer.values[i] = cur.f32();
        rec.layers.push_back(std::move(layer));
    }
    rec.id = cur.string(cur.u16());
    rec.label = cur.u32();
    pos = cur.pos;
    return rec;
}

std::string store_manifest_path(const std::string& store_path) {
    return store_path + ".csv";
}

std::vector<ManifestEntry> load_store_manifest(const std::string& store_path) {
    std::ifstream in(store_manifest_path(store_path));
    if (!in) return {};
    std::vector<ManifestEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line == "id,label,offset") continue;
        const auto c1 = line.find(',');
        const auto c2 = line.rfind(',');
        if (c1 == std::string::npos || c2 == c1)
            throw DataError(str(store_manifest_path(store_path), ":", line_no,
                                ": expected 'id,label,offset'"));
        ManifestEntry e;
        e.id = line.substr(0, c1);
        const std::string label = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string offset = line.substr(c2 + 1);
        auto parse = [&](const std::string& field, auto& into) {
            const auto r = std::from_chars(field.data(), field.data() + field.size(), into);
            if (r.ec != std::errc{} || r.ptr != field.data() + field.size())
                throw DataError(str(store_manifest_path(store_path), ":", line_no,
                                    ": bad number '", field, "'"));
        };
        parse(label, e.label);
        parse(offset, e.offset);
        entries.push_back(std::move(e));
    }
    return entries;
}

FeatureStoreWriter::FeatureStoreWriter(const std::string& store_path, Mode mode)
    : store_path_(store_path) {
    const bool append = mode == Mode::Append;
    const std::string manifest = store_manifest_path(store_path);
    bool manifest_has_header = false;
    if (append) {
        std::ifstream existing(store_path, std::ios::binary | std::ios::ate);
        if (existing) offset_ = static_cast<uint64_t>(existing.tellg());
        std::ifstream check(manifest);
        std::string first;
        manifest_has_header = static_cast<bool>(std::getline(check, first));
    }
    store_.open(store_path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!store_) throw DataError(str("cannot open store '", store_path, "' for writing"));
    manifest_.open(manifest, std::ios::out | (append ? std::ios::app : std::ios::trunc));
    if (!manifest_) throw DataError(str("cannot open manifest '", manifest, "' for writing"));
    if (!manifest_has_header) manifest_ << "id,label,offset\n";
}

uint64_t FeatureStoreWriter::append(const StoreRecord& record) {
    if (record.id.find(',') != std::string::npos || record.id.find('\n') != std::string::npos)
        throw DataError(str("image id '", record.id, "' cannot be indexed in a CSV manifest"));
    const std::string bytes = encode_record(record);
    const uint64_t at = offset_;
    store_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    manifest_ << record.id << ',' << record.label << ',' << at << '\n';
    if (!store_ || !manifest_)
        throw DataError(str("write to store '", store_path_, "' failed"));
    offset_ += bytes.size();
    return at;
}

void FeatureStoreWriter::close() {
    if (store_.is_open()) {
        store_.flush();
        manifest_.flush();
        if (!store_ || !manifest_)
            throw DataError(str("flush of store '", store_path_, "' failed"));
        store_.close();
        manifest_.close();
    }
}

StoreRecord read_record_at(const std::string& store_path, uint64_t offset) {
    const std::string bytes = read_file_bytes(store_path);
    if (offset >= bytes.size())
        throw DataError(str("offset ", offset, " beyond store '", store_path, "' (",
                            bytes.size(), " bytes)"));
    std::size_t pos = offset;
    return decode_record(bytes, pos, store_path);
}

LayerMatrix load_layer_matrix(const std::string& store_path, const std::string& layer) {
    const std::vector<ManifestEntry> manifest = load_store_manifest(store_path);
    if (manifest.empty())
        throw DataError(str("store '", store_path, "' has no records"));
    const std::string bytes = read_file_bytes(store_path);
    const bool all_layers = layer == "all";

    LayerMatrix out;
    std::vector<std::string> expected_names;
    for (std::size_t r = 0; r < manifest.size(); ++r) {
        std::size_t pos = manifest[r].offset;
        if (pos >= bytes.size())
            throw DataError(str("manifest offset ", pos, " beyond store '", store_path, "'"));
        const StoreRecord rec = decode_record(bytes, pos, store_path);
        if (rec.id != manifest[r].id)
            throw DataError(str("store '", store_path, "': manifest id '", manifest[r].id,
                                "' does not match record id '", rec.id, "'"));

        std::vector<const StoreLayer*> picked;
        if (all_layers) {
            for (const auto& l : rec.layers) picked.push_back(&l);
        } else {
            for (const auto& l : rec.layers)
                if (iequal(l.name, layer)) picked.push_back(&l);
            if (picked.empty())
                throw DataError(str("record '", rec.id, "' has no layer '", layer, "'"));
        }

        std::vector<std::string> names;
        std::size_t width = 0;
        for (const auto* l : picked) {
            names.push_back(l->name);
            width += l->values.size();
        }
        if (r == 0) {
            expected_names = names;
            out.features = FeatureMatrix(static_cast<int>(manifest.size()),
                                         static_cast<int>(width));
        } else if (names != expected_names ||
                   width != static_cast<std::size_t>(out.features.cols)) {
            throw DataError(str("record '", rec.id, "' layer layout differs from record '",
                                manifest[0].id, "'"));
        }

        float* row = out.features.row(static_cast<int>(r)).data();
        std::size_t col = 0;
        for (const auto* l : picked) {
            std::copy(l->values.begin(), l->values.end(), row + col);
            col += l->values.size();
        }
        out.labels.push_back(rec.label == kUnlabeled ? -1 : static_cast<int>(rec.label));
        out.ids.push_back(rec.id);
    }
    return out;
}

} // namespace stylerep
