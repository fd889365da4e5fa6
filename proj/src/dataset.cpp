#include "stylerep/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <unordered_set>

#include <json.hpp>

#include "stylerep/image.hpp"
#include "stylerep/rng.hpp"

namespace fs = std::filesystem;

namespace stylerep {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace

std::vector<int> LabeledDataset::class_counts() const {
    std::vector<int> counts(class_names.size(), 0);
    for (const auto& r : records) {
        if (r.label < 0 || r.label >= classes())
            throw DataError(str("record '", r.id, "' has label ", r.label, " outside [0, ",
                                classes(), ")"));
        ++counts[static_cast<std::size_t>(r.label)];
    }
    return counts;
}

IngestResult ingest(const std::string& images_dir, const std::string& labels_csv) {
    std::ifstream in(labels_csv);
    if (!in) throw DataError(str("cannot open label file '", labels_csv, "'"));

    struct Row {
        std::string id, path, style;
    };
    std::vector<Row> rows;
    std::unordered_set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError(str(labels_csv, ":", line_no, ": expected 'filename,style'"));
        std::string name = trim(line.substr(0, comma));
        std::string style = trim(line.substr(comma + 1));
        if (line_no == 1 && lower(name) == "filename" && lower(style) == "style")
            continue; // header row
        if (name.empty() || style.empty())
            throw DataError(str(labels_csv, ":", line_no, ": empty field"));
        if (!seen.insert(name).second)
            throw DataError(str(labels_csv, ":", line_no, ": duplicate image '", name, "'"));
        rows.push_back({name, (fs::path(images_dir) / name).string(), style});
    }
    if (rows.empty()) throw DataError(str("label file '", labels_csv, "' has no rows"));

    IngestResult result;
    std::vector<Row> kept;
    double sums[3] = {0, 0, 0};
    double pixels = 0;
    for (const auto& row : rows) {
        Tensor img;
        try {
            img = load_image_rgb(row.path);
        } catch (const DataError& e) {
            ++result.skipped;
            result.messages.push_back(str("skipping '", row.id, "': ", e.what()));
            continue;
        }
        const std::size_t plane = img.numel() / 3;
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < plane; ++i)
                sums[c] += img.data[static_cast<std::size_t>(c) * plane + i];
        pixels += static_cast<double>(plane);
        kept.push_back(row);
    }
    if (kept.empty())
        throw DataError(str("no decodable images among ", rows.size(), " rows in '",
                            labels_csv, "'"));

    std::map<std::string, int> styles; // sorted class table
    for (const auto& row : kept) styles.emplace(row.style, 0);
    int next = 0;
    for (auto& [name, label] : styles) {
        label = next++;
        result.dataset.class_names.push_back(name);
    }
    for (const auto& row : kept)
        result.dataset.records.push_back({row.id, row.path, styles.at(row.style)});
    for (int c = 0; c < 3; ++c)
        result.dataset.channel_means[static_cast<std::size_t>(c)] =
            static_cast<float>(sums[c] / pixels);
    return result;
}

LabeledDataset min_class_filter(const LabeledDataset& ds, int min_count) {
    const std::vector<int> counts = ds.class_counts();
    std::vector<int> relabel(counts.size(), -1);
    LabeledDataset out;
    out.channel_means = ds.channel_means;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] >= min_count) {
            relabel[c] = out.classes();
            out.class_names.push_back(ds.class_names[c]);
        }
    }
    if (out.class_names.empty())
        throw DataError(str("no classes remain with at least ", min_count, " images"));
    for (const auto& r : ds.records) {
        const int label = relabel[static_cast<std::size_t>(r.label)];
        if (label >= 0) out.records.push_back({r.id, r.path, label});
    }
    return out;
}

SplitResult stratified_split(const LabeledDataset& ds, double fraction, uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw DataError(str("holdout fraction ", fraction, " outside (0, 1)"));

    std::vector<std::vector<std::size_t>> by_class(ds.class_names.size());
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        by_class[static_cast<std::size_t>(ds.records[i].label)].push_back(i);

    SplitResult result;
    std::vector<bool> to_val(ds.records.size(), false);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& indices = by_class[c];
        const auto count = static_cast<long long>(indices.size());
        if (count == 0) continue;
        long long k = std::llround(fraction * static_cast<double>(count));
        if (k == 0 && static_cast<double>(count) * fraction >= 1.0) k = 1;
        if (k >= count) {
            k = count - 1;
            result.warnings.push_back(
                str("class '", ds.class_names[c], "' has ", count,
                    k == 0 ? " image; keeping it in train"
                           : " images; capping validation share to keep train nonempty"));
        }
        Rng rng(mix_seed(seed, static_cast<uint64_t>(c)));
        rng.shuffle(indices);
        for (long long i = 0; i < k; ++i) to_val[indices[static_cast<std::size_t>(i)]] = true;
    }

    result.train.class_names = result.validation.class_names = ds.class_names;
    result.train.channel_means = result.validation.channel_means = ds.channel_means;
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        (to_val[i] ? result.validation : result.train).records.push_back(ds.records[i]);
    return result;
}

void save_manifest(const LabeledDataset& ds, const std::string& path) {
    nlohmann::json j;
    j["classes"] = ds.class_names;
    j["channel_means"] = {ds.channel_means[0], ds.channel_means[1], ds.channel_means[2]};
    auto& recs = j["records"] = nlohmann::json::array();
    for (const auto& r : ds.records)
        recs.push_back({{"id", r.id}, {"path", r.path}, {"label", r.label}});
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError(str("cannot open '", path, "' for writing"));
    out << j.dump(2) << '\n';
    if (!out.flush()) throw DataError(str("write to '", path, "' failed"));
}

LabeledDataset load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(str("cannot open manifest '", path, "'"));
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError(str("manifest '", path, "' is not valid JSON"));

    LabeledDataset ds;
    try {
        ds.class_names = j.at("classes").get<std::vector<std::string>>();
        const auto means = j.at("channel_means").get<std::vector<float>>();
        if (means.size() != 3)
            throw DataError(str("manifest '", path, "' has ", means.size(),
                                " channel means, expected 3"));
        std::copy(means.begin(), means.end(), ds.channel_means.begin());
        for (const auto& r : j.at("records")) {
            ds.records.push_back({r.at("id").get<std::string>(),
                                  r.at("path").get<std::string>(), r.at("label").get<int>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(str("manifest '", path, "': ", e.what()));
    }
    ds.class_counts(); // validates label range
    return ds;
}

} // namespace stylerep
