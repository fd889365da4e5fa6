#include <doctest.h>

#include <filesystem>
#include <map>

#include "stylerep/bytes.hpp"
#include "stylerep/feature_store.hpp"
#include "stylerep/network.hpp"

using namespace stylerep;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void drop(const std::string& path) { std::filesystem::remove(path); }

StoreRecord sample_record(const std::string& id, uint32_t label) {
    StoreRecord r;
    r.id = id;
    r.label = label;
    r.layers.push_back({"ReLU1_1", {1.0f, 2.0f, 3.0f}});
    r.layers.push_back({"ReLU2_1", {4.5f, -4.5f}});
    return r;
}

} // namespace

TEST_CASE("weight container framing: sorted names, exact byte layout") {
    std::map<std::string, Tensor> tensors;
    tensors["b.weight"] = Tensor({2}, {1.5f, -2.0f});
    tensors["a.bias"] = Tensor({1, 2}, {3.0f, 4.0f});
    const std::string path = temp_path("sr_container_a.nsw");
    save_weight_container(tensors, path);

    const std::string bytes = read_file_bytes(path);
    ByteCursor cur{bytes, 0, path};
    CHECK(cur.string(4) == "NSW1");
    CHECK(cur.u32() == 1); // version
    CHECK(cur.u32() == 2); // tensor count
    // "a.bias" sorts before "b.weight".
    CHECK(cur.u16() == 6);
    CHECK(cur.string(6) == "a.bias");
    CHECK(cur.u8() == 2);
    CHECK(cur.u32() == 1);
    CHECK(cur.u32() == 2);
    CHECK(cur.f32() == 3.0f);
    CHECK(cur.f32() == 4.0f);
    CHECK(cur.u16() == 8);
    CHECK(cur.string(8) == "b.weight");
    CHECK(cur.u8() == 1);
    CHECK(cur.u32() == 2);
    CHECK(cur.f32() == 1.5f);
    CHECK(cur.f32() == -2.0f);
    CHECK(cur.done());

    // Load -> save -> identical bytes.
    std::map<std::string, Tensor> back = load_weight_container(path);
    REQUIRE(back.size() == 2);
    CHECK(back.at("a.bias").shape == std::vector<int>{1, 2});
    CHECK(back.at("b.weight").data == tensors.at("b.weight").data);
    const std::string path2 = temp_path("sr_container_b.nsw");
    save_weight_container(back, path2);
    CHECK(read_file_bytes(path2) == bytes);
}

TEST_CASE("weight container load rejects damaged files") {
    std::map<std::string, Tensor> tensors;
    tensors["t.weight"] = Tensor({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
    const std::string good = temp_path("sr_container_good.nsw");
    save_weight_container(tensors, good);
    const std::string bytes = read_file_bytes(good);
    const std::string bad = temp_path("sr_container_bad.nsw");

    std::string x = bytes;
    x[0] = 'Z';
    write_file_bytes(bad, x);
    CHECK_THROWS_WITH_AS(load_weight_container(bad), doctest::Contains("bad magic"), DataError);

    x = bytes;
    x[4] = 9; // version
    write_file_bytes(bad, x);
    CHECK_THROWS_WITH_AS(load_weight_container(bad), doctest::Contains("version"), DataError);

    write_file_bytes(bad, bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_WITH_AS(load_weight_container(bad), doctest::Contains("truncated"), DataError);

    write_file_bytes(bad, bytes + "xx");
    CHECK_THROWS_WITH_AS(load_weight_container(bad), doctest::Contains("trailing"), DataError);

    write_file_bytes(bad, "");
    CHECK_THROWS_AS(load_weight_container(bad), DataError);

    // Hand-built container holding the same tensor name twice.
    std::string dup;
    dup.append("NSW1");
    put_u32(dup, 1);
    put_u32(dup, 2);
    for (int rep = 0; rep < 2; ++rep) {
        put_u16(dup, 4);
        dup.append("x.bv");
        put_u8(dup, 1);
        put_u32(dup, 1);
        put_f32(dup, 7.0f);
    }
    write_file_bytes(bad, dup);
    CHECK_THROWS_WITH_AS(load_weight_container(bad), doctest::Contains("duplicate"), DataError);

    // Zero extent is meaningless.
    std::string zero;
    zero.append("NSW1");
    put_u32(zero, 1);
    put_u32(zero, 1);
    put_u16(zero, 1);
    zero.append("t");
    put_u8(zero, 1);
    put_u32(zero, 0);
    write_file_bytes(bad, zero);
    CHECK_THROWS_WITH_AS(load_weight_container(bad), doctest::Contains("extent"), DataError);
}

TEST_CASE("store records are self-delimiting and round-trip") {
    StoreRecord a = sample_record("alpha.png", 3);
    StoreRecord b = sample_record("beta.png", kUnlabeled);
    const std::string stream = encode_record(a) + encode_record(b);

    std::size_t pos = 0;
    StoreRecord a2 = decode_record(stream, pos, "stream");
    CHECK(pos == encode_record(a).size());
    StoreRecord b2 = decode_record(stream, pos, "stream");
    CHECK(pos == stream.size());

    CHECK(a2.id == "alpha.png");
    CHECK(a2.label == 3);
    REQUIRE(a2.layers.size() == 2);
    CHECK(a2.layers[0].name == "ReLU1_1");
    CHECK(a2.layers[0].values == std::vector<float>{1.0f, 2.0f, 3.0f});
    CHECK(a2.layers[1].values == std::vector<float>{4.5f, -4.5f});
    CHECK(b2.label == kUnlabeled);

    // Re-encoding the decoded records reproduces the stream byte for byte.
    CHECK(encode_record(a2) + encode_record(b2) == stream);

    std::string broken = stream;
    broken[0] = 'Q';
    pos = 0;
    CHECK_THROWS_WITH_AS(decode_record(broken, pos, "stream"), doctest::Contains("magic"),
                         DataError);
    pos = 0;
    const std::string cut = stream.substr(0, 10);
    CHECK_THROWS_WITH_AS(decode_record(cut, pos, "stream"), doctest::Contains("truncated"),
                         DataError);

    StoreRecord nameless;
    nameless.label = 0;
    CHECK_THROWS_AS(encode_record(nameless), DataError);
}

TEST_CASE("store writer keeps the sidecar manifest in sync") {
    const std::string store = temp_path("sr_store_sync.nsf");
    drop(store);
    drop(store_manifest_path(store));
    CHECK(load_store_manifest(store).empty()); // missing = fresh

    FeatureStoreWriter writer(store, FeatureStoreWriter::Mode::Truncate);
    const uint64_t o1 = writer.append(sample_record("a.png", 0));
    const uint64_t o2 = writer.append(sample_record("b.png", 2));
    const uint64_t o3 = writer.append(sample_record("c.png", kUnlabeled));
    writer.close();
    CHECK(o1 == 0);
    CHECK(o2 > o1);
    CHECK(o3 > o2);

    std::vector<ManifestEntry> manifest = load_store_manifest(store);
    REQUIRE(manifest.size() == 3);
    CHECK(manifest[0].id == "a.png");
    CHECK(manifest[1].label == 2);
    CHECK(manifest[2].label == kUnlabeled);
    CHECK(manifest[2].offset == o3);

    StoreRecord mid = read_record_at(store, o2);
    CHECK(mid.id == "b.png");
    CHECK_THROWS_WITH_AS(read_record_at(store, 1u << 20), doctest::Contains("beyond"), DataError);

    // Ids that would corrupt the CSV are rejected.
    FeatureStoreWriter more(store, FeatureStoreWriter::Mode::Append);
    CHECK_THROWS_AS(more.append(sample_record("a,b.png", 0)), DataError);
    CHECK_THROWS_AS(more.append(sample_record("a\nb.png", 0)), DataError);
}

TEST_CASE("append mode resumes at the end of the store") {
    const std::string store = temp_path("sr_store_resume.nsf");
    drop(store);
    drop(store_manifest_path(store));

    FeatureStoreWriter first(store, FeatureStoreWriter::Mode::Truncate);
    first.append(sample_record("a.png", 0));
    first.append(sample_record("b.png", 1));
    first.close();
    const auto before = std::filesystem::file_size(store);

    FeatureStoreWriter second(store, FeatureStoreWriter::Mode::Append);
    const uint64_t o3 = second.append(sample_record("c.png", 0));
    second.close();
    CHECK(o3 == before);

    std::vector<ManifestEntry> manifest = load_store_manifest(store);
    REQUIRE(manifest.size() == 3);
    CHECK(manifest[2].id == "c.png");

    LayerMatrix all = load_layer_matrix(store, "all");
    CHECK(all.ids == std::vector<std::string>{"a.png", "b.png", "c.png"});
}

TEST_CASE("layer matrices assemble rows in manifest order") {
    const std::string store = temp_path("sr_store_matrix.nsf");
    drop(store);
    drop(store_manifest_path(store));

    FeatureStoreWriter writer(store, FeatureStoreWriter::Mode::Truncate);
    writer.append(sample_record("a.png", 1));
    writer.append(sample_record("b.png", kUnlabeled));
    writer.close();

    LayerMatrix one = load_layer_matrix(store, "ReLU1_1");
    CHECK(one.features.rows == 2);
    CHECK(one.features.cols == 3);
    CHECK(one.labels == std::vector<int>{1, -1}); // unlabeled maps to -1
    CHECK(one.features.at(1, 2) == 3.0f);

    // Layer lookup ignores case; "all" concatenates in stored order.
    LayerMatrix two = load_layer_matrix(store, "relu2_1");
    CHECK(two.features.cols == 2);
    CHECK(two.features.at(0, 1) == -4.5f);
    LayerMatrix all = load_layer_matrix(store, "all");
    CHECK(all.features.cols == 5);
    CHECK(all.features.at(0, 3) == 4.5f);

    CHECK_THROWS_WITH_AS(load_layer_matrix(store, "ReLU9_9"), doctest::Contains("no layer"),
                         DataError);

    // A record whose layer layout disagrees with the first is rejected.
    FeatureStoreWriter more(store, FeatureStoreWriter::Mode::Append);
    StoreRecord odd;
    odd.id = "odd.png";
    odd.label = 0;
    odd.layers.push_back({"ReLU1_1", {9.0f, 9.0f, 9.0f}});
    more.append(odd);
    more.close();
    CHECK_THROWS_WITH_AS(load_layer_matrix(store, "all"), doctest::Contains("differs"), DataError);
}

TEST_CASE("store bytes survive a decode / re-encode cycle unchanged") {
    const std::string store = temp_path("sr_store_cycle.nsf");
    drop(store);
    drop(store_manifest_path(store));

    FeatureStoreWriter writer(store, FeatureStoreWriter::Mode::Truncate);
    for (int i = 0; i < 4; ++i)
        writer.append(sample_record("img" + std::to_string(i) + ".png",
                                    i == 2 ? kUnlabeled : static_cast<uint32_t>(i)));
    writer.close();

    const std::string bytes = read_file_bytes(store);
    std::string rebuilt;
    std::size_t pos = 0;
    while (pos < bytes.size()) rebuilt += encode_record(decode_record(bytes, pos, store));
    CHECK(rebuilt == bytes);
}
