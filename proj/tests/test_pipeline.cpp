#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "stylerep/bytes.hpp"
#include "stylerep/dataset.hpp"
#include "stylerep/extraction.hpp"
#include "stylerep/feature_store.hpp"
#include "stylerep/gram.hpp"
#include "stylerep/image.hpp"

using namespace stylerep;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Deterministic integer-valued image so PNG encoding is lossless.
Tensor synth_image(int h, int w, int salt) {
    Tensor t = Tensor::zeros({3, h, w});
    std::size_t i = 0;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x, ++i)
                t.data[i] = static_cast<float>((salt * 31 + c * 37 + y * 11 + x * 5) % 256);
    return t;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

// Hand-built dataset over fake paths for split/filter tests.
LabeledDataset fake_dataset(const std::vector<int>& class_sizes) {
    LabeledDataset ds;
    for (std::size_t c = 0; c < class_sizes.size(); ++c)
        ds.class_names.push_back("class" + std::to_string(c));
    int serial = 0;
    for (std::size_t c = 0; c < class_sizes.size(); ++c)
        for (int i = 0; i < class_sizes[c]; ++i, ++serial)
            ds.records.push_back({"img" + std::to_string(serial) + ".png",
                                  "/nowhere/img" + std::to_string(serial) + ".png",
                                  static_cast<int>(c)});
    return ds;
}

std::vector<std::string> ids_of(const LabeledDataset& ds) {
    std::vector<std::string> out;
    for (const auto& r : ds.records) out.push_back(r.id);
    return out;
}

NetworkSpec tiny_extractor() {
    NetworkSpec s;
    s.in_channels = 3;
    s.layers = {
        LayerSpec::conv("c1", 3, 2), LayerSpec::leaky_relu("r1", 0.0f), LayerSpec::max_pool("p1"),
        LayerSpec::conv("c2", 2, 3), LayerSpec::leaky_relu("r2", 0.0f),
    };
    return s;
}

} // namespace

TEST_CASE("png files round-trip integer pixel values") {
    fs::path dir = fresh_dir("sr_png_rt");
    Tensor img = synth_image(9, 7, 1);
    const std::string path = (dir / "t.png").string();
    save_png(path, img);
    Tensor back = load_image_rgb(path);
    CHECK(back.shape == img.shape);
    CHECK(back.data == img.data);

    // Fractional values are rounded to the nearest 8-bit level.
    Tensor frac = Tensor::full({3, 2, 2}, 3.4f);
    save_png(path, frac);
    Tensor rounded = load_image_rgb(path);
    for (float v : rounded.data) CHECK(v == 3.0f);

    CHECK_THROWS_AS(load_image_rgb((dir / "absent.png").string()), DataError);
}

TEST_CASE("resize_shorter brings the short side to the target") {
    Tensor tall = Tensor::full({3, 40, 20}, 42.0f);
    Tensor out = resize_shorter(tall, 10);
    CHECK(out.shape == std::vector<int>{3, 20, 10});
    for (float v : out.data) CHECK(v == doctest::Approx(42.0f));

    Tensor wide = Tensor::full({3, 16, 48}, 7.0f);
    CHECK(resize_shorter(wide, 8).shape == std::vector<int>{3, 8, 24});

    // Already at target: bit-identical pass-through.
    Tensor same = synth_image(10, 13, 2);
    CHECK(resize_shorter(same, 10).data == same.data);
}

TEST_CASE("center_crop takes the middle window") {
    Tensor img = Tensor::zeros({1, 6, 8});
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x) img.data[static_cast<std::size_t>(y) * 8 + x] = y * 10.0f + x;
    Tensor crop = center_crop(img, 4);
    CHECK(crop.shape == std::vector<int>{1, 4, 4});
    CHECK(crop.data.front() == 12.0f); // row 1, col 2
    CHECK(crop.data.back() == 45.0f);  // row 4, col 5
    CHECK_THROWS_AS(center_crop(img, 7), ShapeError);
}

TEST_CASE("preprocess chain: resize, crop, mean subtraction, flip") {
    PreprocessConfig cfg;
    cfg.resize = 12;
    cfg.crop = 8;
    cfg.channel_means = {10.0f, 20.0f, 30.0f};

    // An image equal to the means everywhere preprocesses to all zeros.
    Tensor flat = Tensor::zeros({3, 16, 16});
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 256; ++i)
            flat.data[static_cast<std::size_t>(c) * 256 + i] = cfg.channel_means[static_cast<std::size_t>(c)];
    Tensor zero = preprocess_tensor(flat, cfg);
    CHECK(zero.shape == std::vector<int>{3, 8, 8});
    for (float v : zero.data) CHECK(v == doctest::Approx(0.0f));

    // Flipping inside the chain equals flipping the chained output.
    Tensor img = synth_image(20, 24, 3);
    PreprocessConfig flip = cfg;
    flip.hflip = true;
    CHECK(preprocess_tensor(img, flip).data == hflip_chw(preprocess_tensor(img, cfg)).data);

    PreprocessConfig bad = cfg;
    bad.crop = 0;
    CHECK_THROWS_AS(preprocess_tensor(img, bad), DataError);
    bad = cfg;
    bad.resize = 4; // smaller than crop
    CHECK_THROWS_AS(preprocess_tensor(img, bad), DataError);
    bad = cfg;
    bad.channel_means = {1.0f, 2.0f}; // must cover all three channels
    CHECK_THROWS_AS(preprocess_tensor(img, bad), ShapeError);
}

TEST_CASE("ingest reads the label csv and skips broken images") {
    fs::path dir = fresh_dir("sr_ingest");
    std::vector<Tensor> imgs;
    for (int i = 0; i < 4; ++i) {
        imgs.push_back(synth_image(10, 10, i));
        save_png((dir / ("img" + std::to_string(i) + ".png")).string(), imgs.back());
    }
    write_text(dir / "corrupt.png", "this is not a png");
    const fs::path csv = dir / "labels.csv";
    write_text(csv, "filename,style\n"
                    "img0.png,impressionism\n"
                    "img1.png, baroque\n" // padding around fields is ignored
                    "img2.png,baroque\n"
                    "img3.png,impressionism\n"
                    "missing.png,baroque\n"
                    "corrupt.png,impressionism\n");

    IngestResult res = ingest(dir.string(), csv.string());
    CHECK(res.skipped == 2);
    CHECK(res.messages.size() == 2);
    REQUIRE(res.dataset.records.size() == 4);
    CHECK(res.dataset.class_names == std::vector<std::string>{"baroque", "impressionism"});
    CHECK(res.dataset.records[0].label == 1); // impressionism
    CHECK(res.dataset.records[1].label == 0);
    CHECK(res.dataset.records[0].id == "img0.png");
    CHECK(res.dataset.records[0].path == (dir / "img0.png").string());
    CHECK(res.dataset.class_counts() == std::vector<int>{2, 2});

    // Channel means average over every kept pixel.
    for (int c = 0; c < 3; ++c) {
        double want = 0.0;
        for (const Tensor& t : imgs)
            for (int i = 0; i < 100; ++i) want += t.data[static_cast<std::size_t>(c) * 100 + i];
        want /= 400.0;
        CHECK(res.dataset.channel_means[static_cast<std::size_t>(c)] ==
              doctest::Approx(want).epsilon(1e-5));
    }

    // Failure modes.
    write_text(csv, "filename,style\nimg0.png,a\nimg0.png,b\n");
    CHECK_THROWS_WITH_AS(ingest(dir.string(), csv.string()), doctest::Contains("duplicate"),
                         DataError);
    write_text(csv, "filename,style\nimg0.png,\n");
    CHECK_THROWS_AS(ingest(dir.string(), csv.string()), DataError);
    write_text(csv, "filename,style\nmissing.png,a\n");
    CHECK_THROWS_AS(ingest(dir.string(), csv.string()), DataError); // nothing decodable
    CHECK_THROWS_AS(ingest(dir.string(), (dir / "no.csv").string()), DataError);
}

TEST_CASE("min_class_filter drops rare classes and relabels densely") {
    LabeledDataset ds = fake_dataset({1, 3, 2});
    LabeledDataset kept = min_class_filter(ds, 2);
    CHECK(kept.class_names == std::vector<std::string>{"class1", "class2"});
    CHECK(kept.records.size() == 5);
    CHECK(kept.class_counts() == std::vector<int>{3, 2});
    for (const auto& r : kept.records) CHECK(r.id != "img0.png");

    CHECK(min_class_filter(ds, 1).records.size() == 6);
    CHECK_THROWS_WITH_AS(min_class_filter(ds, 5), doctest::Contains("no classes remain"),
                         DataError);
}

TEST_CASE("stratified_split takes round(fraction * count) per class") {
    LabeledDataset ds = fake_dataset({10, 23, 1});
    ds.channel_means = {1.0f, 2.0f, 3.0f};
    SplitResult split = stratified_split(ds, 0.1, 5);

    // Per-class validation counts: round(1.0) = 1, round(2.3) = 2, and the
    // single-record class rounds to zero held-out images.
    CHECK(split.validation.class_counts() == std::vector<int>{1, 2, 0});
    CHECK(split.train.class_counts() == std::vector<int>{9, 21, 1});
    CHECK(split.warnings.empty());

    // A fraction that would claim a whole class gets capped with a warning.
    SplitResult capped = stratified_split(fake_dataset({1, 8}), 0.5, 5);
    CHECK(capped.validation.class_counts() == std::vector<int>{0, 4});
    CHECK(capped.train.class_counts() == std::vector<int>{1, 4});
    REQUIRE(capped.warnings.size() == 1);
    CHECK(capped.warnings[0].find("keeping it in train") != std::string::npos);

    // Exact partition, original order preserved on both sides.
    std::vector<std::string> train_ids = ids_of(split.train);
    std::vector<std::string> val_ids = ids_of(split.validation);
    CHECK(std::is_sorted(train_ids.begin(), train_ids.end(),
                         [](const std::string& a, const std::string& b) {
                             return a.size() < b.size() || (a.size() == b.size() && a < b);
                         }));
    std::set<std::string> all(train_ids.begin(), train_ids.end());
    all.insert(val_ids.begin(), val_ids.end());
    CHECK(all.size() == 34);
    CHECK(train_ids.size() + val_ids.size() == 34);

    // Class metadata rides along.
    CHECK(split.train.class_names == ds.class_names);
    CHECK(split.validation.channel_means == ds.channel_means);

    // Deterministic per seed; a different seed picks different rows.
    SplitResult again = stratified_split(ds, 0.1, 5);
    CHECK(ids_of(again.validation) == val_ids);
    LabeledDataset big = fake_dataset({40});
    CHECK(ids_of(stratified_split(big, 0.1, 1).validation) !=
          ids_of(stratified_split(big, 0.1, 2).validation));

    CHECK_THROWS_AS(stratified_split(ds, 0.0, 1), DataError);
    CHECK_THROWS_AS(stratified_split(ds, 1.0, 1), DataError);
}

TEST_CASE("dataset manifests round-trip through json") {
    fs::path dir = fresh_dir("sr_manifest");
    LabeledDataset ds = fake_dataset({2, 3});
    ds.channel_means = {101.5f, 99.25f, 87.0f};
    const std::string path = (dir / "m.json").string();
    save_manifest(ds, path);
    LabeledDataset back = load_manifest(path);
    CHECK(back.class_names == ds.class_names);
    CHECK(back.channel_means == ds.channel_means);
    REQUIRE(back.records.size() == ds.records.size());
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        CHECK(back.records[i].id == ds.records[i].id);
        CHECK(back.records[i].path == ds.records[i].path);
        CHECK(back.records[i].label == ds.records[i].label);
    }

    write_text(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(load_manifest((dir / "bad.json").string()), DataError);
    write_text(dir / "short.json", R"({"classes":["a"],"channel_means":[1,2]})");
    CHECK_THROWS_AS(load_manifest((dir / "short.json").string()), DataError);
    write_text(dir / "label.json",
               R"({"classes":["a"],"channel_means":[1,2,3],)"
               R"("records":[{"id":"x","path":"y","label":4}]})");
    CHECK_THROWS_AS(load_manifest((dir / "label.json").string()), DataError);
}

TEST_CASE("extraction fills the store in dataset order for any worker count") {
    fs::path dir = fresh_dir("sr_extract");
    LabeledDataset ds;
    ds.class_names = {"a", "b"};
    for (int i = 0; i < 6; ++i) {
        const std::string name = "img" + std::to_string(i) + ".png";
        save_png((dir / name).string(), synth_image(12, 14, i));
        ds.records.push_back({name, (dir / name).string(), i % 2});
    }

    Network net = init_network(tiny_extractor(), 13);
    ExtractionConfig cfg;
    cfg.taps = {"r1", "r2"};
    cfg.pre.resize = 10;
    cfg.pre.crop = 8;

    const std::string store1 = (dir / "one.nsf").string();
    ExtractionStats s1 = run_extraction(ds, net, cfg, store1);
    CHECK(s1.written == 6);
    CHECK(s1.resumed == 0);
    CHECK(s1.failed == 0);

    ExtractionConfig wide = cfg;
    wide.workers = 3;
    const std::string store3 = (dir / "three.nsf").string();
    ExtractionStats s3 = run_extraction(ds, net, wide, store3);
    CHECK(s3.written == 6);
    CHECK(read_file_bytes(store3) == read_file_bytes(store1));
    CHECK(read_file_bytes(store_manifest_path(store3)) ==
          read_file_bytes(store_manifest_path(store1)));

    // Stored values equal a by-hand extraction of the same image.
    StoreRecord rec = read_record_at(store1, load_store_manifest(store1)[2].offset);
    CHECK(rec.id == "img2.png");
    StyleFeature want =
        extract_style_features(net, preprocess_image(ds.records[2].path, cfg.pre), {"r1", "r2"});
    REQUIRE(rec.layers.size() == 2);
    CHECK(rec.layers[0].name == "r1");
    CHECK(rec.layers[0].values == want.flattened[0]);
    CHECK(rec.layers[1].values == want.flattened[1]);

    // Second run: everything is already present.
    ExtractionStats rerun = run_extraction(ds, net, cfg, store1);
    CHECK(rerun.written == 0);
    CHECK(rerun.resumed == 6);
    CHECK(read_file_bytes(store1) == read_file_bytes(store3));

    // Partial store: only the missing records are computed and appended.
    LabeledDataset half = ds;
    half.records = {ds.records[0], ds.records[2], ds.records[4]};
    const std::string storep = (dir / "partial.nsf").string();
    run_extraction(half, net, cfg, storep);
    ExtractionStats fill = run_extraction(ds, net, cfg, storep);
    CHECK(fill.resumed == 3);
    CHECK(fill.written == 3);
    CHECK(load_layer_matrix(storep, "all").ids.size() == 6);

    // Tap names are canonicalized to the spec's spelling.
    ExtractionConfig shouty = cfg;
    shouty.taps = {"R1"};
    const std::string storec = (dir / "caps.nsf").string();
    run_extraction(ds, net, shouty, storec);
    CHECK(read_record_at(storec, 0).layers[0].name == "r1");

    // Undecodable images are skipped, not fatal.
    LabeledDataset broken = ds;
    broken.records.push_back({"ghost.png", (dir / "ghost.png").string(), 0});
    const std::string storeb = (dir / "broken.nsf").string();
    ExtractionStats sb = run_extraction(broken, net, cfg, storeb);
    CHECK(sb.written == 6);
    CHECK(sb.failed == 1);
    REQUIRE(sb.messages.size() == 1);
    CHECK(sb.messages[0].find("ghost.png") != std::string::npos);
    CHECK(load_store_manifest(storeb).size() == 6);

    ExtractionConfig no_taps;
    no_taps.pre = cfg.pre;
    CHECK_THROWS_AS(run_extraction(ds, net, no_taps, (dir / "x.nsf").string()), DataError);

    // A geometry problem that hits every image (pool window larger than the
    // crop) must surface as an error, not kill the process inside a worker.
    NetworkSpec big_pool;
    big_pool.in_channels = 3;
    big_pool.layers.push_back(LayerSpec::conv("c1", 3, 2));
    big_pool.layers.push_back(LayerSpec::max_pool("p1", 9, 9));
    big_pool.layers.push_back(LayerSpec::leaky_relu("r1", 0.0f));
    big_pool.validate();
    ExtractionConfig cfg_pool = cfg;
    cfg_pool.taps = {"r1"};
    CHECK_THROWS_WITH_AS(run_extraction(ds, init_network(big_pool, 1), cfg_pool,
                                        (dir / "bigpool.nsf").string()),
                         doctest::Contains("failed"), DataError);
}
