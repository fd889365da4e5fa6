// Acceptance gate for the style-representation toolkit. Each numbered
// criterion prints one [PASS]/[FAIL] line with a short measurement; the
// process exits nonzero if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "stylerep/bytes.hpp"
#include "stylerep/classifiers.hpp"
#include "stylerep/dataset.hpp"
#include "stylerep/feature_store.hpp"
#include "stylerep/gram.hpp"
#include "stylerep/image.hpp"
#include "stylerep/losses.hpp"
#include "stylerep/network.hpp"
#include "stylerep/rng.hpp"
#include "stylerep/styletransfer.hpp"
#include "stylerep/tsne.hpp"

using namespace stylerep;
namespace fs = std::filesystem;

namespace {

int failures = 0;

using Outcome = std::pair<bool, std::string>;

void run(int index, const std::string& title, const std::function<Outcome()>& fn) {
    bool ok = false;
    std::string detail;
    try {
        std::tie(ok, detail) = fn();
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %2d. %s: %s\n", ok ? "PASS" : "FAIL", index, title.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// Procedural textures ---------------------------------------------------------

Tensor stripes_texture(int size, Rng& rng) {
    Tensor t = Tensor::zeros({3, size, size});
    const double period = 4.0 + rng.below(4);
    const double phase = rng.uniform(0.0, period);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                t.data[(static_cast<std::size_t>(c) * size + y) * size + x] =
                    static_cast<float>(128.0 + 95.0 * std::sin(6.2831853 * (x + phase) / period) +
                                       rng.normal(0.0, 4.0));
    return t;
}

Tensor dots_texture(int size, Rng& rng) {
    Tensor t = Tensor::zeros({3, size, size});
    for (float& v : t.data) v = static_cast<float>(35.0 + rng.normal(0.0, 4.0));
    const int spacing = 5 + static_cast<int>(rng.below(3));
    const int off = static_cast<int>(rng.below(static_cast<std::uint32_t>(spacing)));
    for (int cy = off; cy < size; cy += spacing)
        for (int cx = off; cx < size; cx += spacing)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int y = cy + dy, x = cx + dx;
                    if (y < 0 || y >= size || x < 0 || x >= size) continue;
                    for (int c = 0; c < 3; ++c)
                        t.data[(static_cast<std::size_t>(c) * size + y) * size + x] = 225.0f;
                }
    return t;
}

Tensor noise_texture(int size, Rng& rng) {
    Tensor t = Tensor::zeros({3, size, size});
    for (float& v : t.data) v = rng.uniform_f(0.0f, 255.0f);
    return t;
}

Tensor make_texture(int kind, int size, Rng& rng) {
    switch (kind) {
        case 0: return stripes_texture(size, rng);
        case 1: return dots_texture(size, rng);
        default: return noise_texture(size, rng);
    }
}

// Small fixed-weight extractor used by the desk-scale classifier checks.
NetworkSpec small_extractor() {
    NetworkSpec s;
    s.in_channels = 3;
    s.layers = {
        LayerSpec::conv("c1", 3, 12), LayerSpec::leaky_relu("r1", 0.0f),
        LayerSpec::max_pool("p1"),    LayerSpec::conv("c2", 12, 16),
        LayerSpec::leaky_relu("r2", 0.0f),
    };
    return s;
}

// Three-convolution extractor for the transfer convergence check.
NetworkSpec toy_extractor() {
    NetworkSpec s;
    s.in_channels = 3;
    s.layers = {
        LayerSpec::conv("c1", 3, 4),   LayerSpec::leaky_relu("r1", 0.0f),
        LayerSpec::conv("c2", 4, 5),   LayerSpec::leaky_relu("r2", 0.0f),
        LayerSpec::max_pool("p1"),     LayerSpec::conv("c3", 5, 6),
        LayerSpec::leaky_relu("r3", 0.0f),
    };
    return s;
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// 1. Feature dimensionality ----------------------------------------------------

Outcome criterion_dimensions() {
    Network net = init_network(vgg19_extractor_spec(), 99);
    Rng rng(100);
    Tensor img = Tensor::uniform({3, 32, 32}, rng, 0.0f, 255.0f);
    StyleFeature f = extract_style_features(
        net, img, {"ReLU1_1", "ReLU2_1", "ReLU3_1", "ReLU4_1", "ReLU5_1"});
    const std::vector<std::size_t> want{2016, 8128, 32640, 130816, 130816};
    std::string got;
    bool ok = f.flattened.size() == want.size();
    for (std::size_t i = 0; i < f.flattened.size(); ++i) {
        ok = ok && f.flattened[i].size() == want[i];
        got += (i ? "/" : "") + std::to_string(f.flattened[i].size());
    }
    ok = ok && f.total_length() == 304416;
    return {ok, fmt("per-tap lengths %s, total %lld", got.c_str(),
                    static_cast<long long>(f.total_length()))};
}

// 2. Gradient correctness --------------------------------------------------------

Outcome criterion_gradients() {
    double worst = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        Rng rng(1000 + static_cast<std::uint64_t>(seed));

        { // content loss through leaky ReLU and convolution
            auto x = TensorT<double>::uniform({3, 5, 5}, rng, -1.0, 1.0);
            auto k = TensorT<double>::uniform({4, 3, 3, 3}, rng, -0.5, 0.5);
            std::vector<double> kb{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                   rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
            auto ref = TensorT<double>::uniform({3, 5, 5}, rng, -1.0, 1.0);
            TensorT<double> target = leaky_relu(conv2d<double>(ref, k, kb, 1, 1), 0.2);

            auto f = [&](const std::vector<double>& v) {
                TensorT<double> a = conv2d<double>(oracles::from_vec(x.shape, v), k, kb, 1, 1);
                return content_loss<double>({leaky_relu(a, 0.2)}, {target}).loss;
            };
            TensorT<double> a = conv2d<double>(x, k, kb, 1, 1);
            TensorT<double> r = leaky_relu(a, 0.2);
            auto piece = content_loss<double>({r}, {target});
            TensorT<double> g = conv2d_backward(x, k, 1, 1,
                                                leaky_relu_backward(a, 0.2, piece.grads[0]))
                                    .input;
            worst = std::max(worst, oracles::rel_err(oracles::to_vec(g),
                                                     oracles::finite_diff(f, oracles::to_vec(x))));
        }

        { // style loss through gram, max pooling, and convolution
            auto x = TensorT<double>::uniform({2, 6, 6}, rng, -1.0, 1.0);
            auto k = TensorT<double>::uniform({3, 2, 3, 3}, rng, -0.5, 0.5);
            std::vector<double> kb{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                   rng.uniform(-0.1, 0.1)};
            auto ref = TensorT<double>::uniform({2, 6, 6}, rng, -1.0, 1.0);
            GramMatrixT<double> target =
                gram_matrix(max_pool(leaky_relu(conv2d<double>(ref, k, kb, 1, 1), 0.1), 2, 2).output);
            const std::vector<LayerDims> dims{{3, 9}};

            auto f = [&](const std::vector<double>& v) {
                TensorT<double> a = conv2d<double>(oracles::from_vec(x.shape, v), k, kb, 1, 1);
                PoolResult<double> p = max_pool(leaky_relu(a, 0.1), 2, 2);
                return style_loss<double>({gram_matrix(p.output)}, {target}, dims).loss;
            };
            TensorT<double> a = conv2d<double>(x, k, kb, 1, 1);
            TensorT<double> r = leaky_relu(a, 0.1);
            PoolResult<double> p = max_pool(r, 2, 2);
            auto piece = style_loss<double>({gram_matrix(p.output)}, {target}, dims);
            TensorT<double> gp = gram_backward(p.output, piece.grads[0]);
            TensorT<double> g =
                conv2d_backward(x, k, 1, 1,
                                leaky_relu_backward(a, 0.1, pool_backward(p.argmax, r.shape, gp)))
                    .input;
            worst = std::max(worst, oracles::rel_err(oracles::to_vec(g),
                                                     oracles::finite_diff(f, oracles::to_vec(x))));
        }

        { // softmax cross-entropy through dense, fractional pooling, convolution
            auto x = TensorT<double>::uniform({2, 5, 5}, rng, -1.0, 1.0);
            auto k = TensorT<double>::uniform({3, 2, 3, 3}, rng, -0.5, 0.5);
            std::vector<double> kb{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                                   rng.uniform(-0.1, 0.1)};
            auto w = TensorT<double>::uniform({4, 27}, rng, -0.5, 0.5);
            std::vector<double> wb{0.1, -0.2, 0.0, 0.05};
            const int label = static_cast<int>(rng.below(4));
            const std::uint64_t region_seed = 97;

            auto f = [&](const std::vector<double>& v) {
                TensorT<double> a = conv2d<double>(oracles::from_vec(x.shape, v), k, kb, 1, 1);
                auto fmp = fractional_max_pool(leaky_relu(a, 0.333), 1.4142135623730951, region_seed);
                TensorT<double> flat({static_cast<int>(fmp.output.numel())}, fmp.output.data);
                return softmax_cross_entropy(dense<double>(flat, w, wb), label).loss;
            };
            TensorT<double> a = conv2d<double>(x, k, kb, 1, 1);
            TensorT<double> r = leaky_relu(a, 0.333);
            auto fmp = fractional_max_pool(r, 1.4142135623730951, region_seed);
            TensorT<double> flat({static_cast<int>(fmp.output.numel())}, fmp.output.data);
            TensorT<double> logits = dense<double>(flat, w, wb);
            auto sm = softmax_cross_entropy(logits, label);
            TensorT<double> gl = softmax_cross_entropy_backward(sm, label);
            DenseGrads<double> gd = dense_backward(flat, w, gl);
            TensorT<double> gflat(fmp.output.shape, gd.input.data);
            TensorT<double> gr = pool_backward(fmp.argmax, r.shape, gflat);
            TensorT<double> g =
                conv2d_backward(x, k, 1, 1, leaky_relu_backward(a, 0.333, gr)).input;
            worst = std::max(worst,
                             oracles::rel_err(oracles::to_vec(g),
                                              oracles::finite_diff(f, oracles::to_vec(x), 1e-6)));
        }
    }
    return {worst < 1e-4, fmt("worst relative error %.2e over 20 seeds x 3 chains", worst)};
}

// 3. Oracle equivalence ----------------------------------------------------------

Outcome criterion_oracles() {
    Rng rng(2000);
    double conv_worst = 0.0;
    for (int h = 1; h <= 8; ++h)
        for (int w = 1; w <= 8; ++w)
            for (int k : {1, 2, 3})
                for (int s : {1, 2})
                    for (int p : {0, 1}) {
                        if (h + 2 * p < k || w + 2 * p < k) continue;
                        const int cin = 1 + static_cast<int>(rng.below(3));
                        const int cout = 1 + static_cast<int>(rng.below(3));
                        Tensor x = Tensor::uniform({cin, h, w}, rng, -1.0f, 1.0f);
                        Tensor kr = Tensor::uniform({cout, cin, k, k}, rng, -1.0f, 1.0f);
                        std::vector<float> b(static_cast<std::size_t>(cout));
                        for (auto& v : b) v = rng.uniform_f(-0.5f, 0.5f);
                        Tensor got = conv2d<float>(x, kr, b, s, p);
                        TensorT<double> want = oracles::naive_conv2d(
                            x.cast<double>(), kr.cast<double>(),
                            std::vector<double>(b.begin(), b.end()), s, p);
                        conv_worst = std::max(
                            conv_worst, oracles::rel_err(oracles::to_vec(got.cast<double>()),
                                                         oracles::to_vec(want)));
                    }

    double gram_worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int c = 2 + static_cast<int>(rng.below(7));
        const int h = 1 + static_cast<int>(rng.below(5));
        const int w = 1 + static_cast<int>(rng.below(5));
        Tensor fmap = Tensor::uniform({c, h, w}, rng, -1.0f, 1.0f);
        GramMatrix g = gram_matrix(fmap);
        std::vector<double> got(g.values.begin(), g.values.end());
        gram_worst = std::max(gram_worst, oracles::rel_err(got, oracles::naive_gram(fmap)));
    }
    {
        Tensor fmap = Tensor::uniform({64, 14, 14}, rng, -1.0f, 1.0f);
        GramMatrix g = gram_matrix(fmap);
        std::vector<double> got(g.values.begin(), g.values.end());
        gram_worst = std::max(gram_worst, oracles::rel_err(got, oracles::naive_gram(fmap)));
    }

    FeatureMatrix pts(300, 5);
    for (float& v : pts.values) v = static_cast<float>(rng.normal(0.0, 1.0));
    SparseAffinities p = perplexity_affinities(pts, 20.0);
    std::vector<double> y(600);
    for (double& v : y) v = rng.uniform(-5.0, 5.0);
    const double tsne_err =
        oracles::rel_err(tsne_gradient(p, y, 0.0), oracles::exact_tsne_gradient(p, y));

    const bool ok = conv_worst < 1e-5 && gram_worst < 1e-5 && tsne_err < 1e-5;
    return {ok, fmt("conv %.2e, gram %.2e, tsne theta=0 %.2e", conv_worst, gram_worst, tsne_err)};
}

// 4. Style-transfer convergence ---------------------------------------------------

Outcome criterion_transfer() {
    Network net = init_network(toy_extractor(), 123);
    Rng rng(124);
    Tensor content = Tensor::uniform({3, 16, 16}, rng, 0.0f, 40.0f);
    Tensor style = Tensor::uniform({3, 16, 16}, rng, 0.0f, 40.0f);

    TransferConfig cfg;
    cfg.content_layers = {"r2"};
    cfg.style_layers = {"r1", "r3"};
    cfg.content_weight = 1.0f;
    cfg.style_weight = 10.0f;
    cfg.iterations = 200;
    cfg.step = 1.0f;
    cfg.seed = 3;
    TransferResult res = transfer(net, content, style, cfg);
    const double ratio = res.trace.back().total / res.trace.front().total;

    TransferConfig zero = cfg;
    zero.init = TransferInit::ContentCopy;
    zero.style_weight = 0.0f;
    zero.iterations = 0;
    TransferResult at_start = transfer(net, content, style, zero);
    const bool zero_ok = at_start.trace.at(0).total == 0.0;

    return {ratio <= 0.01 && zero_ok,
            fmt("loss ratio after 200 iterations %.4f (need <= 0.01); content-copy start %s zero",
                ratio, zero_ok ? "exactly" : "NOT")};
}

// 5 + 6. Desk-scale classifier and PCA direction ---------------------------------

struct SynthEval {
    bool ready = false;
    std::string error;
    double plain = 0.0;
    double reduced = 0.0;
    int kept = 0;
};

SynthEval evaluate_synthetic_corpus() {
    SynthEval out;
    try {
        const int per_class = 150, size = 32;
        Network net = init_network(small_extractor(), 777);
        Rng rng(778);

        FeatureMatrix features(3 * per_class, flatten_symmetric_length(12));
        std::vector<int> labels;
        LabeledDataset ds;
        ds.class_names = {"stripes", "dots", "noise"};
        for (int kind = 0; kind < 3; ++kind) {
            for (int i = 0; i < per_class; ++i) {
                const int row = kind * per_class + i;
                Tensor img = make_texture(kind, size, rng);
                StyleFeature f = extract_style_features(net, img, {"r1"});
                std::copy(f.flattened[0].begin(), f.flattened[0].end(),
                          features.row(row).begin());
                labels.push_back(kind);
                ds.records.push_back({std::to_string(row), std::to_string(row), kind});
            }
        }

        SplitResult split = stratified_split(ds, 0.1, 5);
        auto rows_of = [](const LabeledDataset& part) {
            std::vector<int> rows;
            for (const auto& r : part.records) rows.push_back(std::stoi(r.id));
            return rows;
        };
        const std::vector<int> train_rows = rows_of(split.train);
        const std::vector<int> val_rows = rows_of(split.validation);

        auto take = [&](const std::vector<int>& rows) {
            FeatureMatrix m(static_cast<int>(rows.size()), features.cols);
            std::vector<int> y;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                std::copy(features.row(rows[i]).begin(), features.row(rows[i]).end(),
                          m.row(static_cast<int>(i)).begin());
                y.push_back(labels[static_cast<std::size_t>(rows[i])]);
            }
            return std::pair{m, y};
        };
        auto [train_x, train_y] = take(train_rows);
        auto [val_x, val_y] = take(val_rows);

        ForestConfig fcfg;
        fcfg.trees = 100;
        fcfg.seed = 11;
        ForestModel plain = train_forest(train_x, train_y, 3, fcfg).model;
        out.plain = top1_accuracy(predict_forest(plain, val_x).labels, val_y);

        PCAModel pca = pca_fit(train_x, 0.9f);
        out.kept = pca.k();
        ForestModel reduced =
            train_forest(pca_transform(pca, train_x), train_y, 3, fcfg).model;
        out.reduced =
            top1_accuracy(predict_forest(reduced, pca_transform(pca, val_x)).labels, val_y);
        out.ready = true;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

// 7. Command-line determinism ------------------------------------------------------

#ifndef STYLECLI_PATH
#error "STYLECLI_PATH must point at the stylecli binary"
#endif

Outcome criterion_cli_determinism() {
    const fs::path root = fresh_dir("sr_accept_cli");
    const fs::path images = root / "images";
    fs::create_directories(images);

    // Shared corpus: 3 texture classes x 8 images.
    Rng rng(4000);
    std::ofstream csv(root / "labels.csv");
    csv << "filename,style\n";
    const char* names[3] = {"stripes", "dots", "noise"};
    for (int kind = 0; kind < 3; ++kind)
        for (int i = 0; i < 8; ++i) {
            const std::string name = fmt("img%03d.png", kind * 8 + i);
            save_png((images / name).string(), make_texture(kind, 48, rng));
            csv << name << "," << names[kind] << "\n";
        }
    csv.close();

    save_weights(init_network(vgg19_extractor_spec(), 4242), (root / "vgg.nsw").string());

    std::string failed_cmd;
    auto pipeline = [&](const fs::path& out) -> bool {
        fs::create_directories(out);
        const fs::path log = out / "log.txt";
        auto cli = [&](const std::string& args, const std::string& stdout_to = {}) {
            const std::string target = stdout_to.empty() ? log.string() : stdout_to;
            const std::string cmd = std::string(STYLECLI_PATH) + " " + args + " > " + target +
                                    " 2>> " + log.string();
            if (std::system(cmd.c_str()) != 0) {
                if (failed_cmd.empty()) failed_cmd = args.substr(0, args.find(' '));
                return false;
            }
            return true;
        };
        const std::string o = out.string() + "/";
        bool ok = true;
        ok &= cli("ingest --images " + images.string() + " --labels " +
                  (root / "labels.csv").string() + " --out " + o + "manifest.json");
        ok &= cli("split --manifest " + o + "manifest.json --out-train " + o +
                  "train.json --out-val " + o + "val.json --fraction 0.2 --seed 3");
        ok &= cli("extract --manifest " + o + "train.json --weights " +
                  (root / "vgg.nsw").string() + " --store " + o +
                  "feat.nsf --resize 20 --crop 16");
        ok &= cli("train-linear --store " + o + "feat.nsf --out " + o +
                  "linear.nsw --layers relu1_1 --epochs 8 --seed 4");
        ok &= cli("train-forest --store " + o + "feat.nsf --out " + o +
                  "forest.nsrf --layer relu1_1 --trees 25 --seed 5");
        ok &= cli("pca --store " + o + "feat.nsf --out " + o +
                  "pca.nsw --layer relu1_1 --variance 0.9");
        ok &= cli("eval --model " + o + "forest.nsrf --store " + o + "feat.nsf --layer relu1_1",
                  o + "eval.csv");
        ok &= cli("train-cnn --manifest " + o + "train.json --out " + o +
                  "cnn.nsw --epochs 2 --batch 8 --lr 1e-5 --resize 20 --crop 17 --seed 6");
        ok &= cli("transfer --content " + (images / "img000.png").string() + " --style " +
                  (images / "img016.png").string() + " --weights " + (root / "vgg.nsw").string() +
                  " --out " + o + "styled.png --iters 6 --size 16 --seed 7 --step 2.0");
        ok &= cli("tsne --store " + o + "feat.nsf --out " + o +
                  "embed.csv --layer relu1_1 --perplexity 4 --iters 250 --seed 8");
        return ok;
    };

    if (!pipeline(root / "run1") || !pipeline(root / "run2"))
        return {false, "command '" + failed_cmd + "' exited nonzero (see " +
                           (root / "run1" / "log.txt").string() + ")"};

    const std::vector<std::string> artifacts{
        "manifest.json", "train.json",  "val.json",   "feat.nsf", "feat.nsf.csv",
        "linear.nsw",    "linear.nsw.json", "forest.nsrf", "pca.nsw",  "eval.csv",
        "cnn.nsw",       "styled.png",  "embed.csv"};
    std::vector<std::string> diffs;
    for (const std::string& a : artifacts)
        if (read_file_bytes((root / "run1" / a).string()) !=
            read_file_bytes((root / "run2" / a).string()))
            diffs.push_back(a);
    if (!diffs.empty()) {
        std::string list;
        for (const auto& d : diffs) list += (list.empty() ? "" : ", ") + d;
        return {false, "reruns differ in: " + list};
    }
    return {true, fmt("%zu artifacts byte-identical across reruns", artifacts.size())};
}

// 8. Split contract -----------------------------------------------------------------

Outcome criterion_split_contract() {
    const std::vector<int> sizes{1, 4, 10, 23, 37, 60};
    LabeledDataset ds;
    for (std::size_t c = 0; c < sizes.size(); ++c) ds.class_names.push_back("c" + std::to_string(c));
    int serial = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c)
        for (int i = 0; i < sizes[c]; ++i, ++serial)
            ds.records.push_back({std::to_string(serial), std::to_string(serial),
                                  static_cast<int>(c)});

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SplitResult split = stratified_split(ds, 0.1, seed);
        const std::vector<int> val = split.validation.class_counts();
        const std::vector<int> train = split.train.class_counts();
        for (std::size_t c = 0; c < sizes.size(); ++c) {
            const long want = std::lround(0.1 * sizes[c]);
            if (std::abs(val[c] - want) > 1)
                return {false, fmt("class of %d put %d in validation (round = %ld)", sizes[c],
                                   val[c], want)};
            if (val[c] + train[c] != sizes[c])
                return {false, fmt("class of %d lost records in the split", sizes[c])};
        }
        std::set<std::string> seen;
        for (const auto& r : split.train.records) seen.insert(r.id);
        for (const auto& r : split.validation.records)
            if (!seen.insert(r.id).second)
                return {false, "record '" + r.id + "' appears on both sides"};
        if (static_cast<int>(seen.size()) != serial)
            return {false, "split is not an exact partition"};
    }
    return {true, "round(0.1 * count) +/- 1 per class, exact partition, 5 seeds"};
}

// 9. t-SNE structure -----------------------------------------------------------------

Outcome criterion_tsne_structure() {
    const int per = 200, dim = 50;
    FeatureMatrix pts(2 * per, dim);
    std::vector<int> labels;
    Rng rng(5000);
    for (int i = 0; i < 2 * per; ++i) {
        const int c = i < per ? 0 : 1;
        labels.push_back(c);
        for (int j = 0; j < dim; ++j)
            pts.at(i, j) =
                (j == 0 && c == 1 ? 20.0f : 0.0f) + static_cast<float>(rng.normal(0.0, 1.0));
    }

    double worst_sil = 1.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TsneConfig cfg;
        cfg.iterations = 500;
        cfg.seed = seed;
        Embedding e = tsne_embed(pts, cfg);
        worst_sil = std::min(worst_sil, oracles::silhouette(e.coords, labels));
        if (!(e.final_kl < e.kl_trace.front().second))
            return {false, fmt("seed %llu: KL did not fall (%.4f -> %.4f)",
                               static_cast<unsigned long long>(seed), e.kl_trace.front().second,
                               e.final_kl)};
    }
    return {worst_sil > 0.8, fmt("worst silhouette %.3f over 5 seeds (need > 0.8), KL fell", worst_sil)};
}

// 10. Format round-trips ---------------------------------------------------------------

Outcome criterion_format_roundtrips() {
    const fs::path dir = fresh_dir("sr_accept_formats");

    Network net = init_network(baseline_cnn_spec(5, 3, 17, 17), 3);
    const std::string w1 = (dir / "w1.nsw").string();
    const std::string w2 = (dir / "w2.nsw").string();
    save_weight_container(net.weights, w1);
    save_weight_container(load_weight_container(w1), w2);
    const bool weights_ok = read_file_bytes(w1) == read_file_bytes(w2);

    const std::string s1 = (dir / "s1.nsf").string();
    const std::string s2 = (dir / "s2.nsf").string();
    Rng rng(6000);
    {
        FeatureStoreWriter writer(s1, FeatureStoreWriter::Mode::Truncate);
        for (int i = 0; i < 5; ++i) {
            StoreRecord rec;
            rec.id = "img" + std::to_string(i) + ".png";
            rec.label = i == 3 ? kUnlabeled : static_cast<uint32_t>(i % 2);
            StoreLayer a{"ReLU1_1", {}}, b{"ReLU2_1", {}};
            for (int j = 0; j < 6; ++j) a.values.push_back(rng.uniform_f(-2.0f, 2.0f));
            for (int j = 0; j < 10; ++j) b.values.push_back(rng.uniform_f(-2.0f, 2.0f));
            rec.layers = {a, b};
            writer.append(rec);
        }
        writer.close();
    }
    {
        FeatureStoreWriter writer(s2, FeatureStoreWriter::Mode::Truncate);
        for (const ManifestEntry& e : load_store_manifest(s1))
            writer.append(read_record_at(s1, e.offset));
        writer.close();
    }
    const bool store_ok = read_file_bytes(s1) == read_file_bytes(s2) &&
                          read_file_bytes(store_manifest_path(s1)) ==
                              read_file_bytes(store_manifest_path(s2));

    return {weights_ok && store_ok,
            fmt("weight container %s, feature store + manifest %s",
                weights_ok ? "byte-identical" : "DIFFERS", store_ok ? "byte-identical" : "DIFFERS")};
}

} // namespace

int main() {
    run(1, "style feature dimensionality", criterion_dimensions);
    run(2, "loss gradients vs finite differences", criterion_gradients);
    run(3, "oracle equivalence (conv / gram / tsne)", criterion_oracles);
    run(4, "style-transfer convergence", criterion_transfer);

    SynthEval synth = evaluate_synthetic_corpus();
    run(5, "texture-corpus forest accuracy", [&]() -> Outcome {
        if (!synth.ready) return {false, "corpus evaluation failed: " + synth.error};
        return {synth.plain >= 0.90,
                fmt("validation top-1 %.3f (need >= 0.90, chance 0.33)", synth.plain)};
    });
    run(6, "pca does not raise forest accuracy", [&]() -> Outcome {
        if (!synth.ready) return {false, "corpus evaluation failed: " + synth.error};
        return {synth.reduced <= synth.plain,
                fmt("with pca (k=%d at 90%% variance) %.3f <= %.3f without", synth.kept,
                    synth.reduced, synth.plain)};
    });

    run(7, "command-line determinism", criterion_cli_determinism);
    run(8, "stratified split contract", criterion_split_contract);
    run(9, "t-sne cluster structure", criterion_tsne_structure);
    run(10, "weight container / feature store round-trips", criterion_format_roundtrips);

    std::printf("%d/10 acceptance criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
