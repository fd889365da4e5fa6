// stylecli: command-line driver tying the library together — dataset
// ingestion and splitting, style-feature extraction into binary stores,
// classical classifiers on those features, baseline CNN training, image
// style transfer, and 2-D embeddings of the feature space.
//
// Exit codes: 0 success, 1 usage error, 2 data/shape error, 3 numeric failure.

#include <array>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <unordered_set>

#include <CLI11.hpp>

#include "stylerep/classifiers.hpp"
#include "stylerep/dataset.hpp"
#include "stylerep/extraction.hpp"
#include "stylerep/feature_store.hpp"
#include "stylerep/gram.hpp"
#include "stylerep/image.hpp"
#include "stylerep/network.hpp"
#include "stylerep/rng.hpp"
#include "stylerep/styletransfer.hpp"
#include "stylerep/tsne.hpp"

namespace {

using namespace stylerep;

// Shortest float spelling that survives CSV round-trips unchanged.
std::string g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(csv);
    while (std::getline(ss, item, ',')) {
        const auto a = item.find_first_not_of(" \t");
        const auto b = item.find_last_not_of(" \t");
        if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    }
    return out;
}

std::vector<float> parse_means(const std::string& csv) {
    const auto parts = split_list(csv);
    if (parts.size() != 3)
        throw DataError(str("--mean wants three comma-separated values, got '", csv, "'"));
    std::vector<float> means;
    for (const auto& p : parts) {
        try {
            means.push_back(std::stof(p));
        } catch (const std::exception&) {
            throw DataError(str("bad mean value '", p, "'"));
        }
    }
    return means;
}

// Loads one layer, "all", or a comma-separated list (column-concatenated).
LayerMatrix load_features(const std::string& store, const std::string& layers) {
    const auto parts = split_list(layers);
    if (parts.empty()) throw DataError("empty layer selection");
    LayerMatrix out = load_layer_matrix(store, parts[0]);
    for (std::size_t i = 1; i < parts.size(); ++i) {
        LayerMatrix next = load_layer_matrix(store, parts[i]);
        if (next.ids != out.ids)
            throw DataError(str("layer '", parts[i], "' indexes different records than '",
                                parts[0], "'"));
        FeatureMatrix joined(out.features.rows, out.features.cols + next.features.cols);
        for (int r = 0; r < joined.rows; ++r) {
            auto dst = joined.row(r);
            auto a = out.features.row(r);
            auto b = next.features.row(r);
            std::copy(a.begin(), a.end(), dst.begin());
            std::copy(b.begin(), b.end(), dst.begin() + out.features.cols);
        }
        out.features = std::move(joined);
    }
    return out;
}

// Drops unlabeled rows; classifiers cannot learn from them.
void require_labels(LayerMatrix& m) {
    std::vector<int> keep;
    for (std::size_t i = 0; i < m.labels.size(); ++i)
        if (m.labels[i] >= 0) keep.push_back(static_cast<int>(i));
    if (keep.empty()) throw DataError("store has no labeled records");
    if (keep.size() == m.labels.size()) return;
    std::cerr << "ignoring " << (m.labels.size() - keep.size()) << " unlabeled records\n";
    FeatureMatrix kept(static_cast<int>(keep.size()), m.features.cols);
    std::vector<int> labels;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        auto src = m.features.row(keep[i]);
        std::copy(src.begin(), src.end(), kept.row(static_cast<int>(i)).begin());
        labels.push_back(m.labels[static_cast<std::size_t>(keep[i])]);
        ids.push_back(m.ids[static_cast<std::size_t>(keep[i])]);
    }
    m.features = std::move(kept);
    m.labels = std::move(labels);
    m.ids = std::move(ids);
}

// Restricts store rows to ids named by a dataset manifest (eval --split).
void filter_by_manifest(LayerMatrix& m, const std::string& manifest_path) {
    const LabeledDataset ds = load_manifest(manifest_path);
    std::unordered_set<std::string> wanted;
    for (const auto& r : ds.records) wanted.insert(r.id);
    std::vector<int> keep;
    for (std::size_t i = 0; i < m.ids.size(); ++i)
        if (wanted.count(m.ids[i])) keep.push_back(static_cast<int>(i));
    if (keep.empty())
        throw DataError(str("no store records match the ids in '", manifest_path, "'"));
    FeatureMatrix kept(static_cast<int>(keep.size()), m.features.cols);
    std::vector<int> labels;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        auto src = m.features.row(keep[i]);
        std::copy(src.begin(), src.end(), kept.row(static_cast<int>(i)).begin());
        labels.push_back(m.labels[static_cast<std::size_t>(keep[i])]);
        ids.push_back(m.ids[static_cast<std::size_t>(keep[i])]);
    }
    m.features = std::move(kept);
    m.labels = std::move(labels);
    m.ids = std::move(ids);
}

int count_classes(const std::vector<int>& labels) {
    int classes = 0;
    for (int l : labels) classes = std::max(classes, l + 1);
    return classes;
}

std::vector<std::string> index_class_names(int classes) {
    std::vector<std::string> names;
    for (int c = 0; c < classes; ++c) names.push_back(std::to_string(c));
    return names;
}

PreprocessConfig make_pre(int resize, int crop, const std::string& mean_csv,
                          const std::array<float, 3>& fallback) {
    PreprocessConfig pre;
    pre.resize = resize;
    pre.crop = crop;
    pre.channel_means = mean_csv.empty()
                            ? std::vector<float>(fallback.begin(), fallback.end())
                            : parse_means(mean_csv);
    pre.validate();
    return pre;
}

// ---------------------------------------------------------------------------

void cmd_ingest(CLI::App& app) {
    struct Opts {
        std::string images, labels, out;
        int min_class = 1;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("ingest", "Index a labeled image directory into a manifest");
    c->add_option("--images", o->images, "Image directory")->required();
    c->add_option("--labels", o->labels, "CSV of filename,style")->required();
    c->add_option("--out", o->out, "Manifest to write")->required();
    c->add_option("--min-class", o->min_class, "Drop classes with fewer images");
    c->callback([o] {
        IngestResult r = ingest(o->images, o->labels);
        for (const auto& m : r.messages) std::cerr << m << '\n';
        LabeledDataset ds =
            o->min_class > 1 ? min_class_filter(r.dataset, o->min_class) : r.dataset;
        save_manifest(ds, o->out);
        std::cout << "ingested " << ds.records.size() << " images, " << ds.classes()
                  << " classes, skipped " << r.skipped << '\n';
    });
}

void cmd_split(CLI::App& app) {
    struct Opts {
        std::string manifest, out_train, out_val;
        double fraction = 0.1;
        uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("split", "Stratified train/validation split of a manifest");
    c->add_option("--manifest", o->manifest)->required();
    c->add_option("--fraction", o->fraction, "Validation fraction");
    c->add_option("--seed", o->seed);
    c->add_option("--out-train", o->out_train)->required();
    c->add_option("--out-val", o->out_val)->required();
    c->callback([o] {
        SplitResult r = stratified_split(load_manifest(o->manifest), o->fraction, o->seed);
        for (const auto& w : r.warnings) std::cerr << w << '\n';
        save_manifest(r.train, o->out_train);
        save_manifest(r.validation, o->out_val);
        std::cout << "train " << r.train.records.size() << ", validation "
                  << r.validation.records.size() << '\n';
    });
}

void cmd_extract(CLI::App& app) {
    struct Opts {
        std::string manifest, weights, store, mean;
        std::string taps = "relu1_1,relu2_1,relu3_1,relu4_1,relu5_1";
        int workers = 1, resize = 256, crop = 224;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("extract", "Extract Gram style features into a store");
    c->add_option("--manifest", o->manifest)->required();
    c->add_option("--weights", o->weights, "Extractor weight container")->required();
    c->add_option("--taps", o->taps, "Comma-separated activation layers");
    c->add_option("--store", o->store, "Feature store to write")->required();
    c->add_option("--workers", o->workers);
    c->add_option("--resize", o->resize, "Shorter-side resize before crop");
    c->add_option("--crop", o->crop, "Center-crop size");
    c->add_option("--mean", o->mean, "Override r,g,b channel means (default: manifest's)");
    c->callback([o] {
        const LabeledDataset ds = load_manifest(o->manifest);
        const Network net = load_weights(vgg19_extractor_spec(), o->weights);
        ExtractionConfig cfg;
        cfg.taps = split_list(o->taps);
        cfg.workers = o->workers;
        cfg.pre = make_pre(o->resize, o->crop, o->mean, ds.channel_means);
        ExtractionStats stats = run_extraction(ds, net, cfg, o->store);
        for (const auto& m : stats.messages) std::cerr << m << '\n';
        std::cout << "wrote " << stats.written << " records (resumed " << stats.resumed
                  << ", failed " << stats.failed << ")\n";
    });
}

void cmd_train_linear(CLI::App& app) {
    struct Opts {
        std::string store, out;
        std::string layers = "all", normalize = "zscore";
        int epochs = 55, batch = 32;
        double step = 0.001, l2 = 0.0;
        uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("train-linear", "Softmax regression on stored features");
    c->add_option("--store", o->store)->required();
    c->add_option("--layers", o->layers, "Layer name, comma list, or 'all'");
    c->add_option("--normalize", o->normalize)->check(CLI::IsMember({"zscore", "none"}));
    c->add_option("--epochs", o->epochs);
    c->add_option("--batch", o->batch);
    c->add_option("--step", o->step, "Adam step size");
    c->add_option("--l2", o->l2, "L2 penalty on weights");
    c->add_option("--seed", o->seed);
    c->add_option("--out", o->out, "Model file to write")->required();
    c->callback([o] {
        LayerMatrix m = load_features(o->store, o->layers);
        require_labels(m);
        const int classes = count_classes(m.labels);
        Normalizer norm;
        FeatureMatrix inputs = m.features;
        const bool zscore = o->normalize == "zscore";
        if (zscore) {
            norm = fit_normalizer(m.features);
            inputs = apply_normalizer(norm, m.features);
        }
        AdamConfig cfg;
        cfg.step = o->step;
        cfg.epochs = o->epochs;
        cfg.batch = o->batch;
        cfg.seed = o->seed;
        cfg.l2 = o->l2;
        LinearTrainResult r = train_linear(inputs, m.labels, classes, cfg);
        r.model.class_names = index_class_names(classes);
        r.model.normalized = zscore;
        r.model.norm = norm;
        save_linear_model(r.model, o->out);
        for (std::size_t e = 0; e < r.trace.size(); ++e)
            std::cerr << "epoch " << e + 1 << ", objective " << g9(r.trace[e]) << '\n';
        Prediction train_pred = predict_linear(r.model, m.features);
        std::cout << "train top-1 " << g9(top1_accuracy(train_pred.labels, m.labels))
                  << " over " << m.labels.size() << " samples, " << classes << " classes\n";
    });
}

void cmd_train_forest(CLI::App& app) {
    struct Opts {
        std::string store, out;
        std::string layer = "all";
        int trees = 200, max_depth = 0, min_leaf = 1, mtry = 0;
        uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("train-forest", "Random forest on stored features");
    c->add_option("--store", o->store)->required();
    c->add_option("--layer", o->layer, "Layer name or 'all'");
    c->add_option("--trees", o->trees);
    c->add_option("--max-depth", o->max_depth, "0 = unbounded");
    c->add_option("--min-leaf", o->min_leaf);
    c->add_option("--mtry", o->mtry, "Features tried per split; 0 = sqrt(dim)");
    c->add_option("--seed", o->seed);
    c->add_option("--out", o->out, "Model file to write")->required();
    c->callback([o] {
        LayerMatrix m = load_features(o->store, o->layer);
        require_labels(m);
        ForestConfig cfg;
        cfg.trees = o->trees;
        cfg.max_depth = o->max_depth;
        cfg.min_leaf = o->min_leaf;
        cfg.mtry = o->mtry;
        cfg.seed = o->seed;
        ForestTrainResult r = train_forest(m.features, m.labels, count_classes(m.labels), cfg);
        save_forest_model(r.model, o->out);
        if (r.oob_evaluated > 0)
            std::cout << "oob accuracy " << g9(r.oob_accuracy) << " over " << r.oob_evaluated
                      << " samples\n";
        else
            std::cout << "no out-of-bag samples to score\n";
    });
}

void cmd_pca(CLI::App& app) {
    struct Opts {
        std::string store, out;
        std::string layer = "all";
        double variance = 0.90;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("pca", "Fit a PCA reducer on stored features");
    c->add_option("--store", o->store)->required();
    c->add_option("--layer", o->layer, "Layer name or 'all'");
    c->add_option("--variance", o->variance, "Explained-variance fraction to keep");
    c->add_option("--out", o->out, "Model file to write")->required();
    c->callback([o] {
        LayerMatrix m = load_features(o->store, o->layer);
        PCAModel model = pca_fit(m.features, static_cast<float>(o->variance));
        save_pca_model(model, o->out);
        std::cout << "kept " << model.k() << " of " << model.dim() << " dimensions\n";
    });
}

void cmd_eval(CLI::App& app) {
    struct Opts {
        std::string model, store, split, pca;
        std::string layer = "all";
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("eval", "Score a model on stored features (CSV to stdout)");
    c->add_option("--model", o->model)->required();
    c->add_option("--store", o->store)->required();
    c->add_option("--split", o->split, "Manifest whose ids select the evaluation rows");
    c->add_option("--layer", o->layer, "Layer selection used at training time");
    c->add_option("--pca", o->pca, "PCA model applied before the classifier");
    c->callback([o] {
        LayerMatrix m = load_features(o->store, o->layer);
        if (!o->split.empty()) filter_by_manifest(m, o->split);
        require_labels(m);
        FeatureMatrix inputs = m.features;
        if (!o->pca.empty()) inputs = pca_transform(load_pca_model(o->pca), inputs);

        std::ifstream head(o->model, std::ios::binary);
        char magic[4] = {};
        head.read(magic, 4);
        if (!head) throw DataError(str("cannot read model '", o->model, "'"));
        Prediction pred;
        std::vector<std::string> class_names;
        if (std::string(magic, 4) == "NSRF") {
            ForestModel forest = load_forest_model(o->model);
            pred = predict_forest(forest, inputs);
            class_names = index_class_names(forest.classes);
        } else {
            LinearModel linear = load_linear_model(o->model);
            pred = predict_linear(linear, inputs);
            class_names = linear.class_names;
        }

        std::vector<int> per_class_total(class_names.size(), 0);
        std::vector<int> per_class_hit(class_names.size(), 0);
        for (std::size_t i = 0; i < m.labels.size(); ++i) {
            const int truth = m.labels[i];
            if (truth < 0 || truth >= static_cast<int>(class_names.size()))
                throw DataError(str("label ", truth, " outside the model's ",
                                    class_names.size(), " classes"));
            ++per_class_total[static_cast<std::size_t>(truth)];
            if (pred.labels[i] == truth) ++per_class_hit[static_cast<std::size_t>(truth)];
        }
        std::cout << "metric,class,value\n";
        std::cout << "top1,," << g9(top1_accuracy(pred.labels, m.labels)) << '\n';
        for (std::size_t cix = 0; cix < class_names.size(); ++cix) {
            if (per_class_total[cix] == 0) continue;
            std::cout << "recall," << class_names[cix] << ','
                      << g9(static_cast<double>(per_class_hit[cix]) / per_class_total[cix])
                      << '\n';
        }
    });
}

void cmd_train_cnn(CLI::App& app) {
    struct Opts {
        std::string manifest, out;
        int epochs = 55, classes = 0, batch = 32, resize = 256, crop = 224;
        double lr = 0.01;
        uint64_t seed = 0;
        bool no_augment = false;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("train-cnn", "Train the from-scratch image classifier");
    c->add_option("--manifest", o->manifest)->required();
    c->add_option("--epochs", o->epochs);
    c->add_option("--classes", o->classes, "Head width; 0 = manifest class count");
    c->add_option("--batch", o->batch);
    c->add_option("--lr", o->lr);
    c->add_option("--resize", o->resize);
    c->add_option("--crop", o->crop);
    c->add_option("--seed", o->seed);
    c->add_flag("--no-augment", o->no_augment, "Disable horizontal-flip augmentation");
    c->add_option("--out", o->out, "Weight container to write")->required();
    c->callback([o] {
        const LabeledDataset ds = load_manifest(o->manifest);
        if (ds.records.empty()) throw DataError("manifest has no records");
        const int classes = o->classes > 0 ? o->classes : ds.classes();
        PreprocessConfig pre = make_pre(o->resize, o->crop, "", ds.channel_means);
        std::vector<Tensor> images;
        std::vector<int> labels;
        images.reserve(ds.records.size());
        for (const auto& rec : ds.records) {
            if (rec.label >= classes)
                throw DataError(str("record '", rec.id, "' has label ", rec.label,
                                    " but the head is ", classes, "-way"));
            images.push_back(preprocess_image(rec.path, pre));
            labels.push_back(rec.label);
        }
        Network net = init_network(baseline_cnn_spec(classes, 3, o->crop, o->crop), o->seed);
        TrainConfig cfg;
        cfg.epochs = o->epochs;
        cfg.batch = o->batch;
        cfg.lr = static_cast<float>(o->lr);
        cfg.seed = o->seed;
        cfg.augment_hflip = !o->no_augment;
        TrainResult r = train_classifier(net, images, labels, cfg);
        save_weights(r.net, o->out);
        for (std::size_t e = 0; e < r.trace.size(); ++e)
            std::cout << "epoch " << e + 1 << ", loss " << g9(r.trace[e].loss) << ", accuracy "
                      << g9(r.trace[e].accuracy) << '\n';
    });
}

void cmd_transfer(CLI::App& app) {
    struct Opts {
        std::string content, style, weights, out;
        std::string init = "noise", optimizer = "adam";
        std::string content_layers = "relu4_1";
        std::string style_layers = "relu1_1,relu2_1,relu3_1,relu4_1,relu5_1";
        std::string mean = "123.68,116.779,103.939";
        int iters = 500, size = 224;
        double style_weight = 1000.0, content_weight = 1.0, step = 0.02;
        uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("transfer", "Recompose a content image in a style");
    c->add_option("--content", o->content)->required();
    c->add_option("--style", o->style)->required();
    c->add_option("--weights", o->weights, "Extractor weight container")->required();
    c->add_option("--out", o->out, "PNG to write")->required();
    c->add_option("--iters", o->iters);
    c->add_option("--style-weight", o->style_weight);
    c->add_option("--content-weight", o->content_weight);
    c->add_option("--step", o->step);
    c->add_option("--size", o->size, "Square working resolution");
    c->add_option("--seed", o->seed);
    c->add_option("--init", o->init)->check(CLI::IsMember({"noise", "content"}));
    c->add_option("--optimizer", o->optimizer)->check(CLI::IsMember({"adam", "gd"}));
    c->add_option("--content-layers", o->content_layers);
    c->add_option("--style-layers", o->style_layers);
    c->add_option("--mean", o->mean, "r,g,b channel means subtracted at load");
    c->callback([o] {
        const Network net = load_weights(vgg19_extractor_spec(), o->weights);
        PreprocessConfig pre;
        pre.resize = o->size;
        pre.crop = o->size;
        pre.channel_means = parse_means(o->mean);
        pre.validate();
        const Tensor content = preprocess_image(o->content, pre);
        const Tensor style = preprocess_image(o->style, pre);

        TransferConfig cfg;
        cfg.content_layers = split_list(o->content_layers);
        cfg.style_layers = split_list(o->style_layers);
        cfg.content_weight = static_cast<float>(o->content_weight);
        cfg.style_weight = static_cast<float>(o->style_weight);
        cfg.iterations = o->iters;
        cfg.step = static_cast<float>(o->step);
        cfg.seed = o->seed;
        cfg.init = o->init == "noise" ? TransferInit::Noise : TransferInit::ContentCopy;
        cfg.optimizer =
            o->optimizer == "adam" ? TransferOptimizer::Adam : TransferOptimizer::Gd;
        cfg.channel_means = pre.channel_means;

        TransferResult r = transfer(net, content, style, cfg);
        save_png(o->out, r.image);
        for (std::size_t i = 0; i < r.trace.size(); ++i) {
            if (i % 25 != 0 && i + 1 != r.trace.size()) continue;
            std::cout << "iter " << i << ", total " << g9(r.trace[i].total) << ", content "
                      << g9(r.trace[i].content) << ", style " << g9(r.trace[i].style) << '\n';
        }
    });
}

void cmd_tsne(CLI::App& app) {
    struct Opts {
        std::string store, out;
        std::string layer = "all";
        int sample = 20000, iters = 1000;
        double perplexity = 30.0, theta = 0.5;
        uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* c = app.add_subcommand("tsne", "Embed stored features into 2-D (CSV id,label,x,y)");
    c->add_option("--store", o->store)->required();
    c->add_option("--layer", o->layer, "Layer name or 'all'");
    c->add_option("--sample", o->sample, "Random subsample size");
    c->add_option("--perplexity", o->perplexity);
    c->add_option("--theta", o->theta, "Barnes-Hut accuracy; 0 = exact");
    c->add_option("--iters", o->iters);
    c->add_option("--seed", o->seed);
    c->add_option("--out", o->out, "CSV to write")->required();
    c->callback([o] {
        LayerMatrix m = load_features(o->store, o->layer);
        if (o->sample < 3) throw DataError(str("--sample ", o->sample, " < 3"));
        if (m.features.rows > o->sample) {
            std::vector<int> pick(static_cast<std::size_t>(m.features.rows));
            for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = static_cast<int>(i);
            Rng rng(mix_seed(o->seed, 0x73616d706c65ULL)); // "sample"
            rng.shuffle(pick);
            pick.resize(static_cast<std::size_t>(o->sample));
            std::sort(pick.begin(), pick.end());
            FeatureMatrix sub(o->sample, m.features.cols);
            std::vector<int> labels;
            std::vector<std::string> ids;
            for (std::size_t i = 0; i < pick.size(); ++i) {
                auto src = m.features.row(pick[i]);
                std::copy(src.begin(), src.end(), sub.row(static_cast<int>(i)).begin());
                labels.push_back(m.labels[static_cast<std::size_t>(pick[i])]);
                ids.push_back(m.ids[static_cast<std::size_t>(pick[i])]);
            }
            m.features = std::move(sub);
            m.labels = std::move(labels);
            m.ids = std::move(ids);
        }
        TsneConfig cfg;
        cfg.perplexity = o->perplexity;
        cfg.theta = o->theta;
        cfg.iterations = o->iters;
        cfg.seed = o->seed;
        Embedding emb = tsne_embed(m.features, cfg);

        std::ofstream out(o->out, std::ios::trunc);
        if (!out) throw DataError(str("cannot open '", o->out, "' for writing"));
        out << "id,label,x,y\n";
        for (int i = 0; i < emb.coords.rows; ++i)
            out << m.ids[static_cast<std::size_t>(i)] << ',' << m.labels[static_cast<std::size_t>(i)]
                << ',' << g9(emb.coords.at(i, 0)) << ',' << g9(emb.coords.at(i, 1)) << '\n';
        if (!out.flush())
            throw DataError(str("write to '", o->out, "' failed"));
        for (const auto& [iter, kl] : emb.kl_trace)
            std::cerr << "iter " << iter << ", kl " << g9(kl) << '\n';
        std::cout << "final kl " << g9(emb.final_kl) << " over " << emb.coords.rows
                  << " points\n";
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Artistic-style feature extraction, classification, and transfer"};
    app.require_subcommand(1);
    cmd_ingest(app);
    cmd_split(app);
    cmd_extract(app);
    cmd_train_linear(app);
    cmd_train_forest(app);
    cmd_pca(app);
    cmd_eval(app);
    cmd_train_cnn(app);
    cmd_transfer(app);
    cmd_tsne(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const stylerep::NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
