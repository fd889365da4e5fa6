#include "stylerep/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <Eigen/Dense>
#include "json.hpp"

#include "stylerep/bytes.hpp"
#include "stylerep/network.hpp" // NSW1 container I/O
#include "stylerep/ops.hpp"
#include "stylerep/rng.hpp"

namespace stylerep {

// Normalization ---------------------------------------------------------------

Normalizer fit_normalizer(const FeatureMatrix& features) {
    if (features.rows < 2)
        throw DataError(str("fit_normalizer: need >= 2 rows to estimate spread, got ",
                            features.rows));
    const int n = features.rows, d = features.cols;
    Normalizer stats;
    stats.mean.assign(static_cast<std::size_t>(d), 0.0f);
    stats.stddev.assign(static_cast<std::size_t>(d), 0.0f);
    std::vector<double> mean(static_cast<std::size_t>(d), 0.0), sq(static_cast<std::size_t>(d), 0.0);
    for (int r = 0; r < n; ++r) {
        const auto row = features.row(r);
        for (int c = 0; c < d; ++c) mean[static_cast<std::size_t>(c)] += row[static_cast<std::size_t>(c)];
    }
    for (auto& m : mean) m /= n;
    for (int r = 0; r < n; ++r) {
        const auto row = features.row(r);
        for (int c = 0; c < d; ++c) {
            const double dv = row[static_cast<std::size_t>(c)] - mean[static_cast<std::size_t>(c)];
            sq[static_cast<std::size_t>(c)] += dv * dv;
        }
    }
    for (int c = 0; c < d; ++c) {
        stats.mean[static_cast<std::size_t>(c)] = static_cast<float>(mean[static_cast<std::size_t>(c)]);
        stats.stddev[static_cast<std::size_t>(c)] =
            static_cast<float>(std::sqrt(sq[static_cast<std::size_t>(c)] / n));
    }
    return stats;
}

FeatureMatrix apply_normalizer(const Normalizer& stats, const FeatureMatrix& features) {
    if (static_cast<int>(stats.mean.size()) != features.cols)
        throw ShapeError(str("apply_normalizer: stats cover ", stats.mean.size(),
                             " features, matrix has ", features.cols));
    FeatureMatrix out(features.rows, features.cols);
    for (int r = 0; r < features.rows; ++r) {
        const auto src = features.row(r);
        auto dst = out.row(r);
        for (int c = 0; c < features.cols; ++c) {
            const float s = stats.stddev[static_cast<std::size_t>(c)];
            dst[static_cast<std::size_t>(c)] =
                s > 0.0f ? (src[static_cast<std::size_t>(c)] - stats.mean[static_cast<std::size_t>(c)]) / s
                         : 0.0f;
        }
    }
    return out;
}

// Linear classifier ----------------------------------------------------------

namespace {

void check_labels(const FeatureMatrix& features, const std::vector<int>& labels, int classes) {
    if (features.rows == 0) throw DataError("empty feature matrix");
    if (features.cols == 0) throw DataError("zero-dimensional features");
    if (static_cast<int>(labels.size()) != features.rows)
        throw DataError(str(features.rows, " rows vs ", labels.size(), " labels"));
    if (classes < 2) throw DataError(str("need >= 2 classes, got ", classes));
    for (int y : labels)
        if (y < 0 || y >= classes)
            throw DataError(str("label ", y, " outside [0,", classes, ")"));
}

} // namespace

LinearTrainResult train_linear(const FeatureMatrix& features, const std::vector<int>& labels,
                               int classes, const AdamConfig& cfg) {
    check_labels(features, labels, classes);
    cfg.validate();
    if (cfg.epochs < 0) throw DataError("train_linear: negative epoch count");
    if (cfg.batch < 1) throw DataError("train_linear: batch must be >= 1");

    const int n = features.rows, d = features.cols;
    const int batch = std::min(cfg.batch, n);
    const std::size_t wsize = static_cast<std::size_t>(classes) * d;

    LinearTrainResult result;
    result.model.weights = Tensor::zeros({classes, d});
    result.model.bias = Tensor::zeros({classes});
    if (cfg.epochs == 0) return result;

    std::vector<float> params(wsize + static_cast<std::size_t>(classes), 0.0f);
    std::vector<float> grads(params.size(), 0.0f);
    AdamOptimizer adam(params.size(), cfg);

    Rng rng(mix_seed(cfg.seed, 0x6c696e65ULL));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    Tensor logits = Tensor::zeros({classes});
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_xent = 0.0;
        for (int begin = 0; begin < n; begin += batch) {
            const int end = std::min(begin + batch, n);
            const int count = end - begin;
            std::fill(grads.begin(), grads.end(), 0.0f);
            for (int b = begin; b < end; ++b) {
                const int idx = order[static_cast<std::size_t>(b)];
                const auto x = features.row(idx);
                for (int c = 0; c < classes; ++c) {
                    const float* wrow = params.data() + static_cast<std::size_t>(c) * d;
                    double acc = params[wsize + static_cast<std::size_t>(c)];
                    for (int j = 0; j < d; ++j) acc += static_cast<double>(wrow[j]) * x[static_cast<std::size_t>(j)];
                    logits.data[static_cast<std::size_t>(c)] = static_cast<float>(acc);
                }
                const auto sm = softmax_cross_entropy(logits, labels[static_cast<std::size_t>(idx)]);
                epoch_xent += sm.loss;
                for (int c = 0; c < classes; ++c) {
                    float dlogit = sm.probs[static_cast<std::size_t>(c)];
                    if (c == labels[static_cast<std::size_t>(idx)]) dlogit -= 1.0f;
                    float* grow = grads.data() + static_cast<std::size_t>(c) * d;
                    for (int j = 0; j < d; ++j) grow[j] += dlogit * x[static_cast<std::size_t>(j)];
                    grads[wsize + static_cast<std::size_t>(c)] += dlogit;
                }
            }
            const float inv = 1.0f / static_cast<float>(count);
            for (auto& g : grads) g *= inv;
            if (cfg.l2 > 0.0)
                for (std::size_t i = 0; i < wsize; ++i)
                    grads[i] += static_cast<float>(cfg.l2) * params[i];
            adam.step(std::span<float>(params), std::span<const float>(grads));
        }
        double penalty = 0.0;
        if (cfg.l2 > 0.0)
            for (std::size_t i = 0; i < wsize; ++i)
                penalty += 0.5 * cfg.l2 * static_cast<double>(params[i]) * params[i];
        result.trace.push_back(epoch_xent / n + penalty);
    }

    std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(wsize),
              result.model.weights.data.begin());
    std::copy(params.begin() + static_cast<std::ptrdiff_t>(wsize), params.end(),
              result.model.bias.data.begin());
    return result;
}

Prediction predict_linear(const LinearModel& model, const FeatureMatrix& features) {
    if (features.cols != model.dim())
        throw ShapeError(str("predict_linear: model expects ", model.dim(),
                             "-dim features, got ", features.cols));
    const FeatureMatrix* x = &features;
    FeatureMatrix normalized;
    if (model.normalized) {
        normalized = apply_normalizer(model.norm, features);
        x = &normalized;
    }
    const int classes = model.classes(), d = model.dim();
    Prediction pred;
    pred.labels.resize(static_cast<std::size_t>(features.rows));
    pred.scores = FeatureMatrix(features.rows, classes);
    for (int r = 0; r < features.rows; ++r) {
        const auto row = x->row(r);
        double mx = -std::numeric_limits<double>::infinity();
        std::vector<double> logit(static_cast<std::size_t>(classes));
        for (int c = 0; c < classes; ++c) {
            double acc = model.bias.data[static_cast<std::size_t>(c)];
            const float* wrow = model.weights.data.data() + static_cast<std::size_t>(c) * d;
            for (int j = 0; j < d; ++j) acc += static_cast<double>(wrow[j]) * row[static_cast<std::size_t>(j)];
            logit[static_cast<std::size_t>(c)] = acc;
            mx = std::max(mx, acc);
        }
        int best = 0;
        for (int c = 1; c < classes; ++c)
            if (logit[static_cast<std::size_t>(c)] > logit[static_cast<std::size_t>(best)]) best = c;
        double sum = 0.0;
        for (auto& v : logit) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (int c = 0; c < classes; ++c)
            pred.scores.at(r, c) = static_cast<float>(logit[static_cast<std::size_t>(c)] / sum);
        pred.labels[static_cast<std::size_t>(r)] = best;
    }
    return pred;
}

// Random forest ----------------------------------------------------------------

namespace {

double gini(const std::vector<int>& hist, int total) {
    if (total == 0) return 0.0;
    double sumsq = 0.0;
    for (int c : hist) {
        const double p = static_cast<double>(c) / total;
        sumsq += p * p;
    }
    return 1.0 - sumsq;
}

int argmax_lowest(const std::vector<std::uint32_t>& hist) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(hist.size()); ++c)
        if (hist[static_cast<std::size_t>(c)] > hist[static_cast<std::size_t>(best)]) best = c;
    return best;
}

struct TreeBuilder {
    const FeatureMatrix& x;
    const std::vector<int>& y;
    int classes;
    const ForestConfig& cfg;
    int mtry;
    Rng& rng;
    Tree& tree;

    std::vector<int> sample_features() {
        const int d = x.cols;
        std::vector<int> chosen;
        if (mtry >= d) {
            chosen.resize(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) chosen[static_cast<std::size_t>(i)] = i;
            return chosen;
        }
        std::unordered_set<int> seen;
        chosen.reserve(static_cast<std::size_t>(mtry));
        while (static_cast<int>(chosen.size()) < mtry) {
            const int f = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
            if (seen.insert(f).second) chosen.push_back(f);
        }
        std::sort(chosen.begin(), chosen.end()); // evaluation order: lowest feature wins ties
        return chosen;
    }

    int build(const std::vector<int>& indices, int depth) {
        std::vector<int> hist(static_cast<std::size_t>(classes), 0);
        for (int i : indices) ++hist[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])];
        const int total = static_cast<int>(indices.size());

        const bool pure = std::count_if(hist.begin(), hist.end(), [](int c) { return c > 0; }) <= 1;
        const bool depth_capped = cfg.max_depth > 0 && depth >= cfg.max_depth;
        bool make_leaf = pure || depth_capped || total < 2 * cfg.min_leaf;

        int best_feature = -1;
        float best_threshold = 0.0f;
        double best_gain = 0.0;
        if (!make_leaf) {
            const double parent_gini = gini(hist, total);
            std::vector<std::pair<float, int>> vals(indices.size());
            std::vector<int> lhist(static_cast<std::size_t>(classes));
            for (int f : sample_features()) {
                for (std::size_t i = 0; i < indices.size(); ++i)
                    vals[i] = {x.at(indices[i], f), y[static_cast<std::size_t>(indices[i])]};
                std::sort(vals.begin(), vals.end());
                if (vals.front().first == vals.back().first) continue; // constant in node
                std::fill(lhist.begin(), lhist.end(), 0);
                std::vector<int> rhist = hist;
                for (int i = 1; i < total; ++i) {
                    const int lbl = vals[static_cast<std::size_t>(i) - 1].second;
                    ++lhist[static_cast<std::size_t>(lbl)];
                    --rhist[static_cast<std::size_t>(lbl)];
                    const float lo = vals[static_cast<std::size_t>(i) - 1].first;
                    const float hi = vals[static_cast<std::size_t>(i)].first;
                    if (!(lo < hi)) continue;
                    if (i < cfg.min_leaf || total - i < cfg.min_leaf) continue;
                    const double gain = parent_gini -
                                        (static_cast<double>(i) * gini(lhist, i) +
                                         static_cast<double>(total - i) * gini(rhist, total - i)) /
                                            total;
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_feature = f;
                        float thr = lo + (hi - lo) * 0.5f;
                        if (!(thr < hi)) thr = lo; // guard against midpoint rounding up
                        best_threshold = thr;
                    }
                }
            }
            if (best_feature < 0) make_leaf = true;
        }

        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        if (make_leaf) {
            TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
            node.feature = kLeafMarker;
            node.histogram.assign(hist.begin(), hist.end());
            return node_id;
        }

        std::vector<int> left_idx, right_idx;
        for (int i : indices)
            (x.at(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
        tree.nodes[static_cast<std::size_t>(node_id)].feature =
            static_cast<std::uint32_t>(best_feature);
        tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
        const int left = build(left_idx, depth + 1);
        const int right = build(right_idx, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].left = left;
        tree.nodes[static_cast<std::size_t>(node_id)].right = right;
        return node_id;
    }
};

int tree_predict(const Tree& tree, std::span<const float> row) {
    int node = 0;
    while (tree.nodes[static_cast<std::size_t>(node)].feature != kLeafMarker) {
        const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
        node = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    return argmax_lowest(tree.nodes[static_cast<std::size_t>(node)].histogram);
}

} // namespace

ForestTrainResult train_forest(const FeatureMatrix& features, const std::vector<int>& labels,
                               int classes, const ForestConfig& cfg) {
    check_labels(features, labels, classes);
    if (features.rows < 2) throw DataError("train_forest: need >= 2 samples");
    if (cfg.trees < 1) throw DataError(str("train_forest: tree count ", cfg.trees, " < 1"));
    if (cfg.min_leaf < 1) throw DataError(str("train_forest: min_leaf ", cfg.min_leaf, " < 1"));

    const int n = features.rows, d = features.cols;
    int mtry = cfg.mtry > 0 ? std::min(cfg.mtry, d)
                            : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));

    ForestTrainResult result;
    result.model.classes = classes;
    result.model.dim = d;
    result.model.cfg = cfg;
    result.model.trees.resize(static_cast<std::size_t>(cfg.trees));

    std::vector<std::vector<std::uint32_t>> oob_votes(
        static_cast<std::size_t>(n), std::vector<std::uint32_t>(static_cast<std::size_t>(classes), 0));

    for (int t = 0; t < cfg.trees; ++t) {
        Rng rng(cfg.seed + static_cast<std::uint64_t>(t));
        std::vector<int> bootstrap(static_cast<std::size_t>(n));
        std::vector<bool> in_bag(static_cast<std::size_t>(n), false);
        for (auto& idx : bootstrap) {
            idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            in_bag[static_cast<std::size_t>(idx)] = true;
        }
        Tree& tree = result.model.trees[static_cast<std::size_t>(t)];
        TreeBuilder builder{features, labels, classes, cfg, mtry, rng, tree};
        builder.build(bootstrap, 0);

        for (int i = 0; i < n; ++i)
            if (!in_bag[static_cast<std::size_t>(i)]) {
                const int pred = tree_predict(tree, features.row(i));
                ++oob_votes[static_cast<std::size_t>(i)][static_cast<std::size_t>(pred)];
            }
    }

    int evaluated = 0, correct = 0;
    for (int i = 0; i < n; ++i) {
        const auto& votes = oob_votes[static_cast<std::size_t>(i)];
        std::uint32_t total = 0;
        for (auto v : votes) total += v;
        if (total == 0) continue;
        ++evaluated;
        if (argmax_lowest(votes) == labels[static_cast<std::size_t>(i)]) ++correct;
    }
    result.oob_evaluated = evaluated;
    result.oob_accuracy = evaluated > 0 ? static_cast<double>(correct) / evaluated : 0.0;
    return result;
}

Prediction predict_forest(const ForestModel& model, const FeatureMatrix& features) {
    if (features.cols != model.dim)
        throw ShapeError(str("predict_forest: model expects ", model.dim, "-dim features, got ",
                             features.cols));
    Prediction pred;
    pred.labels.resize(static_cast<std::size_t>(features.rows));
    pred.scores = FeatureMatrix(features.rows, model.classes);
    std::vector<std::uint32_t> votes(static_cast<std::size_t>(model.classes));
    for (int r = 0; r < features.rows; ++r) {
        std::fill(votes.begin(), votes.end(), 0);
        for (const Tree& tree : model.trees)
            ++votes[static_cast<std::size_t>(tree_predict(tree, features.row(r)))];
        for (int c = 0; c < model.classes; ++c)
            pred.scores.at(r, c) =
                static_cast<float>(votes[static_cast<std::size_t>(c)]) / model.trees.size();
        pred.labels[static_cast<std::size_t>(r)] = argmax_lowest(votes);
    }
    return pred;
}

// PCA ----------------------------------------------------------------------------

PCAModel pca_fit(const FeatureMatrix& features, float variance_fraction) {
    if (features.rows < 2) throw DataError("pca_fit: need >= 2 rows");
    if (features.cols < 1) throw DataError("pca_fit: zero-dimensional features");
    if (!(variance_fraction > 0.0f && variance_fraction <= 1.0f))
        throw DataError(str("pca_fit: variance fraction ", variance_fraction, " outside (0,1]"));

    const int n = features.rows, d = features.cols;
    Eigen::MatrixXd X(n, d);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) X(r, c) = features.at(r, c);
    const Eigen::RowVectorXd mean = X.colwise().mean();
    X.rowwise() -= mean;

    const double total_var = X.squaredNorm(); // trace of Xc' Xc == sum of eigenvalues
    if (!(total_var > 0.0))
        throw DataError("pca_fit: all rows identical; no variance to preserve (k = 0)");

    // Eigen-decompose the smaller of Xc'Xc (d x d) and Xc Xc' (n x n).
    std::vector<double> lambda;           // descending, positive
    std::vector<Eigen::VectorXd> vectors; // unit-norm components in feature space
    if (n - 1 < d) {
        const Eigen::MatrixXd S = X * X.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        if (es.info() != Eigen::Success) throw NumericError("pca_fit: eigendecomposition failed");
        const double cutoff = std::max(0.0, es.eigenvalues().maxCoeff()) * 1e-12;
        for (int i = n - 1; i >= 0; --i) {
            const double l = es.eigenvalues()(i);
            if (l <= cutoff) break;
            Eigen::VectorXd v = X.transpose() * es.eigenvectors().col(i) / std::sqrt(l);
            v.normalize();
            lambda.push_back(l);
            vectors.push_back(std::move(v));
        }
    } else {
        const Eigen::MatrixXd C = X.transpose() * X;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        if (es.info() != Eigen::Success) throw NumericError("pca_fit: eigendecomposition failed");
        const double cutoff = std::max(0.0, es.eigenvalues().maxCoeff()) * 1e-12;
        for (int i = d - 1; i >= 0; --i) {
            const double l = es.eigenvalues()(i);
            if (l <= cutoff) break;
            lambda.push_back(l);
            vectors.push_back(es.eigenvectors().col(i));
        }
    }
    if (lambda.empty()) throw NumericError("pca_fit: no positive eigenvalues");

    int k = static_cast<int>(lambda.size());
    double cum = 0.0;
    for (int i = 0; i < static_cast<int>(lambda.size()); ++i) {
        cum += lambda[static_cast<std::size_t>(i)] / total_var;
        if (cum >= static_cast<double>(variance_fraction) - 1e-9) {
            k = i + 1;
            break;
        }
    }

    PCAModel model;
    model.components = Tensor::zeros({k, d});
    model.mean.resize(static_cast<std::size_t>(d));
    model.ratios.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < d; ++c) model.mean[static_cast<std::size_t>(c)] = static_cast<float>(mean(c));
    for (int i = 0; i < k; ++i) {
        Eigen::VectorXd& v = vectors[static_cast<std::size_t>(i)];
        // Deterministic sign: the largest-magnitude coefficient is positive.
        int pivot = 0;
        for (int c = 1; c < d; ++c)
            if (std::abs(v(c)) > std::abs(v(pivot))) pivot = c;
        if (v(pivot) < 0.0) v = -v;
        for (int c = 0; c < d; ++c)
            model.components.data[static_cast<std::size_t>(i) * d + static_cast<std::size_t>(c)] =
                static_cast<float>(v(c));
        model.ratios[static_cast<std::size_t>(i)] =
            static_cast<float>(lambda[static_cast<std::size_t>(i)] / total_var);
    }
    return model;
}

FeatureMatrix pca_transform(const PCAModel& model, const FeatureMatrix& features) {
    if (features.cols != model.dim())
        throw ShapeError(str("pca_transform: model expects ", model.dim(), "-dim features, got ",
                             features.cols));
    const int k = model.k(), d = model.dim();
    FeatureMatrix out(features.rows, k);
    for (int r = 0; r < features.rows; ++r) {
        const auto row = features.row(r);
        for (int j = 0; j < k; ++j) {
            const float* comp = model.components.data.data() + static_cast<std::size_t>(j) * d;
            double acc = 0.0;
            for (int c = 0; c < d; ++c)
                acc += (static_cast<double>(row[static_cast<std::size_t>(c)]) -
                        model.mean[static_cast<std::size_t>(c)]) *
                       comp[c];
            out.at(r, j) = static_cast<float>(acc);
        }
    }
    return out;
}

// Metrics ---------------------------------------------------------------------

double top1_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw DataError(str("top1_accuracy: ", predicted.size(), " predictions vs ", truth.size(),
                            " labels"));
    if (predicted.empty()) throw DataError("top1_accuracy: empty inputs");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

// Serialization ----------------------------------------------------------------

namespace {

Tensor vector_tensor(const std::vector<float>& v) {
    return Tensor({static_cast<int>(v.size())}, v);
}

void save_sidecar(const std::string& path, const nlohmann::json& j) {
    std::ofstream f(path);
    if (!f) throw DataError(str("cannot open '", path, "' for writing"));
    f << j.dump(2) << '\n';
}

} // namespace

void save_linear_model(const LinearModel& model, const std::string& path) {
    std::map<std::string, Tensor> tensors;
    tensors.emplace("weights", model.weights);
    tensors.emplace("bias", model.bias);
    if (model.normalized) {
        tensors.emplace("norm.mean", vector_tensor(model.norm.mean));
        tensors.emplace("norm.std", vector_tensor(model.norm.stddev));
    }
    save_weight_container(tensors, path);
    nlohmann::json meta;
    meta["kind"] = "linear";
    meta["classes"] = model.class_names;
    meta["normalized"] = model.normalized;
    save_sidecar(path + ".json", meta);
}

LinearModel load_linear_model(const std::string& path) {
    auto tensors = load_weight_container(path);
    LinearModel model;
    auto take = [&tensors, &path](const std::string& name) {
        auto it = tensors.find(name);
        if (it == tensors.end())
            throw DataError(str("linear model '", path, "': missing tensor '", name, "'"));
        Tensor t = std::move(it->second);
        tensors.erase(it);
        return t;
    };
    model.weights = take("weights");
    model.bias = take("bias");
    require_rank(model.weights, 2, "linear model weights");
    if (model.bias.numel() != model.weights.shape[0])
        throw DataError(str("linear model '", path, "': bias/weights row mismatch"));
    if (tensors.count("norm.mean")) {
        const Tensor m = take("norm.mean"), s = take("norm.std");
        if (m.numel() != model.dim() || s.numel() != model.dim())
            throw DataError(str("linear model '", path, "': normalizer length mismatch"));
        model.normalized = true;
        model.norm.mean = m.data;
        model.norm.stddev = s.data;
    }
    std::ifstream meta_in(path + ".json");
    if (meta_in) {
        nlohmann::json meta = nlohmann::json::parse(meta_in, nullptr, false);
        if (!meta.is_discarded() && meta.contains("classes"))
            model.class_names = meta["classes"].get<std::vector<std::string>>();
    }
    return model;
}

void save_pca_model(const PCAModel& model, const std::string& path) {
    std::map<std::string, Tensor> tensors;
    tensors.emplace("components", model.components);
    tensors.emplace("mean", vector_tensor(model.mean));
    tensors.emplace("ratios", vector_tensor(model.ratios));
    save_weight_container(tensors, path);
}

PCAModel load_pca_model(const std::string& path) {
    auto tensors = load_weight_container(path);
    PCAModel model;
    for (const char* name : {"components", "mean", "ratios"})
        if (!tensors.count(name))
            throw DataError(str("pca model '", path, "': missing tensor '", name, "'"));
    model.components = std::move(tensors.at("components"));
    require_rank(model.components, 2, "pca components");
    model.mean = tensors.at("mean").data;
    model.ratios = tensors.at("ratios").data;
    if (static_cast<int>(model.mean.size()) != model.dim())
        throw DataError(str("pca model '", path, "': mean length ", model.mean.size(),
                            " vs dimension ", model.dim()));
    if (static_cast<int>(model.ratios.size()) != model.k())
        throw DataError(str("pca model '", path, "': ", model.ratios.size(), " ratios for ",
                            model.k(), " components"));
    return model;
}

namespace {

constexpr char kForestMagic[4] = {'N', 'S', 'R', 'F'};
constexpr std::uint32_t kForestVersion = 1;

void write_subtree(std::string& out, const Tree& tree, int node_id, int classes) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
    put_u32(out, node.feature);
    if (node.feature == kLeafMarker) {
        if (static_cast<int>(node.histogram.size()) != classes)
            throw DataError("forest: leaf histogram width mismatch");
        for (std::uint32_t c : node.histogram) put_u32(out, c);
        return;
    }
    put_f32(out, node.threshold);
    write_subtree(out, tree, node.left, classes);
    write_subtree(out, tree, node.right, classes);
}

int read_subtree(ByteCursor& cur, Tree& tree, int classes) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const std::uint32_t feature = cur.u32();
    if (feature == kLeafMarker) {
        tree.nodes[static_cast<std::size_t>(node_id)].feature = kLeafMarker;
        auto& hist = tree.nodes[static_cast<std::size_t>(node_id)].histogram;
        hist.resize(static_cast<std::size_t>(classes));
        for (auto& c : hist) c = cur.u32();
        return node_id;
    }
    tree.nodes[static_cast<std::size_t>(node_id)].feature = feature;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = cur.f32();
    const int left = read_subtree(cur, tree, classes);
    const int right = read_subtree(cur, tree, classes);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left;
    tree.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
}

} // namespace

void save_forest_model(const ForestModel& model, const std::string& path) {
    std::string out;
    out.append(kForestMagic, 4);
    put_u32(out, kForestVersion);
    put_u32(out, static_cast<std::uint32_t>(model.trees.size()));
    put_u32(out, static_cast<std::uint32_t>(model.classes));
    put_u32(out, static_cast<std::uint32_t>(model.dim));
    for (const Tree& tree : model.trees) {
        put_u32(out, static_cast<std::uint32_t>(tree.nodes.size()));
        write_subtree(out, tree, 0, model.classes);
    }
    write_file_bytes(path, out);
}

ForestModel load_forest_model(const std::string& path) {
    const std::string bytes = read_file_bytes(path);
    ByteCursor cur{bytes, 0, path};
    if (cur.string(4) != std::string(kForestMagic, 4))
        throw DataError(str("'", path, "' is not a forest model (bad magic)"));
    if (const auto v = cur.u32(); v != kForestVersion)
        throw DataError(str("forest model '", path, "': unsupported version ", v));
    ForestModel model;
    const std::uint32_t trees = cur.u32();
    model.classes = static_cast<int>(cur.u32());
    model.dim = static_cast<int>(cur.u32());
    if (model.classes < 2 || model.dim < 1)
        throw DataError(str("forest model '", path, "': bad header (", model.classes, " classes, ",
                            model.dim, " dims)"));
    model.trees.resize(trees);
    for (auto& tree : model.trees) {
        const std::uint32_t count = cur.u32();
        tree.nodes.reserve(count);
        read_subtree(cur, tree, model.classes);
        if (tree.nodes.size() != count)
            throw DataError(str("forest model '", path, "': tree declares ", count, " nodes, has ",
                                tree.nodes.size()));
        for (const TreeNode& n : tree.nodes)
            if (n.feature != kLeafMarker && static_cast<int>(n.feature) >= model.dim)
                throw DataError(str("forest model '", path, "': node feature ", n.feature,
                                    " out of range"));
    }
    if (!cur.done())
        throw DataError(str("forest model '", path, "': trailing bytes"));
    return model;
}

} // namespace stylerep
