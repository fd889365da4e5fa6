#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylerep/adam.hpp"
#include "stylerep/features.hpp"
#include "stylerep/tensor.hpp"

namespace stylerep {

// Normalization ---------------------------------------------------------------

/// Per-feature z-score statistics; stddev 0 marks a constant feature whose
/// normalized value is defined as 0.
struct Normalizer {
    std::vector<float> mean;
    std::vector<float> stddev;
};

/// Population statistics (divisor n) over the rows; requires n >= 2.
Normalizer fit_normalizer(const FeatureMatrix& features);
FeatureMatrix apply_normalizer(const Normalizer& stats, const FeatureMatrix& features);

// Linear softmax classifier ----------------------------------------------------

struct LinearModel {
    Tensor weights; // [classes x dim]
    Tensor bias;    // [classes]
    std::vector<std::string> class_names;
    bool normalized = false; // when true, predict applies `norm` to raw features
    Normalizer norm;

    int classes() const { return weights.shape.empty() ? 0 : weights.shape[0]; }
    int dim() const { return weights.rank() < 2 ? 0 : weights.shape[1]; }
};

struct LinearTrainResult {
    LinearModel model;
    std::vector<double> trace; // mean objective per epoch
};

/// Zero-initialized weights, minibatch Adam on mean softmax cross-entropy plus
/// (l2/2)*|W|^2. Deterministic per cfg.seed.
LinearTrainResult train_linear(const FeatureMatrix& features, const std::vector<int>& labels,
                               int classes, const AdamConfig& cfg);

struct Prediction {
    std::vector<int> labels;
    FeatureMatrix scores; // [n x classes]: probabilities (linear) or vote shares (forest)
};

Prediction predict_linear(const LinearModel& model, const FeatureMatrix& features);

// Random forest ----------------------------------------------------------------

constexpr std::uint32_t kLeafMarker = 0xFFFFFFFFu;

struct TreeNode {
    std::uint32_t feature = kLeafMarker; // kLeafMarker for leaves
    float threshold = 0.0f;              // internal nodes: x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    std::vector<std::uint32_t> histogram; // leaves: class counts of the bootstrap samples
};

struct Tree {
    std::vector<TreeNode> nodes; // preorder, nodes[0] is the root
};

struct ForestConfig {
    int trees = 200;
    int max_depth = 0; // 0 = unbounded
    int min_leaf = 1;
    int mtry = 0; // 0 = floor(sqrt(dim))
    std::uint64_t seed = 0;
};

struct ForestModel {
    std::vector<Tree> trees;
    int classes = 0;
    int dim = 0;
    ForestConfig cfg; // per-tree rng seed is cfg.seed + tree index
};

struct ForestTrainResult {
    ForestModel model;
    double oob_accuracy = 0.0; // over samples left out of >= 1 bootstrap
    int oob_evaluated = 0;
};

/// CART trees on bootstrap samples: Gini impurity, mtry features per node,
/// thresholds at midpoints of consecutive distinct sorted values, all ties
/// broken toward the lowest index.
ForestTrainResult train_forest(const FeatureMatrix& features, const std::vector<int>& labels,
                               int classes, const ForestConfig& cfg);

Prediction predict_forest(const ForestModel& model, const FeatureMatrix& features);

// PCA ----------------------------------------------------------------------------

struct PCAModel {
    Tensor components;          // [k x dim], rows orthonormal
    std::vector<float> mean;    // [dim]
    std::vector<float> ratios;  // explained-variance ratios, nonincreasing
    int k() const { return components.shape.empty() ? 0 : components.shape[0]; }
    int dim() const { return components.rank() < 2 ? 0 : components.shape[1]; }
};

/// Centers the rows and keeps the smallest component count whose explained
/// variance reaches variance_fraction. Uses the n x n eigenproblem when
/// n - 1 < dim.
PCAModel pca_fit(const FeatureMatrix& features, float variance_fraction);
FeatureMatrix pca_transform(const PCAModel& model, const FeatureMatrix& features);

// Metrics / serialization ----------------------------------------------------------

double top1_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Linear/PCA models persist as NSW1 tensor containers ("weights","bias" and
/// optional "norm.mean","norm.std"; "components","mean","ratios"); class
/// names live in a small JSON sidecar at path + ".json". Forests persist as a
/// binary preorder node stream per tree.
void save_linear_model(const LinearModel& model, const std::string& path);
LinearModel load_linear_model(const std::string& path);
void save_pca_model(const PCAModel& model, const std::string& path);
PCAModel load_pca_model(const std::string& path);
void save_forest_model(const ForestModel& model, const std::string& path);
ForestModel load_forest_model(const std::string& path);

} // namespace stylerep
