#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "stylerep/features.hpp"

namespace stylerep {

struct TsneConfig {
    double perplexity = 30.0;
    double theta = 0.5; // Barnes-Hut accuracy; 0 = exact
    int iterations = 1000;
    double learning_rate = 200.0;
    double momentum_start = 0.5;
    double momentum_final = 0.8;
    int momentum_switch = 250;   // iteration where momentum jumps to momentum_final
    double exaggeration = 12.0;  // early-exaggeration factor on P
    int exaggeration_iters = 250;
    std::uint64_t seed = 0;

    void validate(int n) const;
};

/// Symmetric joint affinities P in CSR layout; entries sum to 1.
struct SparseAffinities {
    int n = 0;
    std::vector<int> row_ptr; // length n + 1
    std::vector<int> col;
    std::vector<double> val;
};

/// Per-row Gaussian bandwidths found by bisection to log2(perplexity) bits of
/// entropy (within 1e-5) over the 3*perplexity nearest neighbors, then
/// symmetrized: P = (P_cond + P_cond^T) / (2n). Duplicate-point rows fall
/// back to uniform affinities over their neighbors.
SparseAffinities perplexity_affinities(const FeatureMatrix& features, double perplexity);

/// KL(P||Q) gradient at embedding y (n x 2, row-major doubles). Repulsive
/// forces use a quadtree opened while cell_extent / distance >= theta, so
/// theta = 0 reproduces the exact O(n^2) gradient.
std::vector<double> tsne_gradient(const SparseAffinities& p, const std::vector<double>& y,
                                  double theta);

/// KL(P||Q) with the exact O(n^2) normalizer.
double tsne_kl(const SparseAffinities& p, const std::vector<double>& y);

struct Embedding {
    FeatureMatrix coords; // n x 2
    double final_kl = 0.0;
    std::vector<std::pair<int, double>> kl_trace; // (iteration, KL), sampled every 50
};

Embedding tsne_embed(const FeatureMatrix& features, const TsneConfig& cfg);

} // namespace stylerep
