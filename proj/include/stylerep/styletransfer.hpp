#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylerep/gram.hpp"
#include "stylerep/losses.hpp"
#include "stylerep/network.hpp"

namespace stylerep {

enum class TransferInit { Noise, ContentCopy };

/// Adam takes fixed steps and halves them after five consecutive loss
/// increases; Gd is plain gradient descent that rejects any step raising the
/// loss (revert + halve), so its loss trace is nonincreasing by construction.
enum class TransferOptimizer { Adam, Gd };

struct TransferConfig {
    std::vector<std::string> content_layers{"ReLU4_1"};
    std::vector<std::string> style_layers{"ReLU1_1", "ReLU2_1", "ReLU3_1", "ReLU4_1", "ReLU5_1"};
    float content_weight = 1.0f;
    float style_weight = 1000.0f;
    int iterations = 500;
    float step = 0.02f;
    TransferOptimizer optimizer = TransferOptimizer::Adam;
    TransferInit init = TransferInit::Noise;
    std::uint64_t seed = 0;
    /// Added back to the optimization variable before clamping the output to
    /// [0,255]; empty means zeros. When present it also fixes the noise-init
    /// range to [-mean_c, 255-mean_c] per channel.
    std::vector<float> channel_means;

    void validate() const;
};

/// Weighted objective pieces at one iteration; content/style already carry
/// their weights, total = content + style.
struct TransferIterStats {
    double total = 0.0;
    double content = 0.0;
    double style = 0.0;
    double step = 0.0; // step size in effect when this entry was recorded
};

struct TransferResult {
    Tensor image;                        // de-normalized, clamped to [0,255]
    Tensor raw;                          // optimization variable, untouched
    std::vector<TransferIterStats> trace; // entry 0 = objective at the init image
};

/// Precomputed optimization targets: content feature maps and style Gram
/// matrices at the resolved tap indices.
struct TransferTargets {
    std::vector<int> content_indices;
    std::vector<Tensor> content_maps;
    std::vector<int> style_indices;
    std::vector<GramMatrix> style_grams;
    int deepest = -1;
};

TransferTargets transfer_targets(const Network& net, const Tensor& content, const Tensor& style,
                                 const TransferConfig& cfg);

struct TransferEval {
    double total = 0.0;
    double content = 0.0;
    double style = 0.0;
    Tensor pixel_grad;
};

/// Objective value and pixel gradient at x. Throws NumericError naming the
/// offending tap when a per-layer loss goes non-finite.
TransferEval transfer_eval(const Network& net, const TransferTargets& targets, const Tensor& x,
                           float content_weight, float style_weight);

/// Minimizes content_weight * L_content + style_weight * L_style over the
/// pixels of a synthesized image. Deterministic per seed.
TransferResult transfer(const Network& net, const Tensor& content, const Tensor& style,
                        const TransferConfig& cfg);

} // namespace stylerep
