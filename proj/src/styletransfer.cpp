#include "stylerep/styletransfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stylerep/adam.hpp"
#include "stylerep/rng.hpp"

namespace stylerep {

void TransferConfig::validate() const {
    if (content_weight < 0.0f || style_weight < 0.0f)
        throw DataError(str("transfer: weights must be nonnegative, got content ", content_weight,
                            ", style ", style_weight));
    if (content_layers.empty() && style_layers.empty())
        throw DataError("transfer: no content or style layers selected");
    if (iterations < 0) throw DataError(str("transfer: negative iteration count ", iterations));
    if (!(step > 0.0f)) throw DataError(str("transfer: step must be positive, got ", step));
}

TransferTargets transfer_targets(const Network& net, const Tensor& content, const Tensor& style,
                                 const TransferConfig& cfg) {
    cfg.validate();
    if (net.spec.is_classifier())
        throw DataError("transfer: network must be a feature extractor, not a classifier");

    TransferTargets t;
    t.content_indices = net.spec.resolve_taps(cfg.content_layers);
    t.style_indices = net.spec.resolve_taps(cfg.style_layers);
    for (int idx : t.content_indices) t.deepest = std::max(t.deepest, idx);
    for (int idx : t.style_indices) t.deepest = std::max(t.deepest, idx);

    ForwardOptions opts;
    if (!t.content_indices.empty()) {
        const int deepest_content =
            *std::max_element(t.content_indices.begin(), t.content_indices.end());
        ForwardTrace trace = forward_full(net, content, opts, deepest_content);
        for (int idx : t.content_indices) t.content_maps.push_back(trace.activation_after(idx));
    }
    if (!t.style_indices.empty()) {
        const int deepest_style = *std::max_element(t.style_indices.begin(), t.style_indices.end());
        ForwardTrace trace = forward_full(net, style, opts, deepest_style);
        for (std::size_t i = 0; i < t.style_indices.size(); ++i)
            t.style_grams.push_back(gram_matrix(trace.activation_after(t.style_indices[i]),
                                                cfg.style_layers[i]));
    }
    return t;
}

TransferEval transfer_eval(const Network& net, const TransferTargets& targets, const Tensor& x,
                           float content_weight, float style_weight) {
    ForwardOptions opts;
    ForwardTrace trace = forward_full(net, x, opts, targets.deepest);

    TransferEval eval;
    std::map<int, Tensor> tap_grads;
    auto add_tap_grad = [&tap_grads](int idx, Tensor g) {
        auto it = tap_grads.find(idx);
        if (it == tap_grads.end()) {
            tap_grads.emplace(idx, std::move(g));
        } else {
            for (std::size_t i = 0; i < g.data.size(); ++i) it->second.data[i] += g.data[i];
        }
    };
    auto layer_name = [&net](int idx) { return net.spec.layers[static_cast<std::size_t>(idx)].name; };

    for (std::size_t l = 0; l < targets.content_indices.size(); ++l) {
        const int idx = targets.content_indices[l];
        auto piece = content_loss(std::vector<Tensor>{trace.activation_after(idx)},
                                  std::vector<Tensor>{targets.content_maps[l]});
        if (!std::isfinite(piece.loss))
            throw NumericError(str("transfer: non-finite content loss at '", layer_name(idx), "'"));
        eval.content += piece.loss;
        if (content_weight != 0.0f) {
            Tensor g = std::move(piece.grads[0]);
            for (auto& v : g.data) v *= content_weight;
            add_tap_grad(idx, std::move(g));
        }
    }

    for (std::size_t l = 0; l < targets.style_indices.size(); ++l) {
        const int idx = targets.style_indices[l];
        const Tensor& fmap = trace.activation_after(idx);
        GramMatrix g = gram_matrix(fmap, layer_name(idx));
        const LayerDims dims{g.channels, g.spatial};
        auto piece = style_loss(std::vector<GramMatrix>{g},
                                std::vector<GramMatrix>{targets.style_grams[l]}, {dims});
        if (!std::isfinite(piece.loss))
            throw NumericError(str("transfer: non-finite style loss at '", layer_name(idx), "'"));
        eval.style += piece.loss;
        if (style_weight != 0.0f) {
            for (auto& v : piece.grads[0].values) v *= style_weight;
            add_tap_grad(idx, gram_backward(fmap, piece.grads[0]));
        }
    }

    eval.content *= content_weight;
    eval.style *= style_weight;
    eval.total = eval.content + eval.style;

    if (tap_grads.empty()) {
        eval.pixel_grad = Tensor::zeros(x.shape);
    } else {
        eval.pixel_grad = backward_full(net, trace, nullptr, tap_grads).input_grad;
    }
    if (!eval.pixel_grad.all_finite())
        throw NumericError("transfer: non-finite pixel gradient");
    return eval;
}

namespace {

Tensor init_image(const Tensor& content, const TransferConfig& cfg) {
    if (cfg.init == TransferInit::ContentCopy) return content;
    const int C = content.shape[0];
    Tensor x = Tensor::zeros(content.shape);
    Rng rng(mix_seed(cfg.seed, 0x6e6f697365ULL));
    const std::size_t plane = x.data.size() / static_cast<std::size_t>(C);
    for (int c = 0; c < C; ++c) {
        float lo, hi;
        if (!cfg.channel_means.empty()) {
            const float m = cfg.channel_means[static_cast<std::size_t>(c) % cfg.channel_means.size()];
            lo = -m;
            hi = 255.0f - m;
        } else {
            // No mean table: fall back to the content image's own range.
            lo = std::numeric_limits<float>::infinity();
            hi = -lo;
            for (std::size_t i = 0; i < plane; ++i) {
                const float v = content.data[static_cast<std::size_t>(c) * plane + i];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (!(hi > lo)) { // constant channel
                lo -= 0.5f;
                hi += 0.5f;
            }
        }
        for (std::size_t i = 0; i < plane; ++i)
            x.data[static_cast<std::size_t>(c) * plane + i] = rng.uniform_f(lo, hi);
    }
    return x;
}

Tensor display_image(const Tensor& raw, const std::vector<float>& means) {
    Tensor out = raw;
    const int C = out.shape[0];
    const std::size_t plane = out.data.size() / static_cast<std::size_t>(C);
    for (int c = 0; c < C; ++c) {
        const float m =
            means.empty() ? 0.0f : means[static_cast<std::size_t>(c) % means.size()];
        for (std::size_t i = 0; i < plane; ++i) {
            float v = out.data[static_cast<std::size_t>(c) * plane + i] + m;
            out.data[static_cast<std::size_t>(c) * plane + i] = std::clamp(v, 0.0f, 255.0f);
        }
    }
    return out;
}

} // namespace

TransferResult transfer(const Network& net, const Tensor& content, const Tensor& style,
                        const TransferConfig& cfg) {
    const TransferTargets targets = transfer_targets(net, content, style, cfg);
    if (!cfg.channel_means.empty() &&
        static_cast<int>(cfg.channel_means.size()) != content.shape[0])
        throw DataError(str("transfer: ", cfg.channel_means.size(), " channel means for ",
                            content.shape[0], "-channel image"));

    TransferResult result;
    Tensor x = init_image(content, cfg);

    TransferEval eval = transfer_eval(net, targets, x, cfg.content_weight, cfg.style_weight);
    double step = cfg.step;
    result.trace.push_back({eval.total, eval.content, eval.style, step});

    if (cfg.optimizer == TransferOptimizer::Adam) {
        AdamConfig acfg;
        acfg.step = cfg.step;
        AdamOptimizer adam(x.data.size(), acfg);
        double prev = eval.total;
        int increases = 0;
        for (int it = 0; it < cfg.iterations; ++it) {
            adam.step(std::span<float>(x.data), std::span<const float>(eval.pixel_grad.data));
            eval = transfer_eval(net, targets, x, cfg.content_weight, cfg.style_weight);
            if (eval.total > prev) {
                if (++increases >= 5) {
                    adam.set_step_size(adam.step_size() * 0.5);
                    increases = 0;
                }
            } else {
                increases = 0;
            }
            prev = eval.total;
            result.trace.push_back({eval.total, eval.content, eval.style, adam.step_size()});
        }
    } else {
        for (int it = 0; it < cfg.iterations; ++it) {
            Tensor candidate = x;
            for (std::size_t i = 0; i < candidate.data.size(); ++i)
                candidate.data[i] -= static_cast<float>(step) * eval.pixel_grad.data[i];
            TransferEval trial =
                transfer_eval(net, targets, candidate, cfg.content_weight, cfg.style_weight);
            if (trial.total <= eval.total) {
                x = std::move(candidate);
                eval = std::move(trial);
            } else {
                step *= 0.5; // revert; the recorded loss repeats the kept image's
            }
            result.trace.push_back({eval.total, eval.content, eval.style, step});
        }
    }

    result.image = display_image(x, cfg.channel_means);
    result.raw = std::move(x);
    return result;
}

} // namespace stylerep
