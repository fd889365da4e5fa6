#include "stylerep/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "stylerep/gram.hpp"

namespace stylerep {

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::LeakyRelu: return "leaky_relu";
        case LayerKind::MaxPool: return "max_pool";
        case LayerKind::FractionalMaxPool: return "fractional_max_pool";
        case LayerKind::Dense: return "dense";
        case LayerKind::Dropout: return "dropout";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::SoftmaxHead: return "softmax_head";
    }
    return "?";
}

LayerSpec LayerSpec::conv(std::string name, int in_c, int out_c, int k, int stride, int pad) {
    LayerSpec l;
    l.kind = LayerKind::Conv;
    l.name = std::move(name);
    l.in_channels = in_c;
    l.out_channels = out_c;
    l.kernel = k;
    l.stride = stride;
    l.pad = pad;
    return l;
}

LayerSpec LayerSpec::leaky_relu(std::string name, float alpha) {
    LayerSpec l;
    l.kind = LayerKind::LeakyRelu;
    l.name = std::move(name);
    l.alpha = alpha;
    return l;
}

LayerSpec LayerSpec::max_pool(std::string name, int k, int stride) {
    LayerSpec l;
    l.kind = LayerKind::MaxPool;
    l.name = std::move(name);
    l.pool = k;
    l.pool_stride = stride;
    return l;
}

LayerSpec LayerSpec::fractional_max_pool(std::string name, double ratio) {
    LayerSpec l;
    l.kind = LayerKind::FractionalMaxPool;
    l.name = std::move(name);
    l.ratio = ratio;
    return l;
}

LayerSpec LayerSpec::dense(std::string name, int in_features, int out_features) {
    LayerSpec l;
    l.kind = LayerKind::Dense;
    l.name = std::move(name);
    l.in_features = in_features;
    l.out_features = out_features;
    return l;
}

LayerSpec LayerSpec::dropout(std::string name, float rate) {
    LayerSpec l;
    l.kind = LayerKind::Dropout;
    l.name = std::move(name);
    l.rate = rate;
    return l;
}

LayerSpec LayerSpec::flatten(std::string name) {
    LayerSpec l;
    l.kind = LayerKind::Flatten;
    l.name = std::move(name);
    return l;
}

LayerSpec LayerSpec::softmax_head(std::string name) {
    LayerSpec l;
    l.kind = LayerKind::SoftmaxHead;
    l.name = std::move(name);
    return l;
}

namespace {

struct ShapeState {
    bool flat = false;
    int c = 0, h = 0, w = 0; // h == 0 / w == 0: size-agnostic
    std::int64_t len = 0;    // flat length, 0 when unknown

    bool spatial_known() const { return h > 0 && w > 0; }
};

int checked_fmp_extent(int in, double ratio, const std::string& name) {
    const int out = fmp_output_extent(in, ratio);
    if (out < 1)
        throw ShapeError(str("layer '", name, "': extent ", in, " at ratio ", ratio,
                             " pools to nothing"));
    if (2 * out < in)
        throw ShapeError(str("layer '", name, "': extent ", in, " cannot telescope into ", out,
                             " regions of width 1 or 2 (ratio ", ratio, " too aggressive)"));
    return out;
}

ShapeState apply_layer(ShapeState s, const LayerSpec& l) {
    auto want_spatial = [&] {
        if (s.flat)
            throw ShapeError(str("layer '", l.name, "' (", layer_kind_name(l.kind),
                                 "): input is already flattened"));
    };
    switch (l.kind) {
        case LayerKind::Conv: {
            want_spatial();
            if (l.in_channels != s.c)
                throw ShapeError(str("layer '", l.name, "': expects ", l.in_channels,
                                     " input channels, chain provides ", s.c));
            if (l.kernel <= 0 || l.stride <= 0 || l.pad < 0)
                throw ShapeError(str("layer '", l.name, "': bad conv geometry"));
            if (s.spatial_known()) {
                const int oh = (s.h + 2 * l.pad - l.kernel) / l.stride + 1;
                const int ow = (s.w + 2 * l.pad - l.kernel) / l.stride + 1;
                if (s.h + 2 * l.pad < l.kernel || s.w + 2 * l.pad < l.kernel || oh < 1 || ow < 1)
                    throw ShapeError(str("layer '", l.name, "': input ", s.h, "x", s.w,
                                         " too small for kernel ", l.kernel));
                s.h = oh;
                s.w = ow;
            }
            s.c = l.out_channels;
            return s;
        }
        case LayerKind::LeakyRelu:
            if (!(l.alpha >= 0.0f && l.alpha < 1.0f))
                throw ShapeError(str("layer '", l.name, "': alpha ", l.alpha, " outside [0,1)"));
            return s;
        case LayerKind::MaxPool: {
            want_spatial();
            if (l.pool <= 0 || l.pool_stride <= 0)
                throw ShapeError(str("layer '", l.name, "': bad pool geometry"));
            if (s.spatial_known()) {
                if (s.h < l.pool || s.w < l.pool)
                    throw ShapeError(str("layer '", l.name, "': input ", s.h, "x", s.w,
                                         " smaller than window ", l.pool));
                s.h = (s.h - l.pool) / l.pool_stride + 1;
                s.w = (s.w - l.pool) / l.pool_stride + 1;
            }
            return s;
        }
        case LayerKind::FractionalMaxPool: {
            want_spatial();
            if (!(l.ratio > 1.0 && l.ratio <= 2.0))
                throw ShapeError(str("layer '", l.name, "': ratio ", l.ratio, " outside (1,2]"));
            if (s.spatial_known()) {
                s.h = checked_fmp_extent(s.h, l.ratio, l.name);
                s.w = checked_fmp_extent(s.w, l.ratio, l.name);
            }
            return s;
        }
        case LayerKind::Flatten:
            want_spatial();
            s.flat = true;
            s.len = s.spatial_known() ? static_cast<std::int64_t>(s.c) * s.h * s.w : 0;
            return s;
        case LayerKind::Dense:
            if (!s.flat)
                throw ShapeError(str("layer '", l.name, "': dense requires a flattened input"));
            if (s.len > 0 && s.len != l.in_features)
                throw ShapeError(str("layer '", l.name, "': expects ", l.in_features,
                                     " inputs, chain provides ", s.len));
            if (l.in_features <= 0 || l.out_features <= 0)
                throw ShapeError(str("layer '", l.name, "': bad dense extents"));
            s.len = l.out_features;
            return s;
        case LayerKind::Dropout:
            if (!(l.rate >= 0.0f && l.rate < 1.0f))
                throw ShapeError(str("layer '", l.name, "': rate ", l.rate, " outside [0,1)"));
            return s;
        case LayerKind::SoftmaxHead:
            if (!s.flat)
                throw ShapeError(str("layer '", l.name, "': softmax head requires a flat input"));
            return s;
    }
    throw ShapeError("unknown layer kind");
}

ShapeState input_state(const NetworkSpec& spec) {
    ShapeState s;
    s.c = spec.in_channels;
    s.h = spec.in_height;
    s.w = spec.in_width;
    return s;
}

std::string lower(std::string_view v) {
    std::string out(v);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

bool NetworkSpec::is_classifier() const {
    return !layers.empty() && layers.back().kind == LayerKind::SoftmaxHead;
}

void NetworkSpec::validate() const {
    if (in_channels <= 0) throw ShapeError("network: input channel count must be positive");
    std::vector<std::string> names;
    for (const auto& l : layers) {
        if (l.name.empty()) throw ShapeError("network: every layer needs a name");
        names.push_back(lower(l.name));
    }
    std::sort(names.begin(), names.end());
    auto dup = std::adjacent_find(names.begin(), names.end());
    if (dup != names.end()) throw ShapeError(str("network: duplicate layer name '", *dup, "'"));

    ShapeState s = input_state(*this);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].kind == LayerKind::SoftmaxHead && i + 1 != layers.size())
            throw ShapeError("network: softmax head must be the last layer");
        s = apply_layer(s, layers[i]);
    }
    if (is_classifier()) {
        if (classes < 2) throw ShapeError("network: classifier needs at least 2 classes");
        if (s.len > 0 && s.len != classes)
            throw ShapeError(str("network: head width ", s.len, " != class count ", classes));
    }
}

int NetworkSpec::find_layer(std::string_view name) const {
    const std::string needle = lower(name);
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (lower(layers[i].name) == needle) return static_cast<int>(i);
    return -1;
}

std::vector<int> NetworkSpec::resolve_taps(const std::vector<std::string>& taps) const {
    std::vector<int> out;
    out.reserve(taps.size());
    for (const auto& t : taps) {
        const int idx = find_layer(t);
        if (idx < 0) throw DataError(str("unknown tap '", t, "'"));
        out.push_back(idx);
    }
    return out;
}

int NetworkSpec::channels_after(int layer_index) const {
    ShapeState s = input_state(*this);
    for (int i = 0; i <= layer_index; ++i) s = apply_layer(s, layers[static_cast<std::size_t>(i)]);
    if (s.flat) throw ShapeError("channels_after: layer output is flat");
    return s.c;
}

NetworkSpec vgg19_extractor_spec() {
    NetworkSpec spec;
    spec.in_channels = 3;
    const int block_channels[5] = {64, 128, 256, 512, 512};
    const int block_convs[5] = {2, 2, 4, 4, 4};
    int in_c = 3;
    for (int b = 0; b < 5; ++b) {
        for (int i = 0; i < block_convs[b]; ++i) {
            const std::string suffix = str(b + 1, "_", i + 1);
            spec.layers.push_back(LayerSpec::conv("conv" + suffix, in_c, block_channels[b]));
            spec.layers.push_back(LayerSpec::leaky_relu("ReLU" + suffix, 0.0f));
            in_c = block_channels[b];
        }
        if (b + 1 < 5) spec.layers.push_back(LayerSpec::max_pool(str("pool", b + 1)));
    }
    spec.validate();
    return spec;
}

namespace {

// Smallest input extent that survives `stages` fractional pools at `ratio`.
int min_extent_for_fmp_chain(int stages, double ratio) {
    for (int s = 2; s < 1 << 20; ++s) {
        int e = s;
        bool ok = true;
        for (int i = 0; i < stages && ok; ++i) {
            const int out = fmp_output_extent(e, ratio);
            ok = out >= 1 && 2 * out >= e;
            e = out;
        }
        if (ok) return s;
    }
    throw ShapeError("fractional pooling chain is infeasible at any extent");
}

} // namespace

NetworkSpec baseline_cnn_spec(int classes, int in_c, int in_h, int in_w) {
    if (classes < 2) throw DataError(str("baseline_cnn_spec: need >= 2 classes, got ", classes));
    if (in_c <= 0 || in_h <= 0 || in_w <= 0)
        throw ShapeError("baseline_cnn_spec: input shape must be fully specified");
    constexpr int kPlan[] = {3, 32, 96, 128, 160, 192, 224};
    constexpr int kStages = 6;
    const double ratio = std::numbers::sqrt2;
    if (in_c != kPlan[0])
        throw ShapeError(str("baseline_cnn_spec: expects ", kPlan[0], "-channel input, got ", in_c));

    int h = in_h, w = in_w;
    for (int i = 0; i < kStages; ++i) {
        const int oh = fmp_output_extent(h, ratio), ow = fmp_output_extent(w, ratio);
        if (oh < 1 || ow < 1 || 2 * oh < h || 2 * ow < w) {
            const int min_extent = min_extent_for_fmp_chain(kStages, ratio);
            throw ShapeError(str("baseline_cnn_spec: input ", in_h, "x", in_w,
                                 " too small for ", kStages,
                                 " fractional pooling stages; minimum extent is ", min_extent));
        }
        h = oh;
        w = ow;
    }

    NetworkSpec spec;
    spec.in_channels = in_c;
    spec.in_height = in_h;
    spec.in_width = in_w;
    spec.classes = classes;
    for (int i = 0; i < kStages; ++i) {
        spec.layers.push_back(LayerSpec::conv(str("conv", i + 1), kPlan[i], kPlan[i + 1]));
        spec.layers.push_back(LayerSpec::leaky_relu(str("act", i + 1), 0.333f));
        spec.layers.push_back(LayerSpec::fractional_max_pool(str("fmp", i + 1), ratio));
    }
    spec.layers.push_back(LayerSpec::flatten("flatten"));
    spec.layers.push_back(LayerSpec::dropout("dropout", 0.10f));
    spec.layers.push_back(
        LayerSpec::dense("fc", kPlan[kStages] * h * w, classes));
    spec.layers.push_back(LayerSpec::softmax_head("softmax"));
    spec.validate();
    return spec;
}

const Tensor& Network::weight(const std::string& name) const {
    auto it = weights.find(name);
    if (it == weights.end()) throw DataError(str("network: no weight tensor named '", name, "'"));
    return it->second;
}

Tensor& Network::weight(const std::string& name) {
    auto it = weights.find(name);
    if (it == weights.end()) throw DataError(str("network: no weight tensor named '", name, "'"));
    return it->second;
}

Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    Network net;
    net.spec = spec;
    std::uint64_t tensor_index = 0;
    for (const auto& l : spec.layers) {
        if (l.kind == LayerKind::Conv) {
            Rng rng(mix_seed(seed, tensor_index++));
            const float stddev =
                std::sqrt(2.0f / (static_cast<float>(l.in_channels) * l.kernel * l.kernel));
            net.weights[l.name + ".weight"] = Tensor::normal(
                {l.out_channels, l.in_channels, l.kernel, l.kernel}, rng, 0.0f, stddev);
            net.weights[l.name + ".bias"] = Tensor::zeros({l.out_channels});
        } else if (l.kind == LayerKind::Dense) {
            Rng rng(mix_seed(seed, tensor_index++));
            const float stddev = std::sqrt(2.0f / static_cast<float>(l.in_features));
            net.weights[l.name + ".weight"] =
                Tensor::normal({l.out_features, l.in_features}, rng, 0.0f, stddev);
            net.weights[l.name + ".bias"] = Tensor::zeros({l.out_features});
        }
    }
    return net;
}

const Tensor& ForwardTrace::activation_after(int index) const {
    if (index < 0 || index > last_layer)
        throw ShapeError(str("forward trace has no layer ", index));
    if (index == last_layer) return output;
    return contexts[static_cast<std::size_t>(index) + 1].input;
}

namespace {
constexpr std::uint64_t kInferenceRegionSeed = 0x696e666572656e63ULL;
}

ForwardTrace forward_full(const Network& net, const Tensor& image, const ForwardOptions& opts,
                          int up_to) {
    const NetworkSpec& spec = net.spec;
    if (up_to < 0) up_to = static_cast<int>(spec.layers.size()) - 1;
    if (up_to >= static_cast<int>(spec.layers.size()))
        throw ShapeError(str("forward: layer index ", up_to, " out of range"));
    require_rank(image, 3, "forward input");
    if (image.shape[0] != spec.in_channels)
        throw ShapeError(str("forward: image has ", image.shape[0], " channels, network expects ",
                             spec.in_channels));
    if (spec.in_height > 0 && (image.shape[1] != spec.in_height || image.shape[2] != spec.in_width))
        throw ShapeError(str("forward: image is ", image.shape_str(), ", network expects ",
                             spec.in_channels, "x", spec.in_height, "x", spec.in_width));
    check_finite(image, "forward input");

    ForwardTrace trace;
    trace.contexts.resize(static_cast<std::size_t>(up_to) + 1);
    Tensor x = image;
    for (int i = 0; i <= up_to; ++i) {
        const LayerSpec& l = spec.layers[static_cast<std::size_t>(i)];
        LayerContext& ctx = trace.contexts[static_cast<std::size_t>(i)];
        switch (l.kind) {
            case LayerKind::Conv: {
                ctx.input = x;
                const Tensor& w = net.weight(l.name + ".weight");
                const Tensor& b = net.weight(l.name + ".bias");
                x = conv2d<float>(x, w, std::span<const float>(b.data), l.stride, l.pad);
                break;
            }
            case LayerKind::LeakyRelu:
                ctx.input = x;
                x = leaky_relu(x, l.alpha);
                break;
            case LayerKind::MaxPool: {
                ctx.input = x;
                ctx.pool_in_shape = x.shape;
                auto res = max_pool(x, l.pool, l.pool_stride);
                ctx.argmax = std::move(res.argmax);
                x = std::move(res.output);
                break;
            }
            case LayerKind::FractionalMaxPool: {
                ctx.input = x;
                ctx.pool_in_shape = x.shape;
                const std::uint64_t layer_seed =
                    opts.training ? mix_seed(opts.sample_seed, static_cast<std::uint64_t>(i))
                                  : mix_seed(kInferenceRegionSeed, static_cast<std::uint64_t>(i));
                auto res = fractional_max_pool(x, l.ratio, layer_seed);
                ctx.argmax = std::move(res.argmax);
                x = std::move(res.output);
                break;
            }
            case LayerKind::Dense: {
                ctx.input = x;
                const Tensor& w = net.weight(l.name + ".weight");
                const Tensor& b = net.weight(l.name + ".bias");
                x = dense<float>(x, w, std::span<const float>(b.data));
                break;
            }
            case LayerKind::Dropout: {
                ctx.input = x;
                auto res = dropout(x, l.rate, mix_seed(opts.sample_seed, static_cast<std::uint64_t>(i)),
                                   opts.training);
                x = res.output;
                res.output = Tensor(); // keep mask/scale only
                ctx.drop = std::move(res);
                break;
            }
            case LayerKind::Flatten:
                ctx.input = x;
                ctx.pre_flatten_shape = x.shape;
                x.shape = {static_cast<int>(x.numel())};
                break;
            case LayerKind::SoftmaxHead: {
                ctx.input = x;
                if (!opts.training) {
                    // Inference: emit probabilities.
                    double mx = -std::numeric_limits<double>::infinity();
                    for (float v : x.data) mx = std::max(mx, static_cast<double>(v));
                    double sum = 0.0;
                    std::vector<double> e(x.data.size());
                    for (std::size_t j = 0; j < x.data.size(); ++j) {
                        e[j] = std::exp(static_cast<double>(x.data[j]) - mx);
                        sum += e[j];
                    }
                    for (std::size_t j = 0; j < x.data.size(); ++j)
                        x.data[j] = static_cast<float>(e[j] / sum);
                }
                // Training mode: identity; the trainer pairs logits with
                // softmax_cross_entropy.
                break;
            }
        }
    }
    trace.output = std::move(x);
    trace.last_layer = up_to;
    trace.training = opts.training;
    return trace;
}

std::map<std::string, Tensor> forward_taps(const Network& net, const Tensor& image,
                                           const std::vector<std::string>& taps) {
    const std::vector<int> indices = net.spec.resolve_taps(taps);
    std::map<std::string, Tensor> out;
    const int deepest = indices.empty() ? -1 : *std::max_element(indices.begin(), indices.end());
    if (deepest < 0) {
        // Still validate the input contract.
        ForwardOptions opts;
        if (!net.spec.layers.empty()) forward_full(net, image, opts, 0);
        return out;
    }
    ForwardOptions opts;
    ForwardTrace trace = forward_full(net, image, opts, deepest);
    for (std::size_t t = 0; t < taps.size(); ++t)
        out[taps[t]] = trace.activation_after(indices[t]);
    return out;
}

BackwardResult backward_full(const Network& net, const ForwardTrace& trace,
                             const Tensor* output_grad, const std::map<int, Tensor>& tap_grads) {
    const NetworkSpec& spec = net.spec;
    if (trace.last_layer < 0) throw ShapeError("backward: empty forward trace");
    int start = -1;
    if (output_grad) {
        start = trace.last_layer;
    } else {
        for (const auto& [idx, g] : tap_grads) start = std::max(start, idx);
        if (start < 0) throw ShapeError("backward: no gradients supplied");
    }
    if (start > trace.last_layer)
        throw ShapeError(str("backward: tap gradient at layer ", start,
                             " beyond executed layer ", trace.last_layer));

    BackwardResult res;
    Tensor grad;
    if (output_grad) {
        if (output_grad->shape != trace.activation_after(start).shape)
            throw ShapeError("backward: output gradient shape mismatch");
        grad = *output_grad;
    } else {
        grad = Tensor::zeros(trace.activation_after(start).shape);
    }

    auto add_weight_grad = [&res](const std::string& name, Tensor g) {
        auto it = res.weight_grads.find(name);
        if (it == res.weight_grads.end()) {
            res.weight_grads.emplace(name, std::move(g));
        } else {
            for (std::size_t i = 0; i < g.data.size(); ++i) it->second.data[i] += g.data[i];
        }
    };

    for (int i = start; i >= 0; --i) {
        auto tap_it = tap_grads.find(i);
        if (tap_it != tap_grads.end()) {
            if (tap_it->second.shape != grad.shape)
                throw ShapeError(str("backward: tap gradient at layer ", i, " has shape ",
                                     tap_it->second.shape_str(), ", activation is ",
                                     grad.shape_str()));
            for (std::size_t j = 0; j < grad.data.size(); ++j)
                grad.data[j] += tap_it->second.data[j];
        }

        const LayerSpec& l = spec.layers[static_cast<std::size_t>(i)];
        const LayerContext& ctx = trace.contexts[static_cast<std::size_t>(i)];
        switch (l.kind) {
            case LayerKind::Conv: {
                const Tensor& w = net.weight(l.name + ".weight");
                auto grads = conv2d_backward(ctx.input, w, l.stride, l.pad, grad);
                grad = std::move(grads.input);
                add_weight_grad(l.name + ".weight", std::move(grads.kernels));
                add_weight_grad(l.name + ".bias",
                                Tensor({static_cast<int>(grads.bias.size())}, grads.bias));
                break;
            }
            case LayerKind::LeakyRelu:
                grad = leaky_relu_backward(ctx.input, l.alpha, grad);
                break;
            case LayerKind::MaxPool:
            case LayerKind::FractionalMaxPool:
                grad = pool_backward(ctx.argmax, ctx.pool_in_shape, grad);
                break;
            case LayerKind::Dense: {
                const Tensor& w = net.weight(l.name + ".weight");
                auto grads = dense_backward(ctx.input, w, grad);
                grad = std::move(grads.input);
                add_weight_grad(l.name + ".weight", std::move(grads.weights));
                add_weight_grad(l.name + ".bias",
                                Tensor({static_cast<int>(grads.bias.size())}, grads.bias));
                break;
            }
            case LayerKind::Dropout:
                grad = dropout_backward(ctx.drop, grad);
                break;
            case LayerKind::Flatten:
                grad.shape = ctx.pre_flatten_shape;
                break;
            case LayerKind::SoftmaxHead:
                // During training the head was an identity over the logits.
                if (!trace.training)
                    throw ShapeError(
                        "backward: cannot differentiate through an inference-mode softmax head; "
                        "train with softmax_cross_entropy on the logits");
                break;
        }
    }
    res.input_grad = std::move(grad);
    return res;
}

TrainResult train_classifier(const Network& net, const std::vector<Tensor>& images,
                             const std::vector<int>& labels, const TrainConfig& cfg) {
    net.spec.validate();
    if (!net.spec.is_classifier())
        throw DataError("train_classifier: network has no softmax head");
    if (images.empty()) throw DataError("train_classifier: empty dataset");
    if (images.size() != labels.size())
        throw DataError(str("train_classifier: ", images.size(), " images vs ", labels.size(),
                            " labels"));
    if (cfg.batch < 1 || cfg.batch > static_cast<int>(images.size()))
        throw DataError(str("train_classifier: batch ", cfg.batch, " invalid for dataset of ",
                            images.size()));
    if (cfg.epochs < 0) throw DataError("train_classifier: negative epoch count");
    for (int y : labels)
        if (y < 0 || y >= net.spec.classes)
            throw DataError(str("train_classifier: label ", y, " outside [0,", net.spec.classes,
                                ")"));

    TrainResult result;
    result.net = net;
    if (cfg.epochs == 0) return result;

    std::map<std::string, Tensor> velocity;
    for (const auto& [name, w] : result.net.weights) velocity.emplace(name, Tensor::zeros(w.shape));

    Rng rng(mix_seed(cfg.seed, 0x747261696eULL));
    const int n = static_cast<int>(images.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    float lr = cfg.lr;
    std::uint64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (std::find(cfg.lr_drop_epochs.begin(), cfg.lr_drop_epochs.end(), epoch) !=
            cfg.lr_drop_epochs.end())
            lr *= cfg.lr_drop_factor;
        rng.shuffle(order);
        double epoch_loss = 0.0;
        int correct = 0;
        for (int begin = 0; begin < n; begin += cfg.batch) {
            const int end = std::min(begin + cfg.batch, n);
            const int count = end - begin;
            std::map<std::string, Tensor> grad_acc;
            for (int b = begin; b < end; ++b) {
                const int idx = order[static_cast<std::size_t>(b)];
                const bool flip = cfg.augment_hflip && rng.unit() < 0.5;
                const Tensor& x0 = images[static_cast<std::size_t>(idx)];
                Tensor x = flip ? hflip_chw(x0) : x0;
                ForwardOptions opts;
                opts.training = true;
                opts.sample_seed = mix_seed(cfg.seed, step++);
                ForwardTrace trace = forward_full(result.net, x, opts);
                auto sm = softmax_cross_entropy(trace.output, labels[static_cast<std::size_t>(idx)]);
                if (!std::isfinite(sm.loss))
                    throw NumericError(str("train_classifier: loss diverged at epoch ", epoch,
                                           "; lower the learning rate"));
                epoch_loss += sm.loss;
                const int pred = static_cast<int>(
                    std::max_element(sm.probs.begin(), sm.probs.end()) - sm.probs.begin());
                if (pred == labels[static_cast<std::size_t>(idx)]) ++correct;
                Tensor dlogits =
                    softmax_cross_entropy_backward(sm, labels[static_cast<std::size_t>(idx)]);
                BackwardResult bw = backward_full(result.net, trace, &dlogits);
                for (auto& [name, g] : bw.weight_grads) {
                    auto it = grad_acc.find(name);
                    if (it == grad_acc.end()) {
                        grad_acc.emplace(name, std::move(g));
                    } else {
                        for (std::size_t j = 0; j < g.data.size(); ++j)
                            it->second.data[j] += g.data[j];
                    }
                }
            }
            const float inv = 1.0f / static_cast<float>(count);
            for (auto& [name, g] : grad_acc) {
                Tensor& v = velocity.at(name);
                Tensor& w = result.net.weights.at(name);
                for (std::size_t j = 0; j < g.data.size(); ++j) {
                    v.data[j] = cfg.momentum * v.data[j] + g.data[j] * inv;
                    w.data[j] -= lr * v.data[j];
                }
            }
        }
        result.trace.push_back(
            {epoch_loss / n, static_cast<double>(correct) / static_cast<double>(n)});
    }
    return result;
}

StyleFeature extract_style_features(const Network& net, const Tensor& image,
                                    const std::vector<std::string>& taps, std::string image_id) {
    const std::vector<int> indices = net.spec.resolve_taps(taps);
    StyleFeature out;
    out.image_id = std::move(image_id);
    if (taps.empty()) return out;
    const int deepest = *std::max_element(indices.begin(), indices.end());
    ForwardOptions opts;
    ForwardTrace trace = forward_full(net, image, opts, deepest);
    out.grams.reserve(taps.size());
    out.flattened.reserve(taps.size());
    for (std::size_t t = 0; t < taps.size(); ++t) {
        GramMatrix g = gram_matrix(trace.activation_after(indices[t]), taps[t]);
        out.flattened.push_back(flatten_symmetric(g));
        out.grams.push_back(std::move(g));
    }
    return out;
}

} // namespace stylerep
