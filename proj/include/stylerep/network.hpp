#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stylerep/ops.hpp"
#include "stylerep/tensor.hpp"

namespace stylerep {

enum class LayerKind {
    Conv,
    LeakyRelu,
    MaxPool,
    FractionalMaxPool,
    Dense,
    Dropout,
    Flatten,
    SoftmaxHead,
};

const char* layer_kind_name(LayerKind kind);

/// One layer of a declarative network description. Only the fields of the
/// active kind are meaningful.
struct LayerSpec {
    LayerKind kind{};
    std::string name;

    // conv
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
    int pad = 1;
    // leaky_relu
    float alpha = 0.0f;
    // max_pool
    int pool = 2;
    int pool_stride = 2;
    // fractional_max_pool
    double ratio = std::numbers::sqrt2;
    // dense
    int in_features = 0;
    int out_features = 0;
    // dropout
    float rate = 0.0f;

    static LayerSpec conv(std::string name, int in_c, int out_c, int k = 3, int stride = 1,
                          int pad = 1);
    static LayerSpec leaky_relu(std::string name, float alpha);
    static LayerSpec max_pool(std::string name, int k = 2, int stride = 2);
    static LayerSpec fractional_max_pool(std::string name, double ratio = std::numbers::sqrt2);
    static LayerSpec dense(std::string name, int in_features, int out_features);
    static LayerSpec dropout(std::string name, float rate);
    static LayerSpec flatten(std::string name);
    static LayerSpec softmax_head(std::string name);

    bool has_weights() const { return kind == LayerKind::Conv || kind == LayerKind::Dense; }
};

/// Ordered layer list plus the input contract. A spec ending in a
/// softmax_head is a classifier; otherwise it is a feature extractor whose
/// convolutions are size-agnostic (in_height/in_width = 0).
struct NetworkSpec {
    std::vector<LayerSpec> layers;
    int in_channels = 3;
    int in_height = 0; // 0 = any spatial size
    int in_width = 0;
    int classes = 0;

    bool is_classifier() const;
    /// Throws on duplicate names, broken channel chaining, or impossible
    /// pooling arithmetic.
    void validate() const;
    /// Case-insensitive layer lookup; -1 when absent.
    int find_layer(std::string_view name) const;
    /// Resolves tap names to layer indices; throws DataError on unknown taps.
    std::vector<int> resolve_taps(const std::vector<std::string>& taps) const;
    /// Channel count after the named layer (validated spec only).
    int channels_after(int layer_index) const;
};

/// The 16-convolution VGG-19 feature trunk: 3x3 pad-1 stride-1 convolutions,
/// plain ReLU taps named ReLU<block>_<index>, 2x2/2 max pools between blocks,
/// channel plan 64,64 | 128,128 | 256x4 | 512x4 | 512x4. No classifier head.
NetworkSpec vgg19_extractor_spec();

/// The from-scratch baseline classifier: 3x3 convolutions with channel plan
/// 3->32->96->128->160->192->224, leaky ReLU (alpha 0.333) after each, a
/// fractional max-pool stage after each conv block, then
/// flatten -> dropout(0.10) -> dense -> softmax head.
NetworkSpec baseline_cnn_spec(int classes, int in_c, int in_h, int in_w);

/// Spec plus bound weights. Weight tensors are named "<layer>.weight" and
/// "<layer>.bias".
struct Network {
    NetworkSpec spec;
    std::map<std::string, Tensor> weights;

    const Tensor& weight(const std::string& name) const;
    Tensor& weight(const std::string& name);
};

/// Fresh network with He-initialized weights (zero biases), deterministic per
/// seed.
Network init_network(const NetworkSpec& spec, std::uint64_t seed);

struct ForwardOptions {
    bool training = false;
    /// Stream seed for dropout masks and fractional-pooling regions during
    /// training; inference always uses a fixed region seed so repeated
    /// forwards agree.
    std::uint64_t sample_seed = 0;
};

/// Saved per-layer state, enough to run the exact backward pass.
struct LayerContext {
    Tensor input;
    std::vector<std::int64_t> argmax;      // pooling layers
    std::vector<int> pool_in_shape;        // pooling layers
    DropoutResult<float> drop;             // dropout layers
    std::vector<int> pre_flatten_shape;    // flatten layers
};

struct ForwardTrace {
    std::vector<LayerContext> contexts; // one per executed layer
    Tensor output;                      // activation after the last executed layer
    int last_layer = -1;
    bool training = false; // mode the trace was recorded in

    /// Activation after layer `index` (must have been executed).
    const Tensor& activation_after(int index) const;
};

/// Runs layers [0, up_to] (whole net when up_to = -1) and keeps the backward
/// contexts. A softmax head applies softmax in inference mode and is skipped
/// in training mode (the trainer pairs the logits with softmax_cross_entropy).
ForwardTrace forward_full(const Network& net, const Tensor& image, const ForwardOptions& opts,
                          int up_to = -1);

/// Single forward pass returning activations at the requested taps;
/// deterministic (dropout off).
std::map<std::string, Tensor> forward_taps(const Network& net, const Tensor& image,
                                           const std::vector<std::string>& taps);

struct BackwardResult {
    Tensor input_grad;
    std::map<std::string, Tensor> weight_grads;
};

/// Full backward from an output gradient and/or gradients injected at tap
/// layers (keyed by layer index, shaped like that layer's output).
BackwardResult backward_full(const Network& net, const ForwardTrace& trace,
                             const Tensor* output_grad,
                             const std::map<int, Tensor>& tap_grads = {});

struct TrainConfig {
    int epochs = 55;
    int batch = 32;
    float lr = 0.01f;
    float momentum = 0.9f;
    std::uint64_t seed = 0;
    bool augment_hflip = false;
    std::vector<int> lr_drop_epochs{35, 48};
    float lr_drop_factor = 0.1f;
};

struct EpochStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    Network net;
    std::vector<EpochStats> trace;
};

/// Minibatch SGD with momentum on a classifier network. Images are CHW
/// tensors already preprocessed; horizontal-flip augmentation (probability
/// 0.5 per sample) is applied when enabled. Identical seeds give identical
/// traces and weights.
TrainResult train_classifier(const Network& net, const std::vector<Tensor>& images,
                             const std::vector<int>& labels, const TrainConfig& cfg);

// NSW1 weight container -------------------------------------------------------

/// Writes tensors in lexicographic name order. Bit-exact format: magic
/// "NSW1", u32 LE version (=1), u32 LE tensor count; per tensor u16 LE name
/// length, UTF-8 name, u8 rank, rank u32 LE extents, then f32 LE values in
/// row-major order. No padding.
void save_weight_container(const std::map<std::string, Tensor>& tensors, const std::string& path);
std::map<std::string, Tensor> load_weight_container(const std::string& path);

void save_weights(const Network& net, const std::string& path);

/// Binds a container to a spec; unbound or surplus tensors and per-name shape
/// mismatches raise DataError naming the offenders.
Network load_weights(const NetworkSpec& spec, const std::string& path);

} // namespace stylerep
