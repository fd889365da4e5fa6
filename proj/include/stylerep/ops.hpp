#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "stylerep/rng.hpp"
#include "stylerep/tensor.hpp"

namespace stylerep {

// ---------------------------------------------------------------------------
// conv2d — cross-correlation convention (no kernel flip), CHW input, OIHW
// kernels. Output extent per spatial axis: floor((in + 2*pad - k)/stride) + 1.
// ---------------------------------------------------------------------------

struct ConvGeometry {
    int in_c, in_h, in_w;
    int out_c, k_h, k_w;
    int stride, pad;
    int out_h, out_w;
};

template <typename T>
ConvGeometry conv2d_geometry(const TensorT<T>& input, const TensorT<T>& kernels,
                             std::size_t bias_size, int stride, int pad) {
    require_rank(input, 3, "conv2d input");
    require_rank(kernels, 4, "conv2d kernels");
    if (stride <= 0) throw ShapeError(str("conv2d: stride must be positive, got ", stride));
    if (pad < 0) throw ShapeError(str("conv2d: pad must be nonnegative, got ", pad));
    ConvGeometry g{};
    g.in_c = input.shape[0];
    g.in_h = input.shape[1];
    g.in_w = input.shape[2];
    g.out_c = kernels.shape[0];
    g.k_h = kernels.shape[2];
    g.k_w = kernels.shape[3];
    g.stride = stride;
    g.pad = pad;
    if (kernels.shape[1] != g.in_c)
        throw ShapeError(str("conv2d: kernel expects ", kernels.shape[1],
                             " input channels, input has ", g.in_c));
    if (bias_size != static_cast<std::size_t>(g.out_c))
        throw ShapeError(str("conv2d: bias length ", bias_size, " != output channels ", g.out_c));
    if (g.in_h + 2 * pad < g.k_h || g.in_w + 2 * pad < g.k_w)
        throw ShapeError(str("conv2d: padded input ", g.in_h + 2 * pad, "x", g.in_w + 2 * pad,
                             " smaller than kernel ", g.k_h, "x", g.k_w));
    g.out_h = (g.in_h + 2 * pad - g.k_h) / stride + 1;
    g.out_w = (g.in_w + 2 * pad - g.k_w) / stride + 1;
    if (g.out_h <= 0 || g.out_w <= 0)
        throw ShapeError(str("conv2d: zero-sized output for input ", input.shape_str()));
    return g;
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& kernels,
                  std::span<const T> bias, int stride, int pad) {
    const ConvGeometry g = conv2d_geometry(input, kernels, bias.size(), stride, pad);
    TensorT<T> out = TensorT<T>::zeros({g.out_c, g.out_h, g.out_w});

#pragma omp parallel for schedule(static)
    for (int co = 0; co < g.out_c; ++co) {
        T* out_plane = out.data.data() + static_cast<std::size_t>(co) * g.out_h * g.out_w;
        std::fill(out_plane, out_plane + static_cast<std::size_t>(g.out_h) * g.out_w, bias[co]);
        for (int ci = 0; ci < g.in_c; ++ci) {
            const T* in_plane = input.data.data() + static_cast<std::size_t>(ci) * g.in_h * g.in_w;
            const T* kern = kernels.data.data() +
                            (static_cast<std::size_t>(co) * g.in_c + ci) * g.k_h * g.k_w;
            for (int kh = 0; kh < g.k_h; ++kh) {
                for (int kw = 0; kw < g.k_w; ++kw) {
                    const T w = kern[kh * g.k_w + kw];
                    if (w == T{0}) continue;
                    // Valid output column range for this kernel offset. The
                    // last reachable input column needs floor division, which
                    // `/` only gives for nonnegative numerators.
                    int ow_lo = 0;
                    if (g.pad > kw) ow_lo = (g.pad - kw + g.stride - 1) / g.stride;
                    const int last_in = g.in_w - 1 + g.pad - kw;
                    const int ow_hi =
                        last_in < 0 ? -1 : std::min(g.out_w - 1, last_in / g.stride);
                    for (int oh = 0; oh < g.out_h; ++oh) {
                        const int ih = oh * g.stride - g.pad + kh;
                        if (ih < 0 || ih >= g.in_h) continue;
                        const T* in_row = in_plane + static_cast<std::size_t>(ih) * g.in_w;
                        T* out_row = out_plane + static_cast<std::size_t>(oh) * g.out_w;
                        int iw = ow_lo * g.stride - g.pad + kw;
                        for (int ow = ow_lo; ow <= ow_hi; ++ow, iw += g.stride)
                            out_row[ow] += w * in_row[iw];
                    }
                }
            }
        }
    }
    check_finite(out, "conv2d");
    return out;
}

template <typename T>
struct ConvGrads {
    TensorT<T> input;
    TensorT<T> kernels;
    std::vector<T> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const TensorT<T>& input, const TensorT<T>& kernels,
                             int stride, int pad, const TensorT<T>& grad_out) {
    const ConvGeometry g =
        conv2d_geometry(input, kernels, static_cast<std::size_t>(kernels.shape[0]), stride, pad);
    if (grad_out.shape != std::vector<int>{g.out_c, g.out_h, g.out_w})
        throw ShapeError(str("conv2d backward: gradient shape ", grad_out.shape_str(),
                             " does not match output ", g.out_c, "x", g.out_h, "x", g.out_w));

    ConvGrads<T> grads{TensorT<T>::zeros(input.shape), TensorT<T>::zeros(kernels.shape),
                       std::vector<T>(static_cast<std::size_t>(g.out_c), T{0})};

    for (int co = 0; co < g.out_c; ++co) {
        const T* go_plane = grad_out.data.data() + static_cast<std::size_t>(co) * g.out_h * g.out_w;
        T acc = T{0};
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(g.out_h) * g.out_w; ++i)
            acc += go_plane[i];
        grads.bias[static_cast<std::size_t>(co)] = acc;

        for (int ci = 0; ci < g.in_c; ++ci) {
            const T* in_plane = input.data.data() + static_cast<std::size_t>(ci) * g.in_h * g.in_w;
            T* gin_plane = grads.input.data.data() + static_cast<std::size_t>(ci) * g.in_h * g.in_w;
            const T* kern = kernels.data.data() +
                            (static_cast<std::size_t>(co) * g.in_c + ci) * g.k_h * g.k_w;
            T* gkern = grads.kernels.data.data() +
                       (static_cast<std::size_t>(co) * g.in_c + ci) * g.k_h * g.k_w;
            for (int kh = 0; kh < g.k_h; ++kh) {
                for (int kw = 0; kw < g.k_w; ++kw) {
                    const T w = kern[kh * g.k_w + kw];
                    int ow_lo = 0;
                    if (g.pad > kw) ow_lo = (g.pad - kw + g.stride - 1) / g.stride;
                    const int last_in = g.in_w - 1 + g.pad - kw;
                    const int ow_hi =
                        last_in < 0 ? -1 : std::min(g.out_w - 1, last_in / g.stride);
                    T wsum = T{0};
                    for (int oh = 0; oh < g.out_h; ++oh) {
                        const int ih = oh * g.stride - g.pad + kh;
                        if (ih < 0 || ih >= g.in_h) continue;
                        const T* in_row = in_plane + static_cast<std::size_t>(ih) * g.in_w;
                        T* gin_row = gin_plane + static_cast<std::size_t>(ih) * g.in_w;
                        const T* go_row = go_plane + static_cast<std::size_t>(oh) * g.out_w;
                        int iw = ow_lo * g.stride - g.pad + kw;
                        for (int ow = ow_lo; ow <= ow_hi; ++ow, iw += g.stride) {
                            wsum += go_row[ow] * in_row[iw];
                            gin_row[iw] += w * go_row[ow];
                        }
                    }
                    gkern[kh * g.k_w + kw] += wsum;
                }
            }
        }
    }
    return grads;
}

// ---------------------------------------------------------------------------
// leaky_relu — x >= 0 ? x : alpha*x. alpha = 0 gives plain ReLU.
// ---------------------------------------------------------------------------

template <typename T>
void validate_leaky_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw ShapeError(str("leaky_relu: alpha must lie in [0,1), got ", alpha));
}

template <typename T>
TensorT<T> leaky_relu(const TensorT<T>& input, T alpha) {
    validate_leaky_alpha<T>(static_cast<double>(alpha));
    TensorT<T> out = input;
    for (auto& v : out.data)
        if (v < T{0}) v *= alpha;
    check_finite(out, "leaky_relu");
    return out;
}

template <typename T>
TensorT<T> leaky_relu_backward(const TensorT<T>& input, T alpha, const TensorT<T>& grad_out) {
    validate_leaky_alpha<T>(static_cast<double>(alpha));
    if (grad_out.shape != input.shape)
        throw ShapeError("leaky_relu backward: gradient shape mismatch");
    TensorT<T> gin = grad_out;
    for (std::size_t i = 0; i < gin.data.size(); ++i)
        if (input.data[i] < T{0}) gin.data[i] *= alpha;
    return gin;
}

// ---------------------------------------------------------------------------
// max_pool — per-window maximum; backward routes gradient to the argmax
// (first index in raster order on ties).
// ---------------------------------------------------------------------------

template <typename T>
struct PoolResult {
    TensorT<T> output;
    std::vector<std::int64_t> argmax; // flat input index per output element
};

template <typename T>
PoolResult<T> max_pool(const TensorT<T>& input, int k, int stride) {
    require_rank(input, 3, "max_pool input");
    if (k <= 0 || stride <= 0)
        throw ShapeError(str("max_pool: window ", k, " and stride ", stride, " must be positive"));
    const int C = input.shape[0], H = input.shape[1], W = input.shape[2];
    if (H < k || W < k)
        throw ShapeError(str("max_pool: input ", H, "x", W, " smaller than window ", k));
    const int OH = (H - k) / stride + 1;
    const int OW = (W - k) / stride + 1;

    PoolResult<T> res{TensorT<T>::zeros({C, OH, OW}),
                      std::vector<std::int64_t>(static_cast<std::size_t>(C) * OH * OW)};
    for (int c = 0; c < C; ++c) {
        for (int oh = 0; oh < OH; ++oh) {
            for (int ow = 0; ow < OW; ++ow) {
                // Seed from the window's first element so the argmax stays a
                // valid index even when the window holds NaNs.
                std::int64_t best_idx =
                    (static_cast<std::int64_t>(c) * H + oh * stride) * W + ow * stride;
                T best = input.data[static_cast<std::size_t>(best_idx)];
                for (int dy = 0; dy < k; ++dy) {
                    for (int dx = 0; dx < k; ++dx) {
                        const int y = oh * stride + dy, x = ow * stride + dx;
                        const std::int64_t idx = (static_cast<std::int64_t>(c) * H + y) * W + x;
                        if (input.data[static_cast<std::size_t>(idx)] > best) {
                            best = input.data[static_cast<std::size_t>(idx)];
                            best_idx = idx;
                        }
                    }
                }
                const std::size_t o = (static_cast<std::size_t>(c) * OH + oh) * OW + ow;
                res.output.data[o] = best;
                res.argmax[o] = best_idx;
            }
        }
    }
    check_finite(res.output, "max_pool");
    return res;
}

template <typename T>
TensorT<T> pool_backward(const std::vector<std::int64_t>& argmax, const std::vector<int>& in_shape,
                         const TensorT<T>& grad_out) {
    if (argmax.size() != grad_out.data.size())
        throw ShapeError("pool backward: argmax/gradient size mismatch");
    TensorT<T> gin = TensorT<T>::zeros(in_shape);
    const std::int64_t n = static_cast<std::int64_t>(gin.numel());
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        if (argmax[i] < 0 || argmax[i] >= n)
            throw ShapeError(str("pool backward: argmax ", argmax[i], " outside input of ", n));
        gin.data[static_cast<std::size_t>(argmax[i])] += grad_out.data[i];
    }
    return gin;
}

// ---------------------------------------------------------------------------
// fractional_max_pool — pseudorandom disjoint regions built from an increment
// sequence (1s and 2s summing to the input extent); per-region maximum.
// ---------------------------------------------------------------------------

struct FmpRegions {
    std::vector<int> row_bounds; // size out_h + 1, row_bounds[0] == 0, back() == in_h
    std::vector<int> col_bounds;
};

inline int fmp_output_extent(int in, double ratio) {
    return static_cast<int>(std::floor(static_cast<double>(in) / ratio));
}

inline std::vector<int> fmp_axis_bounds(int in, double ratio, Rng& rng) {
    const int out = fmp_output_extent(in, ratio);
    if (out < 1)
        throw ShapeError(str("fractional_max_pool: extent ", in, " at ratio ", ratio,
                             " gives empty output"));
    const int twos = in - out;
    const int ones = 2 * out - in;
    if (ones < 0)
        throw ShapeError(str("fractional_max_pool: extent ", in, " cannot telescope to ", out,
                             " regions with increments of 1 or 2"));
    std::vector<int> increments;
    increments.reserve(static_cast<std::size_t>(out));
    increments.insert(increments.end(), static_cast<std::size_t>(ones), 1);
    increments.insert(increments.end(), static_cast<std::size_t>(twos), 2);
    rng.shuffle(increments);
    std::vector<int> bounds(static_cast<std::size_t>(out) + 1, 0);
    for (int i = 0; i < out; ++i)
        bounds[static_cast<std::size_t>(i) + 1] =
            bounds[static_cast<std::size_t>(i)] + increments[static_cast<std::size_t>(i)];
    return bounds;
}

inline FmpRegions fmp_regions(int in_h, int in_w, double ratio, std::uint64_t seed) {
    if (!(ratio > 1.0 && ratio <= 2.0))
        throw ShapeError(str("fractional_max_pool: ratio must lie in (1,2], got ", ratio));
    Rng row_rng(mix_seed(seed, 0x526f77));
    Rng col_rng(mix_seed(seed, 0x436f6c));
    return FmpRegions{fmp_axis_bounds(in_h, ratio, row_rng), fmp_axis_bounds(in_w, ratio, col_rng)};
}

template <typename T>
struct FmpResult {
    TensorT<T> output;
    std::vector<std::int64_t> argmax;
    FmpRegions regions;
};

template <typename T>
FmpResult<T> fractional_max_pool(const TensorT<T>& input, double ratio, std::uint64_t seed) {
    require_rank(input, 3, "fractional_max_pool input");
    const int C = input.shape[0], H = input.shape[1], W = input.shape[2];
    FmpRegions regions = fmp_regions(H, W, ratio, seed);
    const int OH = static_cast<int>(regions.row_bounds.size()) - 1;
    const int OW = static_cast<int>(regions.col_bounds.size()) - 1;

    FmpResult<T> res{TensorT<T>::zeros({C, OH, OW}),
                     std::vector<std::int64_t>(static_cast<std::size_t>(C) * OH * OW),
                     std::move(regions)};
    for (int c = 0; c < C; ++c) {
        for (int oh = 0; oh < OH; ++oh) {
            for (int ow = 0; ow < OW; ++ow) {
                // Seed from the region's first element so the argmax stays a
                // valid index even when the region holds NaNs.
                std::int64_t best_idx =
                    (static_cast<std::int64_t>(c) * H + res.regions.row_bounds[oh]) * W +
                    res.regions.col_bounds[ow];
                T best = input.data[static_cast<std::size_t>(best_idx)];
                for (int y = res.regions.row_bounds[oh]; y < res.regions.row_bounds[oh + 1]; ++y) {
                    for (int x = res.regions.col_bounds[ow]; x < res.regions.col_bounds[ow + 1];
                         ++x) {
                        const std::int64_t idx = (static_cast<std::int64_t>(c) * H + y) * W + x;
                        if (input.data[static_cast<std::size_t>(idx)] > best) {
                            best = input.data[static_cast<std::size_t>(idx)];
                            best_idx = idx;
                        }
                    }
                }
                const std::size_t o = (static_cast<std::size_t>(c) * OH + oh) * OW + ow;
                res.output.data[o] = best;
                res.argmax[o] = best_idx;
            }
        }
    }
    check_finite(res.output, "fractional_max_pool");
    return res;
}

// ---------------------------------------------------------------------------
// dense — y = W x + b with W stored [m x n] row-major.
// ---------------------------------------------------------------------------

template <typename T>
void dense_validate(const TensorT<T>& x, const TensorT<T>& w, std::size_t bias_size) {
    require_rank(w, 2, "dense weights");
    if (x.numel() != w.shape[1])
        throw ShapeError(str("dense: input length ", x.numel(), " != weight columns ", w.shape[1]));
    if (bias_size != static_cast<std::size_t>(w.shape[0]))
        throw ShapeError(str("dense: bias length ", bias_size, " != weight rows ", w.shape[0]));
}

template <typename T>
TensorT<T> dense(const TensorT<T>& x, const TensorT<T>& w, std::span<const T> bias) {
    dense_validate(x, w, bias.size());
    const int m = w.shape[0], n = w.shape[1];
    TensorT<T> y = TensorT<T>::zeros({m});
    for (int i = 0; i < m; ++i) {
        const T* row = w.data.data() + static_cast<std::size_t>(i) * n;
        T acc = bias[i];
        for (int j = 0; j < n; ++j) acc += row[j] * x.data[static_cast<std::size_t>(j)];
        y.data[static_cast<std::size_t>(i)] = acc;
    }
    check_finite(y, "dense");
    return y;
}

template <typename T>
struct DenseGrads {
    TensorT<T> input;
    TensorT<T> weights;
    std::vector<T> bias;
};

template <typename T>
DenseGrads<T> dense_backward(const TensorT<T>& x, const TensorT<T>& w,
                             const TensorT<T>& grad_out) {
    dense_validate(x, w, static_cast<std::size_t>(w.shape[0]));
    const int m = w.shape[0], n = w.shape[1];
    if (grad_out.numel() != m) throw ShapeError("dense backward: gradient length mismatch");
    DenseGrads<T> g{TensorT<T>::zeros(x.shape), TensorT<T>::zeros(w.shape),
                    std::vector<T>(static_cast<std::size_t>(m))};
    for (int i = 0; i < m; ++i) {
        const T go = grad_out.data[static_cast<std::size_t>(i)];
        g.bias[static_cast<std::size_t>(i)] = go;
        const T* wrow = w.data.data() + static_cast<std::size_t>(i) * n;
        T* gwrow = g.weights.data.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            gwrow[j] = go * x.data[static_cast<std::size_t>(j)];
            g.input.data[static_cast<std::size_t>(j)] += go * wrow[j];
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// softmax_cross_entropy — stabilized by max subtraction; backward is
// softmax(logits) - one_hot(label).
// ---------------------------------------------------------------------------

template <typename T>
struct SoftmaxXentResult {
    double loss;
    std::vector<T> probs;
};

template <typename T>
SoftmaxXentResult<T> softmax_cross_entropy(const TensorT<T>& logits, int label) {
    const std::int64_t c = logits.numel();
    if (c < 2) throw ShapeError(str("softmax_cross_entropy: need >= 2 classes, got ", c));
    if (label < 0 || label >= c)
        throw ShapeError(str("softmax_cross_entropy: label ", label, " out of range [0,", c, ")"));
    double mx = -std::numeric_limits<double>::infinity();
    for (T v : logits.data) mx = std::max(mx, static_cast<double>(v));
    double sum = 0.0;
    std::vector<double> exps(static_cast<std::size_t>(c));
    for (std::size_t i = 0; i < exps.size(); ++i) {
        exps[i] = std::exp(static_cast<double>(logits.data[i]) - mx);
        sum += exps[i];
    }
    SoftmaxXentResult<T> res;
    res.loss = -(static_cast<double>(logits.data[static_cast<std::size_t>(label)]) - mx -
                 std::log(sum));
    res.probs.resize(static_cast<std::size_t>(c));
    for (std::size_t i = 0; i < exps.size(); ++i) res.probs[i] = static_cast<T>(exps[i] / sum);
    return res;
}

template <typename T>
TensorT<T> softmax_cross_entropy_backward(const SoftmaxXentResult<T>& fwd, int label) {
    TensorT<T> g({static_cast<int>(fwd.probs.size())}, fwd.probs);
    g.data[static_cast<std::size_t>(label)] -= T{1};
    return g;
}

// ---------------------------------------------------------------------------
// dropout — inverted scaling; identity when not training.
// ---------------------------------------------------------------------------

template <typename T>
struct DropoutResult {
    TensorT<T> output;
    std::vector<std::uint8_t> mask; // empty when the op was an identity
    T scale{1};
};

template <typename T>
DropoutResult<T> dropout(const TensorT<T>& input, double rate, std::uint64_t seed, bool training) {
    if (!(rate >= 0.0 && rate < 1.0))
        throw ShapeError(str("dropout: rate must lie in [0,1), got ", rate));
    DropoutResult<T> res;
    if (!training || rate == 0.0) {
        res.output = input;
        return res;
    }
    res.scale = static_cast<T>(1.0 / (1.0 - rate));
    res.mask.resize(input.data.size());
    res.output = input;
    Rng rng(seed);
    for (std::size_t i = 0; i < input.data.size(); ++i) {
        const bool keep = rng.unit() >= rate;
        res.mask[i] = keep ? 1 : 0;
        res.output.data[i] = keep ? input.data[i] * res.scale : T{0};
    }
    check_finite(res.output, "dropout");
    return res;
}

template <typename T>
TensorT<T> dropout_backward(const DropoutResult<T>& fwd, const TensorT<T>& grad_out) {
    if (fwd.mask.empty()) return grad_out;
    if (fwd.mask.size() != grad_out.data.size())
        throw ShapeError("dropout backward: mask/gradient size mismatch");
    TensorT<T> gin = grad_out;
    for (std::size_t i = 0; i < gin.data.size(); ++i)
        gin.data[i] = fwd.mask[i] ? gin.data[i] * fwd.scale : T{0};
    return gin;
}

} // namespace stylerep
