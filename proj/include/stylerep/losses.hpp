#pragma once

#include <cstdint>
#include <vector>

#include "stylerep/gram.hpp"
#include "stylerep/tensor.hpp"

namespace stylerep {

/// Squared-error content objective over feature maps, summed across layers
/// with a 1/(N*M) prefactor per layer. Gradient w.r.t. each F is
/// 2*(F - P)/(N*M).
template <typename T>
struct ContentLossResult {
    double loss = 0.0;
    std::vector<TensorT<T>> grads; // w.r.t. x's feature maps, per layer
};

template <typename T>
ContentLossResult<T> content_loss(const std::vector<TensorT<T>>& x_maps,
                                  const std::vector<TensorT<T>>& p_maps) {
    if (x_maps.size() != p_maps.size())
        throw ShapeError(str("content_loss: ", x_maps.size(), " vs ", p_maps.size(), " layers"));
    ContentLossResult<T> res;
    res.grads.reserve(x_maps.size());
    for (std::size_t l = 0; l < x_maps.size(); ++l) {
        const TensorT<T>& f = x_maps[l];
        const TensorT<T>& p = p_maps[l];
        if (f.shape != p.shape)
            throw ShapeError(str("content_loss: layer ", l, " shapes ", f.shape_str(), " vs ",
                                 p.shape_str()));
        require_rank(f, 3, "content_loss feature map");
        const double n = f.shape[0];
        const double m = static_cast<double>(f.shape[1]) * f.shape[2];
        const double inv = 1.0 / (n * m);
        TensorT<T> grad = TensorT<T>::zeros(f.shape);
        double acc = 0.0;
        for (std::size_t i = 0; i < f.data.size(); ++i) {
            const double d = static_cast<double>(f.data[i]) - static_cast<double>(p.data[i]);
            acc += d * d;
            grad.data[i] = static_cast<T>(2.0 * d * inv);
        }
        res.loss += inv * acc;
        res.grads.push_back(std::move(grad));
    }
    return res;
}

/// Squared-error style objective over Gram matrices, summed across layers
/// with a 1/(N^2*M^2) prefactor. Gradient w.r.t. each G is
/// 2*(G - A)/(N^2*M^2); chaining through gram_matrix (gram_backward) turns it
/// into a feature-map gradient.
template <typename T>
struct StyleLossResult {
    double loss = 0.0;
    std::vector<GramMatrixT<T>> grads; // w.r.t. x's Gram matrices, per layer
};

struct LayerDims {
    std::int64_t channels = 0; // N
    std::int64_t spatial = 0;  // M
};

template <typename T>
StyleLossResult<T> style_loss(const std::vector<GramMatrixT<T>>& x_grams,
                              const std::vector<GramMatrixT<T>>& a_grams,
                              const std::vector<LayerDims>& dims) {
    if (x_grams.size() != a_grams.size() || x_grams.size() != dims.size())
        throw ShapeError(str("style_loss: ", x_grams.size(), " x-layers, ", a_grams.size(),
                             " a-layers, ", dims.size(), " dim entries"));
    StyleLossResult<T> res;
    res.grads.reserve(x_grams.size());
    for (std::size_t l = 0; l < x_grams.size(); ++l) {
        const GramMatrixT<T>& g = x_grams[l];
        const GramMatrixT<T>& a = a_grams[l];
        if (g.channels != a.channels)
            throw ShapeError(str("style_loss: layer ", l, " Gram sizes ", g.channels, " vs ",
                                 a.channels));
        if (dims[l].channels != g.channels)
            throw ShapeError(str("style_loss: layer ", l, " dims say N=", dims[l].channels,
                                 ", Gram is ", g.channels, "x", g.channels));
        const double nm = static_cast<double>(dims[l].channels) * dims[l].spatial;
        const double inv = 1.0 / (nm * nm);
        GramMatrixT<T> grad;
        grad.layer = g.layer;
        grad.channels = g.channels;
        grad.spatial = g.spatial;
        grad.values.assign(g.values.size(), T{0});
        double acc = 0.0;
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            const double d = static_cast<double>(g.values[i]) - static_cast<double>(a.values[i]);
            acc += d * d;
            grad.values[i] = static_cast<T>(2.0 * d * inv);
        }
        res.loss += inv * acc;
        res.grads.push_back(std::move(grad));
    }
    return res;
}

} // namespace stylerep
