#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "stylerep/errors.hpp"
#include "stylerep/rng.hpp"

namespace stylerep {

/// Dense row-major tensor. Semantic layouts in use: CHW for feature maps,
/// OIHW for convolution kernels, flat vectors for dense layers.
template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;
    TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != static_cast<std::int64_t>(data.size()))
            throw ShapeError(str("tensor: shape ", shape_string(shape), " implies ",
                                 numel_of(shape), " elements, got ", data.size()));
    }

    static std::int64_t numel_of(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int e : s) {
            if (e <= 0) throw ShapeError(str("tensor: nonpositive extent in shape ", shape_string(s)));
            n *= e;
        }
        return n;
    }

    static std::string shape_string(const std::vector<int>& s) {
        std::string out = "[";
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i) out += "x";
            out += std::to_string(s[i]);
        }
        return out + "]";
    }

    static TensorT zeros(std::vector<int> s) {
        std::int64_t n = numel_of(s);
        return TensorT(std::move(s), std::vector<T>(static_cast<std::size_t>(n), T{0}));
    }

    static TensorT full(std::vector<int> s, T value) {
        std::int64_t n = numel_of(s);
        return TensorT(std::move(s), std::vector<T>(static_cast<std::size_t>(n), value));
    }

    static TensorT uniform(std::vector<int> s, Rng& rng, T lo, T hi) {
        TensorT t = zeros(std::move(s));
        for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
        return t;
    }

    static TensorT normal(std::vector<int> s, Rng& rng, T mean, T stddev) {
        TensorT t = zeros(std::move(s));
        for (auto& v : t.data) v = static_cast<T>(rng.normal(mean, stddev));
        return t;
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    std::string shape_str() const { return shape_string(shape); }

    int extent(int axis) const { return shape[static_cast<std::size_t>(axis)]; }

    // CHW accessors.
    T& at3(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    T at3(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }

    template <typename U>
    TensorT<U> cast() const {
        std::vector<U> d(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) d[i] = static_cast<U>(data[i]);
        return TensorT<U>(shape, std::move(d));
    }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

/// Output validation hook; compiled in for debug/test configurations.
template <typename T>
inline void check_finite(const TensorT<T>& t, const char* where) {
#ifdef STYLEREP_VALIDATE_FINITE
    if (!t.all_finite())
        throw NumericError(str(where, ": non-finite value in output tensor ", t.shape_str()));
#else
    (void)t;
    (void)where;
#endif
}

template <typename T>
void require_rank(const TensorT<T>& t, int rank, const char* what) {
    if (t.rank() != rank)
        throw ShapeError(str(what, ": expected rank ", rank, ", got shape ", t.shape_str()));
}

/// Horizontal flip of a CHW tensor (used by training augmentation).
template <typename T>
TensorT<T> hflip_chw(const TensorT<T>& t) {
    require_rank(t, 3, "hflip");
    TensorT<T> out = TensorT<T>::zeros(t.shape);
    const int C = t.shape[0], H = t.shape[1], W = t.shape[2];
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) out.at3(c, y, x) = t.at3(c, y, W - 1 - x);
    return out;
}

} // namespace stylerep
