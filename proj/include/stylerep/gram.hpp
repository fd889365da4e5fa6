#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stylerep/tensor.hpp"

namespace stylerep {

/// Channel-by-channel inner-product matrix of a CHW feature map:
/// G[i][j] = sum_k F[i][k] * F[j][k] with the map reshaped to N x M, M = H*W.
/// Stored unnormalized; the losses carry the 1/(N*M) style prefactors.
template <typename T>
struct GramMatrixT {
    std::string layer;
    int channels = 0;        // N
    std::int64_t spatial = 0; // M the matrix was computed from
    std::vector<T> values;    // N x N row-major, symmetric by construction

    T at(int i, int j) const { return values[static_cast<std::size_t>(i) * channels + j]; }
    T& at(int i, int j) { return values[static_cast<std::size_t>(i) * channels + j]; }
};

using GramMatrix = GramMatrixT<float>;

namespace detail {
// Dot product of two rows; compensated (Kahan) accumulation once the spatial
// size is large enough for the f32 error to matter.
template <typename T>
T row_dot(const T* a, const T* b, std::int64_t m, bool compensated) {
    if (!compensated) {
        T acc{0};
        for (std::int64_t k = 0; k < m; ++k) acc += a[k] * b[k];
        return acc;
    }
    T sum{0}, carry{0};
    for (std::int64_t k = 0; k < m; ++k) {
        const T term = a[k] * b[k] - carry;
        const T next = sum + term;
        carry = (next - sum) - term;
        sum = next;
    }
    return sum;
}
} // namespace detail

inline constexpr std::int64_t kGramCompensationThreshold = 4096;

template <typename T>
GramMatrixT<T> gram_matrix(const TensorT<T>& feature_map, std::string layer = {}) {
    require_rank(feature_map, 3, "gram_matrix input");
    const int n = feature_map.shape[0];
    const std::int64_t m =
        static_cast<std::int64_t>(feature_map.shape[1]) * feature_map.shape[2];
    GramMatrixT<T> g;
    g.layer = std::move(layer);
    g.channels = n;
    g.spatial = m;
    g.values.assign(static_cast<std::size_t>(n) * n, T{0});
    const bool compensated = m > kGramCompensationThreshold;

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const T* row_i = feature_map.data.data() + static_cast<std::size_t>(i) * m;
        for (int j = i; j < n; ++j) {
            const T* row_j = feature_map.data.data() + static_cast<std::size_t>(j) * m;
            const T v = detail::row_dot(row_i, row_j, m, compensated);
            g.at(i, j) = v;
            g.at(j, i) = v; // each pair computed once; symmetry exact
        }
    }
    return g;
}

/// d(loss)/dF for a Gram computed from F, given d(loss)/dG:
/// dL/dF = (dG + dG^T) * F, reshaped back to the feature map layout.
template <typename T>
TensorT<T> gram_backward(const TensorT<T>& feature_map, const GramMatrixT<T>& grad_g) {
    require_rank(feature_map, 3, "gram_backward input");
    const int n = feature_map.shape[0];
    const std::int64_t m =
        static_cast<std::int64_t>(feature_map.shape[1]) * feature_map.shape[2];
    if (grad_g.channels != n)
        throw ShapeError(str("gram_backward: gradient is ", grad_g.channels, "x", grad_g.channels,
                             ", feature map has ", n, " channels"));
    TensorT<T> gin = TensorT<T>::zeros(feature_map.shape);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        T* out_row = gin.data.data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < n; ++j) {
            const T c = grad_g.at(i, j) + grad_g.at(j, i);
            if (c == T{0}) continue;
            const T* f_row = feature_map.data.data() + static_cast<std::size_t>(j) * m;
            for (std::int64_t k = 0; k < m; ++k) out_row[k] += c * f_row[k];
        }
    }
    return gin;
}

/// Strict upper triangle (i < j) in row-major order, length N(N-1)/2.
/// The diagonal is excluded; `include_diagonal` switches to the variant with
/// it (length N(N+1)/2), which is off by default.
template <typename T>
std::vector<T> flatten_symmetric(const GramMatrixT<T>& g, bool include_diagonal = false) {
    const int n = g.channels;
    std::vector<T> out;
    out.reserve(static_cast<std::size_t>(n) * (n - 1) / 2 + (include_diagonal ? n : 0));
    for (int i = 0; i < n; ++i)
        for (int j = include_diagonal ? i : i + 1; j < n; ++j) out.push_back(g.at(i, j));
    return out;
}

inline std::int64_t flatten_symmetric_length(int channels, bool include_diagonal = false) {
    const std::int64_t n = channels;
    return include_diagonal ? n * (n + 1) / 2 : n * (n - 1) / 2;
}

/// Rebuilds a symmetric matrix from its strict upper triangle plus a
/// separately provided diagonal.
template <typename T>
GramMatrixT<T> unflatten_symmetric(std::span<const T> upper, std::span<const T> diagonal) {
    const int n = static_cast<int>(diagonal.size());
    if (static_cast<std::int64_t>(upper.size()) != flatten_symmetric_length(n))
        throw ShapeError(str("unflatten_symmetric: ", upper.size(),
                             " off-diagonal values do not fit ", n, " channels"));
    GramMatrixT<T> g;
    g.channels = n;
    g.values.assign(static_cast<std::size_t>(n) * n, T{0});
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
        g.at(i, i) = diagonal[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j, ++k) {
            g.at(i, j) = upper[k];
            g.at(j, i) = upper[k];
        }
    }
    return g;
}

/// Per-layer Gram matrices of one image plus their symmetric flattenings.
struct StyleFeature {
    std::vector<GramMatrix> grams;             // ordered as requested taps
    std::vector<std::vector<float>> flattened; // same order, strict upper triangles
    std::string image_id;

    std::int64_t total_length() const {
        std::int64_t n = 0;
        for (const auto& v : flattened) n += static_cast<std::int64_t>(v.size());
        return n;
    }
};

struct Network;

/// One forward pass, then Gram + flatten at every requested tap.
StyleFeature extract_style_features(const Network& net, const Tensor& image,
                                    const std::vector<std::string>& taps,
                                    std::string image_id = {});

} // namespace stylerep
