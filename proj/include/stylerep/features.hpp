#pragma once

#include <span>
#include <vector>

#include "stylerep/errors.hpp"

namespace stylerep {

/// Row-major n x d float matrix; one feature vector per row.
struct FeatureMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> values;

    FeatureMatrix() = default;
    FeatureMatrix(int r, int c)
        : rows(r), cols(c),
          values(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0f) {
        if (r < 0 || c < 0) throw ShapeError(str("feature matrix ", r, "x", c));
    }

    float& at(int r, int c) {
        return values[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)];
    }
    float at(int r, int c) const {
        return values[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)];
    }
    std::span<float> row(int r) {
        return {values.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
    std::span<const float> row(int r) const {
        return {values.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
};

} // namespace stylerep
