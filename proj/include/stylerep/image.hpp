#pragma once

#include <string>
#include <vector>

#include "stylerep/tensor.hpp"

namespace stylerep {

struct PreprocessConfig {
    int resize = 256; // shorter side after resize
    int crop = 224;   // center-crop extent
    std::vector<float> channel_means; // subtracted per channel (RGB order); empty = zeros
    bool hflip = false;

    void validate() const {
        if (crop < 1) throw DataError(str("preprocess: crop ", crop, " < 1"));
        if (resize < crop)
            throw DataError(str("preprocess: resize ", resize, " smaller than crop ", crop));
        for (float m : channel_means)
            if (!std::isfinite(m)) throw DataError("preprocess: non-finite channel mean");
    }
};

/// Decodes PNG/JPEG to a 3xHxW float tensor, RGB order, values in [0,255].
Tensor load_image_rgb(const std::string& path);

/// Writes a 3xHxW tensor (values clamped+rounded to [0,255]) as 8-bit PNG.
void save_png(const std::string& path, const Tensor& image);

/// Bilinear resize bringing the shorter spatial side to `target`.
Tensor resize_shorter(const Tensor& image, int target);

Tensor center_crop(const Tensor& image, int size);

/// resize -> center crop -> subtract per-channel mean -> optional horizontal
/// flip, on an already-decoded tensor.
Tensor preprocess_tensor(const Tensor& rgb, const PreprocessConfig& cfg);

/// Full chain from a file on disk.
Tensor preprocess_image(const std::string& path, const PreprocessConfig& cfg);

} // namespace stylerep
