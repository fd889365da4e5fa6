#include "stylerep/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace stylerep {

namespace {

Tensor mat_to_chw(const cv::Mat& bgr) {
    Tensor t = Tensor::zeros({3, bgr.rows, bgr.cols});
    const std::size_t plane = static_cast<std::size_t>(bgr.rows) * bgr.cols;
    for (int y = 0; y < bgr.rows; ++y) {
        const cv::Vec3f* row = bgr.ptr<cv::Vec3f>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            const std::size_t at = static_cast<std::size_t>(y) * bgr.cols + x;
            t.data[0 * plane + at] = row[x][2]; // R
            t.data[1 * plane + at] = row[x][1]; // G
            t.data[2 * plane + at] = row[x][0]; // B
        }
    }
    return t;
}

cv::Mat chw_to_mat(const Tensor& t) {
    require_rank(t, 3, "image tensor");
    if (t.shape[0] != 3)
        throw ShapeError(str("image tensor must have 3 channels, got ", t.shape[0]));
    cv::Mat bgr(t.shape[1], t.shape[2], CV_32FC3);
    const std::size_t plane = static_cast<std::size_t>(t.shape[1]) * t.shape[2];
    for (int y = 0; y < t.shape[1]; ++y) {
        cv::Vec3f* row = bgr.ptr<cv::Vec3f>(y);
        for (int x = 0; x < t.shape[2]; ++x) {
            const std::size_t at = static_cast<std::size_t>(y) * t.shape[2] + x;
            row[x] = {t.data[2 * plane + at], t.data[1 * plane + at], t.data[0 * plane + at]};
        }
    }
    return bgr;
}

} // namespace

Tensor load_image_rgb(const std::string& path) {
    cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);
    if (img.empty()) throw DataError(str("cannot decode image '", path, "'"));
    cv::Mat f;
    img.convertTo(f, CV_32FC3);
    return mat_to_chw(f);
}

void save_png(const std::string& path, const Tensor& image) {
    cv::Mat f = chw_to_mat(image);
    cv::Mat u8;
    f.convertTo(u8, CV_8UC3); // saturating round
    if (!cv::imwrite(path, u8)) throw DataError(str("cannot write PNG '", path, "'"));
}

Tensor resize_shorter(const Tensor& image, int target) {
    require_rank(image, 3, "resize input");
    if (target < 1) throw DataError(str("resize target ", target, " < 1"));
    const int h = image.shape[1], w = image.shape[2];
    int nh, nw;
    if (h <= w) {
        nh = target;
        nw = std::max(target, static_cast<int>(std::lround(
                                  static_cast<double>(w) * target / h)));
    } else {
        nw = target;
        nh = std::max(target, static_cast<int>(std::lround(
                                  static_cast<double>(h) * target / w)));
    }
    if (nh == h && nw == w) return image;
    cv::Mat src = chw_to_mat(image);
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(nw, nh), 0, 0, cv::INTER_LINEAR);
    return mat_to_chw(dst);
}

Tensor center_crop(const Tensor& image, int size) {
    require_rank(image, 3, "crop input");
    const int c = image.shape[0], h = image.shape[1], w = image.shape[2];
    if (size < 1 || size > h || size > w)
        throw ShapeError(str("center_crop: ", size, " from ", h, "x", w));
    const int y0 = (h - size) / 2, x0 = (w - size) / 2;
    Tensor out = Tensor::zeros({c, size, size});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) out.at3(ch, y, x) = image.at3(ch, y0 + y, x0 + x);
    return out;
}

Tensor preprocess_tensor(const Tensor& rgb, const PreprocessConfig& cfg) {
    cfg.validate();
    require_rank(rgb, 3, "preprocess input");
    Tensor t = center_crop(resize_shorter(rgb, cfg.resize), cfg.crop);
    if (!cfg.channel_means.empty()) {
        if (static_cast<int>(cfg.channel_means.size()) != t.shape[0])
            throw ShapeError(str("preprocess: ", cfg.channel_means.size(), " means for ",
                                 t.shape[0], " channels"));
        const std::size_t plane = static_cast<std::size_t>(t.shape[1]) * t.shape[2];
        for (int c = 0; c < t.shape[0]; ++c)
            for (std::size_t i = 0; i < plane; ++i)
                t.data[static_cast<std::size_t>(c) * plane + i] -=
                    cfg.channel_means[static_cast<std::size_t>(c)];
    }
    if (cfg.hflip) t = hflip_chw(t);
    return t;
}

Tensor preprocess_image(const std::string& path, const PreprocessConfig& cfg) {
    return preprocess_tensor(load_image_rgb(path), cfg);
}

} // namespace stylerep
