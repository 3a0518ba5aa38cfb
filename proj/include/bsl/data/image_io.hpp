#pragma once

#include <filesystem>

#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wdeprecated-enum-enum-conversion"
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#pragma GCC diagnostic pop

#include "../core/image.hpp"

namespace bsl {

// =====================================================================
// OpenCV bridge. Tensors are RGB in [0,1]; files go through 8-bit BGR.
// Geometric ops (resize, blur) run on double mats so repeated transforms
// do not accumulate quantization.
// =====================================================================

inline cv::Mat to_mat(const ImageTensor& img) {
    const int h = static_cast<int>(img.dim(0)), w = static_cast<int>(img.dim(1)),
              c = static_cast<int>(img.dim(2));
    cv::Mat m(h, w, CV_64FC(c));
    std::memcpy(m.ptr<double>(), img.data(), img.numel() * sizeof(double));
    return m;
}

inline ImageTensor from_mat(const cv::Mat& m) {
    if (m.depth() != CV_64F)
        throw validation_error("from_mat: expected CV_64F depth");
    ImageTensor img({static_cast<std::size_t>(m.rows), static_cast<std::size_t>(m.cols),
                     static_cast<std::size_t>(m.channels())});
    if (m.isContinuous()) {
        std::memcpy(img.data(), m.ptr<double>(), img.numel() * sizeof(double));
    } else {
        for (int r = 0; r < m.rows; ++r)
            std::memcpy(img.data() + static_cast<std::size_t>(r) * m.cols * m.channels(),
                        m.ptr<double>(r),
                        static_cast<std::size_t>(m.cols) * m.channels() * sizeof(double));
    }
    return img;
}

inline void clamp_unit(ImageTensor& img) {
    for (std::size_t i = 0; i < img.numel(); ++i) {
        if (img[i] < 0.0) img[i] = 0.0;
        else if (img[i] > 1.0) img[i] = 1.0;
    }
}

/** Decode a PNG/JPEG to an RGB [0,1] tensor; grayscale is replicated. */
inline ImageTensor load_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty())
        throw validation_error("load_image: cannot read '" + path.string() + "'");
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    cv::Mat f64;
    rgb.convertTo(f64, CV_64FC3, 1.0 / 255.0);
    return from_mat(f64);
}

/** Encode to 8-bit PNG (round-to-nearest quantization). */
inline void save_png(const ImageTensor& img, const std::filesystem::path& path) {
    validate_image(img, "save_png");
    cv::Mat f64 = to_mat(img);
    cv::Mat u8;
    f64.convertTo(u8, CV_8UC(f64.channels()), 255.0);
    cv::Mat bgr = u8;
    if (u8.channels() == 3) cv::cvtColor(u8, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path.string(), bgr))
        throw validation_error("save_png: cannot write '" + path.string() + "'");
}

/** Bilinear resize to side x side (identity when already that size). */
inline ImageTensor resize_bilinear(const ImageTensor& img, std::size_t h, std::size_t w) {
    if (img.dim(0) == h && img.dim(1) == w) return img;
    cv::Mat src = to_mat(img);
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(static_cast<int>(w), static_cast<int>(h)), 0, 0,
               cv::INTER_LINEAR);
    ImageTensor out = from_mat(dst);
    clamp_unit(out);
    return out;
}

} // namespace bsl
