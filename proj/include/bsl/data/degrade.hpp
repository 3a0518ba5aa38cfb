#pragma once

#include <string>

#include "image_io.hpp"

namespace bsl {

// =====================================================================
// Test-time degradations. Both operate on [0,1] images and return the
// original resolution:
//   resize:<side>  bilinear down to side x side, bilinear back up
//   blur:<k>       Gaussian blur, k x k kernel, sigma = 0.3*((k-1)/2 - 1) + 0.8
// =====================================================================

struct Degradation {
    enum class Kind { resize, blur };
    Kind kind = Kind::resize;
    int parameter = 0;

    void validate() const {
        if (kind == Kind::resize) {
            if (parameter < 2)
                throw validation_error("degradation: resize side must be >= 2, got " +
                                       std::to_string(parameter));
        } else {
            if (parameter < 3 || parameter % 2 == 0)
                throw validation_error("degradation: blur kernel must be odd and >= 3, got " +
                                       std::to_string(parameter));
        }
    }

    std::string tag() const {
        return (kind == Kind::resize ? "resize:" : "blur:") + std::to_string(parameter);
    }

    static Degradation parse(const std::string& s) {
        const std::size_t colon = s.find(':');
        if (colon == std::string::npos)
            throw validation_error("degradation: expected '<kind>:<parameter>', got '" + s + "'");
        const std::string kind_str = s.substr(0, colon);
        const std::string param_str = s.substr(colon + 1);
        Degradation d;
        if (kind_str == "resize") d.kind = Kind::resize;
        else if (kind_str == "blur") d.kind = Kind::blur;
        else
            throw validation_error("degradation: unknown kind '" + kind_str + "'");
        try {
            std::size_t used = 0;
            d.parameter = std::stoi(param_str, &used);
            if (used != param_str.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw validation_error("degradation: bad parameter '" + param_str + "'");
        }
        d.validate();
        return d;
    }
};

inline double blur_sigma(int k) { return 0.3 * ((k - 1) * 0.5 - 1.0) + 0.8; }

inline ImageTensor apply_degradation(const ImageTensor& img, const Degradation& d) {
    d.validate();
    if (d.kind == Degradation::Kind::resize) {
        const std::size_t h = img.dim(0), w = img.dim(1);
        const std::size_t side = static_cast<std::size_t>(d.parameter);
        if (side == h && side == w) return img;
        ImageTensor down = resize_bilinear(img, side, side);
        return resize_bilinear(down, h, w);
    }
    cv::Mat src = to_mat(img);
    cv::Mat dst;
    const double sigma = blur_sigma(d.parameter);
    cv::GaussianBlur(src, dst, cv::Size(d.parameter, d.parameter), sigma, sigma);
    ImageTensor out = from_mat(dst);
    clamp_unit(out);
    return out;
}

} // namespace bsl
