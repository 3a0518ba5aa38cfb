#pragma once

#include <cmath>

#include "tensor.hpp"

namespace bsl {

// A decoded image: rank-3 [H, W, C] tensor, C in {1, 3}, values in [0, 1].
using ImageTensor = DTensor;

inline void validate_image(const ImageTensor& img, const char* who) {
    if (img.rank() != 3)
        throw validation_error(std::string(who) + ": image must be rank-3 [H,W,C], got " +
                               img.shape_str());
    const std::size_t c = img.dim(2);
    if (c != 1 && c != 3)
        throw validation_error(std::string(who) + ": channel count must be 1 or 3, got " +
                               std::to_string(c));
    for (std::size_t i = 0; i < img.numel(); ++i) {
        const double v = img[i];
        if (!(v >= 0.0 && v <= 1.0))
            throw validation_error(std::string(who) + ": pixel value " + std::to_string(v) +
                                   " outside [0,1]");
    }
}

inline ImageTensor flip_horizontal(const ImageTensor& img) {
    const std::size_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
    ImageTensor out({h, w, c});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t k = 0; k < c; ++k)
                out.at(y, x, k) = img.at(y, w - 1 - x, k);
    return out;
}

} // namespace bsl
