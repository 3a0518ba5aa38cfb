#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "../core/tensor.hpp"

namespace bsl {

// A cell of a block grid.
struct GridPos {
    std::size_t row = 0;
    std::size_t col = 0;
    bool operator==(const GridPos&) const = default;
};

inline double normalize_coord(std::size_t index, std::size_t extent) {
    // Maps 0..extent-1 onto [-1, 1]; a degenerate single-cell axis maps to 0.
    if (extent <= 1) return 0.0;
    return 2.0 * static_cast<double>(index) / static_cast<double>(extent - 1) - 1.0;
}

inline std::size_t decode_coord(double v, std::size_t extent) {
    if (extent <= 1) return 0;
    const double raw = (v + 1.0) / 2.0 * static_cast<double>(extent - 1);
    long idx = std::lround(raw);
    if (idx < 0) idx = 0;
    const long hi = static_cast<long>(extent) - 1;
    if (idx > hi) idx = hi;
    return static_cast<std::size_t>(idx);
}

/**
 * Normalized source-coordinate targets for block-position restoration.
 * source(i, j) is the grid cell the tile now at (i, j) came from;
 * normalized() lays the same mapping out as an [m, n, 2] tensor with
 * channel 0 = row coordinate, channel 1 = column coordinate, each in [-1, 1].
 */
struct CoordTarget {
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<GridPos> source;   // row-major, size m*n

    const GridPos& at(std::size_t i, std::size_t j) const { return source[i * n + j]; }
    GridPos& at(std::size_t i, std::size_t j) { return source[i * n + j]; }

    DTensor normalized() const {
        DTensor t({m, n, 2});
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                t.at(i, j, 0) = normalize_coord(at(i, j).row, m);
                t.at(i, j, 1) = normalize_coord(at(i, j).col, n);
            }
        return t;
    }

    static CoordTarget identity(std::size_t m, std::size_t n) {
        CoordTarget ct;
        ct.m = m;
        ct.n = n;
        ct.source.resize(m * n);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) ct.at(i, j) = {i, j};
        return ct;
    }
};

/** Decode an [m, n, 2] prediction tensor back to integer grid cells. */
inline std::vector<GridPos> decode_coords(const DTensor& pred) {
    if (pred.rank() != 3 || pred.dim(2) != 2)
        throw validation_error("decode_coords: expected [m,n,2] tensor, got " +
                               pred.shape_str());
    const std::size_t m = pred.dim(0), n = pred.dim(1);
    std::vector<GridPos> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i * n + j] = {decode_coord(pred.at(i, j, 0), m),
                              decode_coord(pred.at(i, j, 1), n)};
    return out;
}

} // namespace bsl
