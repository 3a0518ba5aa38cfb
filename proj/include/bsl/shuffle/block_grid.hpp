#pragma once

#include <vector>

#include "../core/image.hpp"

namespace bsl {

// A partition of an image into an m x n grid of s x s tiles, row-major.
struct BlockGrid {
    std::size_t m = 0;   // grid rows
    std::size_t n = 0;   // grid cols
    std::size_t s = 0;   // tile side in pixels
    std::size_t channels = 0;
    std::vector<DTensor> tiles;

    DTensor& tile(std::size_t i, std::size_t j) { return tiles[i * n + j]; }
    const DTensor& tile(std::size_t i, std::size_t j) const { return tiles[i * n + j]; }
};

inline BlockGrid partition_blocks(const ImageTensor& img, std::size_t s) {
    if (s == 0) throw validation_error("partition_blocks: block size must be positive");
    if (img.rank() != 3)
        throw validation_error("partition_blocks: image must be rank-3 [H,W,C]");
    const std::size_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
    if (h % s != 0)
        throw validation_error("partition_blocks: height " + std::to_string(h) +
                               " not divisible by block size " + std::to_string(s));
    if (w % s != 0)
        throw validation_error("partition_blocks: width " + std::to_string(w) +
                               " not divisible by block size " + std::to_string(s));

    BlockGrid g;
    g.m = h / s;
    g.n = w / s;
    g.s = s;
    g.channels = c;
    g.tiles.reserve(g.m * g.n);
    for (std::size_t bi = 0; bi < g.m; ++bi) {
        for (std::size_t bj = 0; bj < g.n; ++bj) {
            DTensor t({s, s, c});
            for (std::size_t y = 0; y < s; ++y)
                for (std::size_t x = 0; x < s; ++x)
                    for (std::size_t k = 0; k < c; ++k)
                        t.at(y, x, k) = img.at(bi * s + y, bj * s + x, k);
            g.tiles.push_back(std::move(t));
        }
    }
    return g;
}

inline ImageTensor assemble_blocks(const BlockGrid& g) {
    if (g.m == 0 || g.n == 0 || g.s == 0)
        throw structural_error("assemble_blocks: empty grid");
    if (g.tiles.size() != g.m * g.n)
        throw structural_error("assemble_blocks: tile count " +
                               std::to_string(g.tiles.size()) + " does not match grid " +
                               std::to_string(g.m) + "x" + std::to_string(g.n));
    for (const DTensor& t : g.tiles)
        if (t.rank() != 3 || t.dim(0) != g.s || t.dim(1) != g.s || t.dim(2) != g.channels)
            throw structural_error("assemble_blocks: ragged grid, tile shape " +
                                   t.shape_str() + " does not match s=" +
                                   std::to_string(g.s));

    ImageTensor img({g.m * g.s, g.n * g.s, g.channels});
    for (std::size_t bi = 0; bi < g.m; ++bi)
        for (std::size_t bj = 0; bj < g.n; ++bj) {
            const DTensor& t = g.tile(bi, bj);
            for (std::size_t y = 0; y < g.s; ++y)
                for (std::size_t x = 0; x < g.s; ++x)
                    for (std::size_t k = 0; k < g.channels; ++k)
                        img.at(bi * g.s + y, bj * g.s + x, k) = t.at(y, x, k);
        }
    return img;
}

/**
 * Permute the pixels of one tile: out pixel at flat spatial index k takes
 * the input pixel at perm[k]. Flat index is row-major over the s x s tile;
 * all channels of a pixel move together.
 */
inline DTensor intra_shuffle_block(const DTensor& tile, const std::vector<std::size_t>& perm) {
    if (tile.rank() != 3 || tile.dim(0) != tile.dim(1))
        throw validation_error("intra_shuffle_block: tile must be square rank-3");
    const std::size_t s = tile.dim(0), c = tile.dim(2), n = s * s;
    if (perm.size() != n)
        throw validation_error("intra_shuffle_block: permutation length " +
                               std::to_string(perm.size()) + " != " + std::to_string(n));
    std::vector<bool> seen(n, false);
    for (std::size_t p : perm) {
        if (p >= n || seen[p])
            throw validation_error("intra_shuffle_block: not a permutation of 0.." +
                                   std::to_string(n - 1));
        seen[p] = true;
    }
    DTensor out({s, s, c});
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = perm[k];
        const std::size_t dy = k / s, dx = k % s;
        const std::size_t sy = src / s, sx = src % s;
        for (std::size_t ch = 0; ch < c; ++ch)
            out.at(dy, dx, ch) = tile.at(sy, sx, ch);
    }
    return out;
}

} // namespace bsl
