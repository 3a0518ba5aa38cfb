#pragma once

#include <cstdint>
#include <vector>

#include "../core/rng.hpp"
#include "block_grid.hpp"
#include "coords.hpp"

namespace bsl {

// =====================================================================
// Dual-grid shuffling transform.
//
// An image is first tile-shuffled on a coarse s_inter grid (recording the
// source cell of every tile), then pixel-shuffled inside a random subset
// of fine s_intra blocks (recording a 0/1 mark per block). The transform
// is self-labelling: the mark matrix supervises the anti-noise branch and
// the source coordinates supervise the position-restoration branch.
// =====================================================================

struct ShuffleConfig {
    std::size_t s_intra = 16;   // fine grid block side
    std::size_t s_inter = 32;   // coarse grid block side, multiple of s_intra
    double q_lo = 0.4;          // per-image intra ratio q ~ U(q_lo, q_hi)
    double q_hi = 0.6;
    double p_inter = 1.0;       // probability the coarse shuffle is applied
    std::uint64_t seed = 0;     // root seed for stream derivation

    void validate() const {
        if (s_intra == 0 || s_inter == 0)
            throw validation_error("ShuffleConfig: block sizes must be positive");
        if (s_inter % s_intra != 0)
            throw validation_error("ShuffleConfig: s_inter " + std::to_string(s_inter) +
                                   " must be a multiple of s_intra " + std::to_string(s_intra));
        if (!(q_lo >= 0.0 && q_hi <= 1.0 && q_lo <= q_hi))
            throw validation_error("ShuffleConfig: require 0 <= q_lo <= q_hi <= 1");
        if (!(p_inter >= 0.0 && p_inter <= 1.0))
            throw validation_error("ShuffleConfig: p_inter outside [0,1]");
    }

    void validate_for(std::size_t h, std::size_t w) const {
        validate();
        if (h % s_inter != 0)
            throw validation_error("ShuffleConfig: height " + std::to_string(h) +
                                   " not divisible by s_inter " + std::to_string(s_inter));
        if (w % s_inter != 0)
            throw validation_error("ShuffleConfig: width " + std::to_string(w) +
                                   " not divisible by s_inter " + std::to_string(s_inter));
    }
};

// 0/1 matrix over the fine grid: 1 where a block was pixel-shuffled.
struct IntraMark {
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<std::uint8_t> mark;   // row-major, size m*n

    std::uint8_t at(std::size_t i, std::size_t j) const { return mark[i * n + j]; }
    std::uint8_t& at(std::size_t i, std::size_t j) { return mark[i * n + j]; }

    double mean() const {
        if (mark.empty()) return 0.0;
        std::size_t sum = 0;
        for (std::uint8_t v : mark) sum += v;
        return static_cast<double>(sum) / static_cast<double>(mark.size());
    }
};

struct ShuffleOutcome {
    ImageTensor image;        // the transformed image
    IntraMark mark;           // fine-grid shuffle marks
    CoordTarget coords;       // coarse-grid source coordinates
    bool inter_applied = false;
    ShuffleConfig config;

    // Inversion records: per fine-grid block, the drawn permutation
    // (empty where the block was left alone). Strippable for transport.
    std::vector<std::vector<std::size_t>> intra_perms;
    bool has_records = true;

    void strip_records() {
        intra_perms.clear();
        has_records = false;
    }
};

/**
 * Apply the dual-grid transform. All randomness comes from `stream`; the
 * draw order is fixed (coarse gate, coarse permutation if applied, ratio q,
 * then one gate per fine block in row-major order, plus one permutation
 * per gated block), so equal streams give bit-identical outcomes.
 */
inline ShuffleOutcome shuffle_image(const ImageTensor& img, const ShuffleConfig& cfg,
                                    RngStream& stream) {
    validate_image(img, "shuffle_image");
    const std::size_t h = img.dim(0), w = img.dim(1);
    cfg.validate_for(h, w);

    ShuffleOutcome out;
    out.config = cfg;

    // Coarse grid: tile shuffle.
    BlockGrid coarse = partition_blocks(img, cfg.s_inter);
    const std::size_t nb = coarse.m * coarse.n;
    out.inter_applied = stream.uniform() < cfg.p_inter;
    out.coords.m = coarse.m;
    out.coords.n = coarse.n;
    out.coords.source.resize(nb);
    if (out.inter_applied) {
        const std::vector<std::size_t> perm = stream.permutation(nb);
        std::vector<DTensor> shuffled(nb);
        for (std::size_t t = 0; t < nb; ++t) {
            shuffled[t] = std::move(coarse.tiles[perm[t]]);
            out.coords.source[t] = {perm[t] / coarse.n, perm[t] % coarse.n};
        }
        coarse.tiles = std::move(shuffled);
    } else {
        for (std::size_t t = 0; t < nb; ++t)
            out.coords.source[t] = {t / coarse.n, t % coarse.n};
    }
    ImageTensor staged = assemble_blocks(coarse);

    // Fine grid: per-block pixel shuffle at per-image ratio q.
    const double q = stream.uniform(cfg.q_lo, cfg.q_hi);
    BlockGrid fine = partition_blocks(staged, cfg.s_intra);
    out.mark.m = fine.m;
    out.mark.n = fine.n;
    out.mark.mark.assign(fine.m * fine.n, 0);
    out.intra_perms.resize(fine.m * fine.n);
    for (std::size_t b = 0; b < fine.m * fine.n; ++b) {
        if (stream.uniform() < q) {
            std::vector<std::size_t> perm = stream.permutation(cfg.s_intra * cfg.s_intra);
            fine.tiles[b] = intra_shuffle_block(fine.tiles[b], perm);
            out.mark.mark[b] = 1;
            out.intra_perms[b] = std::move(perm);
        }
    }
    out.image = assemble_blocks(fine);
    return out;
}

/** Invert the transform exactly from its records. */
inline ImageTensor unshuffle_image(const ShuffleOutcome& outcome) {
    if (!outcome.has_records ||
        outcome.intra_perms.size() != outcome.mark.mark.size())
        throw unsupported_error("unshuffle_image: permutation records are missing");

    const ShuffleConfig& cfg = outcome.config;

    // Undo the fine-grid pixel shuffles.
    BlockGrid fine = partition_blocks(outcome.image, cfg.s_intra);
    for (std::size_t b = 0; b < fine.tiles.size(); ++b) {
        if (!outcome.mark.mark[b]) continue;
        const std::vector<std::size_t>& perm = outcome.intra_perms[b];
        if (perm.empty())
            throw unsupported_error("unshuffle_image: marked block lacks its permutation");
        std::vector<std::size_t> inv(perm.size());
        for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
        fine.tiles[b] = intra_shuffle_block(fine.tiles[b], inv);
    }
    ImageTensor staged = assemble_blocks(fine);

    // Undo the coarse-grid tile shuffle.
    BlockGrid coarse = partition_blocks(staged, cfg.s_inter);
    std::vector<DTensor> restored(coarse.tiles.size());
    for (std::size_t t = 0; t < coarse.tiles.size(); ++t) {
        const GridPos& src = outcome.coords.source[t];
        restored[src.row * coarse.n + src.col] = std::move(coarse.tiles[t]);
    }
    coarse.tiles = std::move(restored);
    return assemble_blocks(coarse);
}

} // namespace bsl
