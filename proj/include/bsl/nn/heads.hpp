#pragma once

#include <memory>

#include "layers.hpp"

namespace bsl::nn {

// =====================================================================
// Grid-aligned prediction heads. A head reads one tapped feature map
// [N, h, w, c], aligns it to the supervision grid [m, n], and projects
// with a 1x1 convolution. Alignment is depth-to-space when the grid is
// an integer upscale of the feature map (channels permitting must be
// checked at build time), nearest-neighbor resampling otherwise.
// =====================================================================

class GridHead {
public:
    GridHead(std::string name, std::size_t feat_h, std::size_t feat_w, std::size_t feat_c,
             std::size_t grid_m, std::size_t grid_n, std::size_t out_ch, bool clamp)
        : name_(std::move(name)), grid_m_(grid_m), grid_n_(grid_n), clamp_(clamp) {
        if (grid_m == 0 || grid_n == 0)
            throw config_error(name_ + ": grid dimensions must be positive");
        std::size_t proj_in = feat_c;
        if (grid_m % feat_h == 0 && grid_n % feat_w == 0 &&
            grid_m / feat_h == grid_n / feat_w) {
            const std::size_t r = grid_m / feat_h;
            if (feat_c % (r * r) != 0)
                throw config_error(name_ + ": feature channels " + std::to_string(feat_c) +
                                   " not divisible by r^2=" + std::to_string(r * r) +
                                   " for depth-to-space alignment");
            align_ = std::make_unique<DepthToSpace>(r);
            depth_to_space_ = true;
            proj_in = feat_c / (r * r);
        } else {
            align_ = std::make_unique<NearestResize>(grid_m, grid_n);
        }
        proj_ = std::make_unique<Conv2d>(proj_in, out_ch, 1, 1, 0);
    }

    DTensor forward(const DTensor& feat, bool training) {
        DTensor y = proj_->forward(align_->forward(feat, training), training);
        if (clamp_) y = clamp_layer_.forward(y, training);
        return y;
    }

    DTensor backward(const DTensor& g) {
        DTensor gg = clamp_ ? clamp_layer_.backward(g) : g;
        return align_->backward(proj_->backward(gg));
    }

    void collect_params(std::vector<Param>& out) {
        proj_->collect_params(name_ + ".proj", out);
    }

    const std::string& name() const { return name_; }
    std::size_t grid_m() const { return grid_m_; }
    std::size_t grid_n() const { return grid_n_; }
    bool uses_depth_to_space() const { return depth_to_space_; }

private:
    std::string name_;
    std::size_t grid_m_, grid_n_;
    bool clamp_;
    bool depth_to_space_ = false;
    std::unique_ptr<Layer> align_;
    std::unique_ptr<Conv2d> proj_;
    Hardtanh clamp_layer_;
};

/** Per-block shuffle logits over the fine grid: [N, h, w, c] -> [N, m_a, n_a, 1]. */
class AdversarialHead : public GridHead {
public:
    AdversarialHead(std::size_t feat_h, std::size_t feat_w, std::size_t feat_c,
                    std::size_t m, std::size_t n)
        : GridHead("adv_head", feat_h, feat_w, feat_c, m, n, 1, false) {}
};

/** Normalized source coordinates over the coarse grid: -> [N, m_b, n_b, 2], clamped. */
class RestorationHead : public GridHead {
public:
    RestorationHead(std::size_t feat_h, std::size_t feat_w, std::size_t feat_c,
                    std::size_t m, std::size_t n)
        : GridHead("rest_head", feat_h, feat_w, feat_c, m, n, 2, true) {}
};

} // namespace bsl::nn
