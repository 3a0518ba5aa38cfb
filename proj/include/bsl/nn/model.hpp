#pragma once

#include "../shuffle/shuffle.hpp"
#include "backbone.hpp"
#include "heads.hpp"

namespace bsl::nn {

// =====================================================================
// Full model: backbone trunk + classifier, with the two self-supervision
// heads tapped off intermediate features. The classifier path never
// reads head outputs, so attaching heads cannot change its predictions.
// =====================================================================

struct ModelConfig {
    std::string backbone = "small";
    std::size_t input_side = 224;
    std::size_t in_channels = 3;
    ShuffleConfig shuffle;
    bool attach_heads = true;
    std::string tap_u;   // adversarial tap name; empty selects by stride
    std::string tap_v;   // restoration tap name; empty selects by stride
};

class Model {
public:
    Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        cfg.shuffle.validate_for(cfg.input_side, cfg.input_side);
        backbone_ = make_backbone(cfg.backbone, cfg.in_channels);
        if (cfg.input_side % backbone_->stride_total != 0)
            throw config_error("input side " + std::to_string(cfg.input_side) +
                               " not divisible by backbone stride " +
                               std::to_string(backbone_->stride_total));

        grid_ma_ = cfg.input_side / cfg.shuffle.s_intra;
        grid_mb_ = cfg.input_side / cfg.shuffle.s_inter;

        if (cfg.attach_heads) {
            const TapInfo& u = cfg.tap_u.empty() ? select_tap(grid_ma_)
                                                 : backbone_->tap_by_name(cfg.tap_u);
            const TapInfo& v = cfg.tap_v.empty() ? select_tap(grid_mb_)
                                                 : backbone_->tap_by_name(cfg.tap_v);
            tap_u_ = u;
            tap_v_ = v;
            adv_ = std::make_unique<AdversarialHead>(feat_side(u), feat_side(u), u.channels,
                                                     grid_ma_, grid_ma_);
            rest_ = std::make_unique<RestorationHead>(feat_side(v), feat_side(v), v.channels,
                                                      grid_mb_, grid_mb_);
        }

        backbone_->collect_params(theta_);
        if (adv_) adv_->collect_params(psi_);
        if (rest_) rest_->collect_params(phi_);
        init_params(theta_, seed);
        init_params(psi_, seed);
        init_params(phi_, seed);
    }

    struct Forward {
        DTensor logits;   // [N, 1]
        DTensor adv;      // [N, m_a, n_a, 1], empty without heads
        DTensor coords;   // [N, m_b, n_b, 2], empty without heads
    };

    Forward forward(const DTensor& x, bool training) {
        if (x.rank() != 4 || x.dim(1) != cfg_.input_side || x.dim(2) != cfg_.input_side ||
            x.dim(3) != cfg_.in_channels)
            throw validation_error("Model: expected [N," + std::to_string(cfg_.input_side) +
                                   "," + std::to_string(cfg_.input_side) + "," +
                                   std::to_string(cfg_.in_channels) + "], got " +
                                   x.shape_str());
        Forward f;
        if (adv_) {
            std::vector<DTensor> taps;
            DTensor trunk_out = backbone_->trunk.forward_taps(
                x, training, {tap_u_.layer_index, tap_v_.layer_index}, taps);
            f.logits = backbone_->classifier.forward(trunk_out, training);
            f.adv = adv_->forward(taps[0], training);
            f.coords = rest_->forward(taps[1], training);
        } else {
            DTensor trunk_out = backbone_->trunk.forward(x, training);
            f.logits = backbone_->classifier.forward(trunk_out, training);
        }
        return f;
    }

    /**
     * Reverse pass. Empty gradient tensors mean that output contributes
     * nothing (the corresponding head backward is skipped entirely).
     * reverse_adv flips the sign of the adversarial gradient where it
     * enters the trunk; the head's own parameters keep the plain sign.
     */
    void backward(const DTensor& g_logits, const DTensor& g_adv, const DTensor& g_coords,
                  bool reverse_adv = false) {
        DTensor g_trunk = backbone_->classifier.backward(g_logits);

        DTensor g_u, g_v;
        std::vector<std::pair<std::size_t, const DTensor*>> inj;
        if (!g_adv.empty()) {
            if (!adv_) throw unsupported_error("Model: adversarial gradient without head");
            g_u = adv_->backward(g_adv);
            if (reverse_adv)
                for (std::size_t i = 0; i < g_u.numel(); ++i) g_u[i] = -g_u[i];
            inj.emplace_back(tap_u_.layer_index, &g_u);
        }
        if (!g_coords.empty()) {
            if (!rest_) throw unsupported_error("Model: restoration gradient without head");
            g_v = rest_->backward(g_coords);
            inj.emplace_back(tap_v_.layer_index, &g_v);
        }
        backbone_->trunk.backward_injected(std::move(g_trunk), inj);
    }

    void zero_grads() {
        nn::zero_grads(theta_);
        nn::zero_grads(psi_);
        nn::zero_grads(phi_);
    }

    const std::vector<Param>& theta() const { return theta_; }
    const std::vector<Param>& psi() const { return psi_; }
    const std::vector<Param>& phi() const { return phi_; }

    bool has_heads() const { return adv_ != nullptr; }
    std::size_t grid_ma() const { return grid_ma_; }
    std::size_t grid_mb() const { return grid_mb_; }
    const TapInfo& tap_u() const { return tap_u_; }
    const TapInfo& tap_v() const { return tap_v_; }
    const AdversarialHead& adv_head() const { return *adv_; }
    const RestorationHead& rest_head() const { return *rest_; }
    const ModelConfig& config() const { return cfg_; }
    const Backbone& backbone() const { return *backbone_; }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto* group : {&theta_, &psi_, &phi_})
            for (const Param& p : *group) n += p.value->numel();
        return n;
    }

private:
    std::size_t feat_side(const TapInfo& t) const {
        if (cfg_.input_side % t.stride != 0)
            throw config_error("input side " + std::to_string(cfg_.input_side) +
                               " not divisible by tap stride " + std::to_string(t.stride));
        return cfg_.input_side / t.stride;
    }

    /**
     * Stride-based default tap: prefer the tap whose feature map equals the
     * grid; otherwise the deepest tap the grid is an integer upscale of
     * (with channels admitting depth-to-space); otherwise the deepest tap.
     */
    const TapInfo& select_tap(std::size_t grid) const {
        const TapInfo* exact = nullptr;
        const TapInfo* divisible = nullptr;
        const TapInfo* deepest = nullptr;
        for (const TapInfo& t : backbone_->taps) {
            const std::size_t h = feat_side(t);
            if (!deepest || t.layer_index >= deepest->layer_index) deepest = &t;
            if (h == grid && (!exact || t.layer_index >= exact->layer_index)) exact = &t;
            if (grid % h == 0) {
                const std::size_t r = grid / h;
                if (t.channels % (r * r) == 0 &&
                    (!divisible || t.layer_index >= divisible->layer_index))
                    divisible = &t;
            }
        }
        if (exact) return *exact;
        if (divisible) return *divisible;
        return *deepest;
    }

    ModelConfig cfg_;
    std::unique_ptr<Backbone> backbone_;
    std::unique_ptr<AdversarialHead> adv_;
    std::unique_ptr<RestorationHead> rest_;
    TapInfo tap_u_, tap_v_;
    std::size_t grid_ma_ = 0, grid_mb_ = 0;
    std::vector<Param> theta_, psi_, phi_;
};

} // namespace bsl::nn
