#pragma once

#include <memory>

#include "../core/errors.hpp"
#include "layers.hpp"

namespace bsl::nn {

// =====================================================================
// Composite blocks. Each is a Layer owning sub-layers with an explicit
// reverse pass, so Sequential stays a plain chain.
// =====================================================================

/** conv-relu-conv with a skip (1x1 projection when shape changes). */
class ResidualBlock : public Layer {
public:
    ResidualBlock(std::size_t in_c, std::size_t out_c, std::size_t stride)
        : conv1_(in_c, out_c, 3, stride, 1), conv2_(out_c, out_c, 3, 1, 1) {
        if (stride != 1 || in_c != out_c)
            proj_ = std::make_unique<Conv2d>(in_c, out_c, 1, stride, 0);
    }

    const char* kind() const override { return "residual_block"; }

    DTensor forward(const DTensor& x, bool training) override {
        DTensor main = conv2_.forward(relu1_.forward(conv1_.forward(x, training), training),
                                      training);
        const DTensor skip = proj_ ? proj_->forward(x, training) : x;
        if (!main.same_shape(skip))
            throw structural_error("ResidualBlock: branch shapes diverge");
        for (std::size_t i = 0; i < main.numel(); ++i) main[i] += skip[i];
        return relu2_.forward(main, training);
    }

    DTensor backward(const DTensor& g) override {
        DTensor gs = relu2_.backward(g);
        DTensor dx = conv1_.backward(relu1_.backward(conv2_.backward(gs)));
        if (proj_) {
            DTensor dskip = proj_->backward(gs);
            for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += dskip[i];
        } else {
            for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += gs[i];
        }
        return dx;
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        conv1_.collect_params(prefix + ".conv1", out);
        conv2_.collect_params(prefix + ".conv2", out);
        if (proj_) proj_->collect_params(prefix + ".proj", out);
    }

private:
    Conv2d conv1_, conv2_;
    std::unique_ptr<Conv2d> proj_;
    ReLU relu1_, relu2_;
};

/** Depthwise 3x3 followed by a pointwise projection and ReLU. */
class SeparableBlock : public Layer {
public:
    SeparableBlock(std::size_t in_c, std::size_t out_c, std::size_t stride)
        : dw_(in_c, 3, stride, 1), pw_(in_c, out_c, 1, 1, 0) {}

    const char* kind() const override { return "separable_block"; }

    DTensor forward(const DTensor& x, bool training) override {
        return relu_.forward(pw_.forward(dw_.forward(x, training), training), training);
    }

    DTensor backward(const DTensor& g) override {
        return dw_.backward(pw_.backward(relu_.backward(g)));
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        dw_.collect_params(prefix + ".dw", out);
        pw_.collect_params(prefix + ".pw", out);
    }

private:
    DepthwiseConv2d dw_;
    Conv2d pw_;
    ReLU relu_;
};

/** Inverted bottleneck: expand 1x1, depthwise 3x3, project 1x1, skip when shapes allow. */
class MBConvBlock : public Layer {
public:
    MBConvBlock(std::size_t in_c, std::size_t out_c, std::size_t stride, std::size_t expand)
        : skip_(stride == 1 && in_c == out_c),
          expand_(in_c, in_c * expand, 1, 1, 0),
          dw_(in_c * expand, 3, stride, 1),
          project_(in_c * expand, out_c, 1, 1, 0) {}

    const char* kind() const override { return "mbconv_block"; }

    DTensor forward(const DTensor& x, bool training) override {
        DTensor h = relu1_.forward(expand_.forward(x, training), training);
        h = relu2_.forward(dw_.forward(h, training), training);
        DTensor y = project_.forward(h, training);
        if (skip_)
            for (std::size_t i = 0; i < y.numel(); ++i) y[i] += x[i];
        return y;
    }

    DTensor backward(const DTensor& g) override {
        DTensor dh = project_.backward(g);
        dh = dw_.backward(relu2_.backward(dh));
        DTensor dx = expand_.backward(relu1_.backward(dh));
        if (skip_)
            for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += g[i];
        return dx;
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        expand_.collect_params(prefix + ".expand", out);
        dw_.collect_params(prefix + ".dw", out);
        project_.collect_params(prefix + ".project", out);
    }

private:
    bool skip_;
    Conv2d expand_;
    DepthwiseConv2d dw_;
    Conv2d project_;
    ReLU relu1_, relu2_;
};

// =====================================================================
// Backbones. A backbone is a trunk with named feature taps plus a
// classifier (global pool and a single-logit dense layer). Any builder
// registered here works with the heads unchanged; weights round-trip
// through the checkpoint archive.
// =====================================================================

struct TapInfo {
    std::string name;         // e.g. "s8"
    std::size_t layer_index;  // trunk layer whose output is tapped
    std::size_t stride;       // spatial reduction at that layer
    std::size_t channels;
};

struct Backbone {
    std::string name;
    Sequential trunk;
    Sequential classifier;
    std::vector<TapInfo> taps;
    std::size_t out_channels = 0;
    std::size_t stride_total = 0;

    const TapInfo& tap_by_name(const std::string& n) const {
        for (const TapInfo& t : taps)
            if (t.name == n) return t;
        throw config_error("backbone '" + name + "' has no tap named '" + n + "'");
    }

    void collect_params(std::vector<Param>& out) {
        trunk.collect_params("trunk", out);
        classifier.collect_params("classifier", out);
    }
};

inline std::vector<std::string> backbone_names() {
    return {"tiny", "small", "residual_small", "separable_small", "mbconv_small"};
}

inline std::unique_ptr<Backbone> make_backbone(const std::string& name,
                                               std::size_t in_channels = 3) {
    auto bb = std::make_unique<Backbone>();
    bb->name = name;
    Sequential& t = bb->trunk;

    if (name == "tiny") {
        t.emplace<Conv2d>(in_channels, 4, 3, 2, 1);
        t.emplace<ReLU>();
        t.emplace<Conv2d>(4, 8, 3, 2, 1);
        t.emplace<ReLU>();
        bb->taps = {{"s2", 1, 2, 4}, {"s4", 3, 4, 8}};
        bb->out_channels = 8;
        bb->stride_total = 4;
    } else if (name == "small") {
        t.emplace<Conv2d>(in_channels, 12, 3, 2, 1);
        t.emplace<ReLU>();
        t.emplace<Conv2d>(12, 24, 3, 2, 1);
        t.emplace<ReLU>();
        t.emplace<Conv2d>(24, 48, 3, 2, 1);
        t.emplace<ReLU>();
        t.emplace<Conv2d>(48, 64, 3, 2, 1);
        t.emplace<ReLU>();
        bb->taps = {{"s2", 1, 2, 12}, {"s4", 3, 4, 24}, {"s8", 5, 8, 48}, {"s16", 7, 16, 64}};
        bb->out_channels = 64;
        bb->stride_total = 16;
    } else if (name == "residual_small") {
        t.emplace<Conv2d>(in_channels, 16, 3, 2, 1);
        t.emplace<ReLU>();
        t.emplace<ResidualBlock>(16, 24, 2);
        t.emplace<ResidualBlock>(24, 48, 2);
        t.emplace<ResidualBlock>(48, 48, 1);
        t.emplace<ResidualBlock>(48, 64, 2);
        bb->taps = {{"s2", 1, 2, 16}, {"s4", 2, 4, 24}, {"s8", 4, 8, 48}, {"s16", 5, 16, 64}};
        bb->out_channels = 64;
        bb->stride_total = 16;
    } else if (name == "separable_small") {
        t.emplace<Conv2d>(in_channels, 16, 3, 2, 1);
        t.emplace<ReLU>();
        t.emplace<SeparableBlock>(16, 24, 2);
        t.emplace<SeparableBlock>(24, 48, 2);
        t.emplace<SeparableBlock>(48, 64, 2);
        bb->taps = {{"s2", 1, 2, 16}, {"s4", 2, 4, 24}, {"s8", 3, 8, 48}, {"s16", 4, 16, 64}};
        bb->out_channels = 64;
        bb->stride_total = 16;
    } else if (name == "mbconv_small") {
        t.emplace<Conv2d>(in_channels, 16, 3, 2, 1);
        t.emplace<ReLU>();
        t.emplace<MBConvBlock>(16, 24, 2, 2);
        t.emplace<MBConvBlock>(24, 48, 2, 2);
        t.emplace<MBConvBlock>(48, 48, 1, 2);
        t.emplace<MBConvBlock>(48, 64, 2, 2);
        bb->taps = {{"s2", 1, 2, 16}, {"s4", 2, 4, 24}, {"s8", 4, 8, 48}, {"s16", 5, 16, 64}};
        bb->out_channels = 64;
        bb->stride_total = 16;
    } else {
        throw config_error("unknown backbone '" + name + "'");
    }

    bb->classifier.emplace<GlobalAvgPool>();
    bb->classifier.emplace<Dense>(bb->out_channels, 1);
    return bb;
}

} // namespace bsl::nn
