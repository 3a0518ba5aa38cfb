#pragma once

#include <memory>
#include <string>
#include <vector>

#include "../core/rng.hpp"
#include "../core/tensor.hpp"

namespace bsl::nn {

// One learnable array with its gradient accumulator. fan_in > 0 selects
// He-normal initialization; fan_in == 0 keeps the zero fill (biases).
struct Param {
    std::string name;
    DTensor* value = nullptr;
    DTensor* grad = nullptr;
    std::size_t fan_in = 0;
};

/**
 * Base class for differentiable layers. forward(x, true) caches whatever
 * backward needs; forward(x, false) touches no member state beyond reads,
 * so inference passes stay reentrant. backward accumulates parameter
 * gradients (callers zero them between steps) and returns the gradient
 * with respect to the layer input.
 */
class Layer {
public:
    virtual ~Layer() = default;
    virtual const char* kind() const = 0;
    virtual DTensor forward(const DTensor& x, bool training) = 0;
    virtual DTensor backward(const DTensor& grad_out) = 0;
    virtual void collect_params(const std::string& prefix, std::vector<Param>& out) {
        (void)prefix;
        (void)out;
    }
};

inline void zero_grads(const std::vector<Param>& params) {
    for (const Param& p : params) p.grad->fill(0.0);
}

/** He-normal weights / zero biases from per-parameter named streams. */
inline void init_params(const std::vector<Param>& params, std::uint64_t seed) {
    for (const Param& p : params) {
        if (p.fan_in == 0) {
            p.value->fill(0.0);
            continue;
        }
        RngStream s = RngStream::derive(seed, "init/" + p.name);
        const double stddev = std::sqrt(2.0 / static_cast<double>(p.fan_in));
        for (std::size_t i = 0; i < p.value->numel(); ++i)
            (*p.value)[i] = s.normal(0.0, stddev);
    }
}

/** Layers chained in order, with tap readout and gradient injection. */
class Sequential {
public:
    template <typename L, typename... Args>
    L& emplace(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    std::size_t size() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

    DTensor forward(const DTensor& x, bool training) {
        DTensor cur = x;
        for (auto& l : layers_) cur = l->forward(cur, training);
        return cur;
    }

    /** Forward that also copies out the outputs of the given layer indices. */
    DTensor forward_taps(const DTensor& x, bool training,
                         const std::vector<std::size_t>& tap_idx,
                         std::vector<DTensor>& tap_out) {
        tap_out.assign(tap_idx.size(), DTensor());
        DTensor cur = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            cur = layers_[i]->forward(cur, training);
            for (std::size_t t = 0; t < tap_idx.size(); ++t)
                if (tap_idx[t] == i) tap_out[t] = cur;
        }
        return cur;
    }

    DTensor backward(DTensor grad_out) { return backward_injected(std::move(grad_out), {}); }

    /**
     * Reverse pass with extra gradients flowing into the outputs of given
     * layers (head taps). Each injection (i, g) is added to the gradient
     * at the output of layer i before that layer's backward runs.
     */
    DTensor backward_injected(
        DTensor grad_out,
        const std::vector<std::pair<std::size_t, const DTensor*>>& injections) {
        DTensor g = std::move(grad_out);
        for (std::size_t i = layers_.size(); i-- > 0;) {
            for (const auto& [idx, inj] : injections) {
                if (idx != i) continue;
                if (!inj->same_shape(g))
                    throw validation_error("Sequential: injected gradient shape " +
                                           inj->shape_str() + " != " + g.shape_str());
                for (std::size_t k = 0; k < g.numel(); ++k) g[k] += (*inj)[k];
            }
            g = layers_[i]->backward(g);
        }
        return g;
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) {
        for (std::size_t i = 0; i < layers_.size(); ++i)
            layers_[i]->collect_params(prefix + "." + std::to_string(i), out);
    }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

} // namespace bsl::nn
