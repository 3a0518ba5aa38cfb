#pragma once

#include <cmath>
#include <cstdint>

#include "layer.hpp"

namespace bsl::nn {

/**
 * Optimizer over one parameter group. Kind "adam" follows the decoupled
 * moments form with L2 weight decay folded into the gradient; kind "sgd"
 * is plain descent with the same decay convention. The full state
 * (moments and step counter) is exposed for checkpointing.
 */
class Optimizer {
public:
    Optimizer(std::string kind, double lr, double weight_decay)
        : kind_(std::move(kind)), lr_(lr), weight_decay_(weight_decay) {
        if (kind_ != "adam" && kind_ != "sgd")
            throw validation_error("Optimizer: unknown kind '" + kind_ + "'");
        if (!(lr > 0.0)) throw validation_error("Optimizer: lr must be positive");
        if (weight_decay < 0.0) throw validation_error("Optimizer: negative weight decay");
    }

    void register_params(const std::vector<Param>& params) {
        for (const Param& p : params) {
            params_.push_back(p);
            if (kind_ == "adam") {
                m_.emplace_back(p.value->shape());
                v_.emplace_back(p.value->shape());
            }
        }
    }

    void step() {
        ++t_;
        for (std::size_t pi = 0; pi < params_.size(); ++pi) {
            DTensor& w = *params_[pi].value;
            const DTensor& g = *params_[pi].grad;
            if (kind_ == "sgd") {
                for (std::size_t i = 0; i < w.numel(); ++i)
                    w[i] -= lr_ * (g[i] + weight_decay_ * w[i]);
                continue;
            }
            DTensor& m = m_[pi];
            DTensor& v = v_[pi];
            const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
            const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
            for (std::size_t i = 0; i < w.numel(); ++i) {
                const double gi = g[i] + weight_decay_ * w[i];
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    const std::string& kind() const { return kind_; }
    double lr() const { return lr_; }
    std::int64_t steps() const { return t_; }
    void set_steps(std::int64_t t) { t_ = t; }
    std::size_t group_size() const { return params_.size(); }
    const std::vector<Param>& params() const { return params_; }
    DTensor& moment1(std::size_t i) { return m_[i]; }
    DTensor& moment2(std::size_t i) { return v_[i]; }
    const DTensor& moment1(std::size_t i) const { return m_[i]; }
    const DTensor& moment2(std::size_t i) const { return v_[i]; }

private:
    std::string kind_;
    double lr_;
    double weight_decay_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::int64_t t_ = 0;
    std::vector<Param> params_;
    std::vector<DTensor> m_, v_;
};

} // namespace bsl::nn
