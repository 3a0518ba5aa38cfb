#pragma once

#include <cmath>
#include <functional>

#include <bsl/core/rng.hpp>
#include <bsl/nn/layer.hpp>

namespace bsltest {

using bsl::DTensor;
using bsl::RngStream;

inline DTensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double lo,
                             double hi) {
    RngStream s = RngStream::derive(seed, "gradcheck");
    DTensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = s.uniform(lo, hi);
    return t;
}

/** Push values away from the given kink points so central differences
 *  never straddle a non-differentiable point. */
inline void avoid_kinks(DTensor& t, std::initializer_list<double> kinks, double margin) {
    for (std::size_t i = 0; i < t.numel(); ++i)
        for (double k : kinks)
            if (std::abs(t[i] - k) < margin) t[i] = k + (t[i] >= k ? margin : -margin);
}

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
};

inline double rel_err(double a, double f) {
    return std::abs(a - f) / std::max({1.0, std::abs(a), std::abs(f)});
}

/**
 * Check one layer: loss = sum(probe * forward(x)). Analytic gradients from
 * backward(probe) are compared against central differences over every
 * parameter element and every input element.
 */
inline GradCheckResult gradcheck_layer(bsl::nn::Layer& layer, const DTensor& x,
                                       std::uint64_t probe_seed, double eps = 1e-5) {
    DTensor y0 = layer.forward(x, true);
    DTensor probe = random_tensor(y0.shape(), probe_seed, -1.0, 1.0);

    std::vector<bsl::nn::Param> params;
    layer.collect_params("p", params);
    bsl::nn::zero_grads(params);
    DTensor dx = layer.backward(probe);

    auto loss_at = [&](const DTensor& input) {
        DTensor y = layer.forward(input, false);
        double l = 0.0;
        for (std::size_t i = 0; i < y.numel(); ++i) l += probe[i] * y[i];
        return l;
    };

    GradCheckResult res;
    for (const bsl::nn::Param& p : params) {
        for (std::size_t i = 0; i < p.value->numel(); ++i) {
            const double keep = (*p.value)[i];
            (*p.value)[i] = keep + eps;
            const double lp = loss_at(x);
            (*p.value)[i] = keep - eps;
            const double lm = loss_at(x);
            (*p.value)[i] = keep;
            const double fd = (lp - lm) / (2.0 * eps);
            res.max_rel_err = std::max(res.max_rel_err, rel_err((*p.grad)[i], fd));
            ++res.checked;
        }
    }
    DTensor xv = x;
    for (std::size_t i = 0; i < xv.numel(); ++i) {
        const double keep = xv[i];
        xv[i] = keep + eps;
        const double lp = loss_at(xv);
        xv[i] = keep - eps;
        const double lm = loss_at(xv);
        xv[i] = keep;
        const double fd = (lp - lm) / (2.0 * eps);
        res.max_rel_err = std::max(res.max_rel_err, rel_err(dx[i], fd));
        ++res.checked;
    }
    return res;
}

} // namespace bsltest
