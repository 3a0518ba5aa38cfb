#pragma once

#include <cmath>
#include <vector>

#include "../core/tensor.hpp"
#include "../shuffle/shuffle.hpp"

namespace bsl {

struct LossWeights {
    double alpha = 1.0;   // adversarial term
    double beta = 1.0;    // restoration term

    void validate() const {
        if (alpha < 0.0 || beta < 0.0)
            throw validation_error("LossWeights: weights must be non-negative");
    }
};

struct LossBundle {
    double l_cls = 0.0;
    double l_adv = 0.0;
    double l_loc = 0.0;
    double l_total = 0.0;
};

namespace detail {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Numerically stable binary cross-entropy with a logit input.
inline double bce_logit(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

} // namespace detail

/**
 * Mean BCE of the fake/real logit against labels (1 = fake). Fills
 * grad (same shape as logits) with d loss / d logit when given.
 */
inline double loss_cls(const DTensor& logits, const std::vector<int>& labels,
                       DTensor* grad = nullptr) {
    if (logits.rank() != 2 || logits.dim(1) != 1)
        throw validation_error("loss_cls: expected [N,1] logits, got " + logits.shape_str());
    const std::size_t n = logits.dim(0);
    if (labels.size() != n) throw validation_error("loss_cls: labels size mismatch");
    if (grad) *grad = DTensor(logits.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw validation_error("loss_cls: labels must be 0 or 1");
        const double y = static_cast<double>(labels[i]);
        total += detail::bce_logit(logits[i], y);
        if (grad) (*grad)[i] = (detail::sigmoid(logits[i]) - y) / static_cast<double>(n);
    }
    return total / static_cast<double>(n);
}

/** Stack per-sample marks into a [N, m, n, 1] supervision tensor. */
inline DTensor pack_marks(const std::vector<IntraMark>& marks) {
    if (marks.empty()) throw validation_error("pack_marks: empty batch");
    const std::size_t m = marks[0].m, n = marks[0].n;
    DTensor t({marks.size(), m, n, 1});
    for (std::size_t s = 0; s < marks.size(); ++s) {
        if (marks[s].m != m || marks[s].n != n)
            throw structural_error("pack_marks: inconsistent mark grids");
        for (std::size_t i = 0; i < m * n; ++i)
            t[s * m * n + i] = static_cast<double>(marks[s].mark[i]);
    }
    return t;
}

/** Stack per-sample coordinate targets into a [N, m, n, 2] tensor. */
inline DTensor pack_coords(const std::vector<CoordTarget>& targets) {
    if (targets.empty()) throw validation_error("pack_coords: empty batch");
    const std::size_t m = targets[0].m, n = targets[0].n;
    DTensor t({targets.size(), m, n, 2});
    for (std::size_t s = 0; s < targets.size(); ++s) {
        if (targets[s].m != m || targets[s].n != n)
            throw structural_error("pack_coords: inconsistent coordinate grids");
        const DTensor one = targets[s].normalized();
        for (std::size_t i = 0; i < m * n * 2; ++i) t[s * m * n * 2 + i] = one[i];
    }
    return t;
}

/**
 * Anti-noise objective: mean per-block BCE of the head logits against the
 * 0/1 mark matrix, over every block of every sample (both classes count).
 */
inline double loss_adv(const DTensor& logits, const DTensor& marks,
                       DTensor* grad = nullptr) {
    if (logits.rank() != 4 || logits.dim(3) != 1)
        throw validation_error("loss_adv: expected [N,m,n,1] logits, got " +
                               logits.shape_str());
    if (!logits.same_shape(marks))
        throw validation_error("loss_adv: logits " + logits.shape_str() + " vs marks " +
                               marks.shape_str());
    const std::size_t count = logits.numel();
    if (grad) *grad = DTensor(logits.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double y = marks[i];
        if (y != 0.0 && y != 1.0)
            throw validation_error("loss_adv: marks must be 0 or 1");
        total += detail::bce_logit(logits[i], y);
        if (grad) (*grad)[i] = (detail::sigmoid(logits[i]) - y) / static_cast<double>(count);
    }
    return total / static_cast<double>(count);
}

/** Restoration objective: mean absolute error of normalized coordinates. */
inline double loss_loc(const DTensor& pred, const DTensor& target,
                       DTensor* grad = nullptr) {
    if (pred.rank() != 4 || pred.dim(3) != 2)
        throw validation_error("loss_loc: expected [N,m,n,2] predictions, got " +
                               pred.shape_str());
    if (!pred.same_shape(target))
        throw validation_error("loss_loc: pred " + pred.shape_str() + " vs target " +
                               target.shape_str());
    const std::size_t count = pred.numel();
    if (grad) *grad = DTensor(pred.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = pred[i] - target[i];
        total += std::abs(d);
        if (grad)
            (*grad)[i] = (d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) / static_cast<double>(count);
    }
    return total / static_cast<double>(count);
}

/** l_total = l_cls + alpha * l_adv + beta * l_loc, exactly. */
inline LossBundle combine_losses(double l_cls, double l_adv, double l_loc,
                                 const LossWeights& w) {
    w.validate();
    LossBundle b;
    b.l_cls = l_cls;
    b.l_adv = l_adv;
    b.l_loc = l_loc;
    b.l_total = l_cls + w.alpha * l_adv + w.beta * l_loc;
    return b;
}

} // namespace bsl
