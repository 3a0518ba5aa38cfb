#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "../core/errors.hpp"

namespace bsl {

// =====================================================================
// Classification metrics. Labels are 0 = real, 1 = fake; scores are the
// predicted probability of fake (higher = more fake).
// =====================================================================

/** Fraction of samples where (score >= threshold) matches the label. */
inline double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                       double threshold = 0.5) {
    if (scores.size() != labels.size())
        throw validation_error("accuracy: scores/labels size mismatch");
    if (scores.empty()) throw metric_error("accuracy: empty input");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int pred = scores[i] >= threshold ? 1 : 0;
        if (pred == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

/**
 * Area under the ROC curve by the rank-sum method. Tied scores receive
 * midranks, so ties between classes count half; the accumulation is exact
 * integer arithmetic in doubled-rank units, and the result equals the
 * brute-force mean over all positive/negative pairs bit for bit.
 */
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    const std::size_t n = scores.size();
    if (n != labels.size()) throw validation_error("auc: scores/labels size mismatch");
    std::int64_t n_pos = 0, n_neg = 0;
    for (int l : labels) {
        if (l == 1) ++n_pos;
        else if (l == 0) ++n_neg;
        else throw validation_error("auc: labels must be 0 or 1");
    }
    if (n_pos == 0 || n_neg == 0)
        throw metric_error("auc: undefined, needs both classes (got " +
                           std::to_string(n_pos) + " positive, " +
                           std::to_string(n_neg) + " negative)");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // rank2[i] = (1-based rank) * 2, midranks across each tie group.
    std::vector<std::int64_t> rank2(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const std::int64_t mid2 = static_cast<std::int64_t>(i + j) + 2;   // (i+1 + j+1)
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = mid2;
        i = j + 1;
    }

    std::int64_t pos_rank2_sum = 0;
    for (std::size_t k = 0; k < n; ++k)
        if (labels[k] == 1) pos_rank2_sum += rank2[k];

    // 2*U = sum of doubled positive ranks minus doubled min rank sum.
    const std::int64_t u2 = pos_rank2_sum - n_pos * (n_pos + 1);
    return static_cast<double>(u2) / static_cast<double>(2 * n_pos * n_neg);
}

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

/** ROC curve points, one per distinct score, thresholds descending. */
inline std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                        const std::vector<int>& labels) {
    const std::size_t n = scores.size();
    if (n != labels.size()) throw validation_error("roc_points: size mismatch");
    std::int64_t n_pos = 0, n_neg = 0;
    for (int l : labels) (l == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw metric_error("roc_points: needs both classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> pts;
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        const double thr = scores[order[i]];
        while (i < n && scores[order[i]] == thr) {
            if (labels[order[i]] == 1) ++tp;
            else ++fp;
            ++i;
        }
        pts.push_back({thr, static_cast<double>(tp) / static_cast<double>(n_pos),
                       static_cast<double>(fp) / static_cast<double>(n_neg)});
    }
    return pts;
}

struct MetricReport {
    std::string tag;          // e.g. "clean", "blur:5", "resize:24"
    std::size_t n = 0;
    double acc = 0.0;
    double auc = 0.0;
    std::vector<RocPoint> roc;
};

} // namespace bsl
