#pragma once

#include <optional>

#include "../data/dataset.hpp"
#include "../data/degrade.hpp"
#include "../loss/objectives.hpp"
#include "../nn/model.hpp"
#include "metrics.hpp"

namespace bsl {

// =====================================================================
// Classifier evaluation and restoration diagnostics. Classification
// always runs on unshuffled images (optionally degraded); restoration
// is probed on freshly shuffled copies since the head predicts where
// each tile came from.
// =====================================================================

struct EvalOptions {
    std::size_t batch_size = 64;
    std::optional<Degradation> degradation;
    std::string tag = "clean";
};

namespace eval_detail {

inline DTensor stack_images(const std::vector<ImageTensor>& images) {
    const std::size_t n = images.size();
    const std::size_t h = images[0].dim(0), w = images[0].dim(1), c = images[0].dim(2);
    DTensor batch({n, h, w, c});
    for (std::size_t i = 0; i < n; ++i) {
        if (!images[i].same_shape(images[0]))
            throw validation_error("evaluate: images must share one shape");
        std::memcpy(batch.data() + i * images[i].numel(), images[i].data(),
                    images[i].numel() * sizeof(double));
    }
    return batch;
}

} // namespace eval_detail

/** Sigmoid scores of the classifier over a source, in source order. */
inline std::vector<double> collect_scores(nn::Model& model, const BatchSource& src,
                                          const EvalOptions& opt = {}) {
    if (src.size() == 0) throw metric_error("collect_scores: empty source");
    std::vector<double> scores;
    scores.reserve(src.size());
    for (std::size_t start = 0; start < src.size(); start += opt.batch_size) {
        const std::size_t n = std::min(opt.batch_size, src.size() - start);
        std::vector<ImageTensor> images;
        images.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            ImageTensor img = src.get(start + i).image;
            if (opt.degradation) img = apply_degradation(img, *opt.degradation);
            images.push_back(std::move(img));
        }
        const nn::Model::Forward f = model.forward(eval_detail::stack_images(images), false);
        for (std::size_t i = 0; i < n; ++i)
            scores.push_back(detail::sigmoid(f.logits.at(i, std::size_t{0})));
    }
    return scores;
}

/** Accuracy, AUC, and ROC of the classifier on unshuffled (optionally
    degraded) images. */
inline MetricReport evaluate(nn::Model& model, const BatchSource& src,
                             const EvalOptions& opt = {}) {
    const std::vector<double> scores = collect_scores(model, src, opt);
    std::vector<int> labels(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) labels[i] = src.get(i).label;
    MetricReport report;
    report.tag = opt.tag;
    report.n = src.size();
    report.acc = accuracy(scores, labels);
    report.auc = auc(scores, labels);
    report.roc = roc_points(scores, labels);
    return report;
}

/** Clean report first, then one report per degradation. */
inline std::vector<MetricReport> robustness_sweep(nn::Model& model, const BatchSource& src,
                                                  const std::vector<Degradation>& degradations,
                                                  std::size_t batch_size = 64) {
    std::vector<MetricReport> reports;
    EvalOptions clean;
    clean.batch_size = batch_size;
    reports.push_back(evaluate(model, src, clean));
    for (const Degradation& d : degradations) {
        EvalOptions opt;
        opt.batch_size = batch_size;
        opt.degradation = d;
        opt.tag = d.tag();
        reports.push_back(evaluate(model, src, opt));
    }
    return reports;
}

struct RestorationReport {
    std::size_t grid_m = 0, grid_n = 0;
    std::size_t images = 0;
    std::vector<std::size_t> counts; ///< counts[d] = blocks at Chebyshev distance d
    double frac_within_1 = 0.0;      ///< fraction of blocks with distance <= 1

    std::size_t total_blocks() const {
        std::size_t t = 0;
        for (const std::size_t c : counts) t += c;
        return t;
    }
};

/** Shuffle each eval image (stream derived from (seed, "eval_shuffle", i)),
    decode the restoration head's predictions, and histogram the Chebyshev
    distance between predicted and actual source coordinates. */
inline RestorationReport restoration_histogram(nn::Model& model, const BatchSource& src,
                                               std::uint64_t seed, std::size_t batch_size = 64) {
    if (!model.config().attach_heads)
        throw unsupported_error("restoration_histogram: model has no restoration head");
    if (src.size() == 0) throw metric_error("restoration_histogram: empty source");

    RestorationReport report;
    report.grid_m = model.rest_head().grid_m();
    report.grid_n = model.rest_head().grid_n();
    report.counts.assign(std::max(report.grid_m, report.grid_n), 0);
    report.images = src.size();

    for (std::size_t start = 0; start < src.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, src.size() - start);
        std::vector<ImageTensor> images;
        std::vector<CoordTarget> truths;
        images.reserve(n);
        truths.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            RngStream stream = RngStream::derive(seed, "eval_shuffle", start + i);
            ShuffleOutcome outcome =
                shuffle_image(src.get(start + i).image, model.config().shuffle, stream);
            images.push_back(std::move(outcome.image));
            truths.push_back(std::move(outcome.coords));
        }
        const nn::Model::Forward f = model.forward(eval_detail::stack_images(images), false);
        for (std::size_t i = 0; i < n; ++i) {
            DTensor pred({report.grid_m, report.grid_n, 2});
            for (std::size_t u = 0; u < report.grid_m; ++u)
                for (std::size_t v = 0; v < report.grid_n; ++v) {
                    pred.at(u, v, std::size_t{0}) = f.coords.at(i, u, v, std::size_t{0});
                    pred.at(u, v, std::size_t{1}) = f.coords.at(i, u, v, std::size_t{1});
                }
            const std::vector<GridPos> decoded = decode_coords(pred);
            for (std::size_t b = 0; b < decoded.size(); ++b) {
                const GridPos truth = truths[i].source[b];
                const std::size_t dr = decoded[b].row > truth.row ? decoded[b].row - truth.row
                                                                  : truth.row - decoded[b].row;
                const std::size_t dc = decoded[b].col > truth.col ? decoded[b].col - truth.col
                                                                  : truth.col - decoded[b].col;
                ++report.counts[std::max(dr, dc)];
            }
        }
    }
    const std::size_t total = report.total_blocks();
    report.frac_within_1 =
        static_cast<double>(report.counts[0] + (report.counts.size() > 1 ? report.counts[1] : 0)) /
        static_cast<double>(total);
    return report;
}

} // namespace bsl
