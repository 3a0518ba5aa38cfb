#pragma once

#include <iostream>
#include <memory>

#include "image_io.hpp"
#include "manifest.hpp"

namespace bsl {

// =====================================================================
// Uniform sample access for training and evaluation. A source hands out
// (image, label) pairs at a fixed side; order and batching policy live
// in the trainer.
// =====================================================================

struct Sample {
    ImageTensor image;
    int label = 0;
};

class BatchSource {
public:
    virtual ~BatchSource() = default;
    virtual std::size_t size() const = 0;
    virtual Sample get(std::size_t i) const = 0;
};

class MemoryBatchSource final : public BatchSource {
public:
    MemoryBatchSource(std::vector<ImageTensor> images, std::vector<int> labels)
        : images_(std::move(images)), labels_(std::move(labels)) {
        if (images_.size() != labels_.size())
            throw validation_error("MemoryBatchSource: images/labels size mismatch");
        for (const ImageTensor& img : images_) validate_image(img, "MemoryBatchSource");
    }

    std::size_t size() const override { return images_.size(); }
    Sample get(std::size_t i) const override { return {images_[i], labels_[i]}; }

private:
    std::vector<ImageTensor> images_;
    std::vector<int> labels_;
};

class FileBatchSource final : public BatchSource {
public:
    /** Rows of `manifest` in `split`, decoded and resized to side x side.
        With fail_fast off, rows whose files are missing are dropped with a
        warning instead of failing the run. */
    FileBatchSource(Manifest manifest, const std::string& split, std::size_t side,
                    bool fail_fast = true)
        : manifest_(std::move(manifest)), side_(side) {
        manifest_.validate();
        indices_ = manifest_.split_indices(split);
        if (!fail_fast) {
            std::vector<std::size_t> kept;
            for (const std::size_t i : indices_) {
                if (std::filesystem::exists(manifest_.resolve(i))) kept.push_back(i);
                else
                    std::cerr << "warning: skipping missing file " << manifest_.resolve(i).string()
                              << "\n";
            }
            indices_ = std::move(kept);
        }
        if (indices_.empty())
            throw validation_error("FileBatchSource: split '" + split + "' has no usable rows");
    }

    std::size_t size() const override { return indices_.size(); }

    Sample get(std::size_t i) const override {
        const ManifestRow& row = manifest_.rows[indices_[i]];
        ImageTensor img = load_image(manifest_.resolve(indices_[i]));
        return {resize_bilinear(img, side_, side_), row.label};
    }

private:
    Manifest manifest_;
    std::size_t side_;
    std::vector<std::size_t> indices_;
};

} // namespace bsl
