#pragma once

#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace bsl {

// =====================================================================
// Dense row-major tensor. Layout convention across the library:
//   rank 2: [rows, cols]
//   rank 3: [H, W, C]          (one image, channel-last)
//   rank 4: [N, H, W, C]       (a batch, channel-last)
// Double precision everywhere; exactness requirements (bit-identical
// replays, finite-difference gradient checks) rule out float32.
// =====================================================================

template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, T fill_value = T{})
        : shape_(std::move(shape)),
          data_(checked_numel(shape_), fill_value) {}

    static Tensor from_data(std::vector<std::size_t> shape, std::vector<T> data) {
        Tensor t;
        t.shape_ = std::move(shape);
        if (checked_numel(t.shape_) != data.size())
            throw validation_error("Tensor::from_data: data size does not match shape");
        t.data_ = std::move(data);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(std::size_t i, std::size_t j) {
        return data_[i * shape_[1] + j];
    }
    const T& at(std::size_t i, std::size_t j) const {
        return data_[i * shape_[1] + j];
    }
    T& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    const T& at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    T& at(std::size_t n, std::size_t i, std::size_t j, std::size_t k) {
        return data_[((n * shape_[1] + i) * shape_[2] + j) * shape_[3] + k];
    }
    const T& at(std::size_t n, std::size_t i, std::size_t j, std::size_t k) const {
        return data_[((n * shape_[1] + i) * shape_[2] + j) * shape_[3] + k];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    /** Reinterpret the same storage under a new shape of equal numel. */
    Tensor reshaped(std::vector<std::size_t> new_shape) const {
        if (checked_numel(new_shape) != numel())
            throw validation_error("Tensor::reshaped: numel mismatch");
        Tensor t;
        t.shape_ = std::move(new_shape);
        t.data_ = data_;
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < shape_.size(); ++i)
            os << (i ? "," : "") << shape_[i];
        os << "]";
        return os.str();
    }

private:
    static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) {
            if (d == 0) throw validation_error("Tensor: zero-sized dimension");
            n *= d;
        }
        return shape.empty() ? 0 : n;
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

using DTensor = Tensor<double>;

} // namespace bsl
