#pragma once

#include <Eigen/Dense>

#include <cstring>

#include "layer.hpp"

namespace bsl::nn {

using EMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMatrix>;
using ECMap = Eigen::Map<const EMatrix>;

/** 2-D convolution over [N,H,W,C], im2col + GEMM. Weights [k*k*C, OC]. */
class Conv2d : public Layer {
public:
    Conv2d(std::size_t in_c, std::size_t out_c, std::size_t k, std::size_t stride = 1,
           std::size_t pad = 0)
        : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad),
          w_({k * k * in_c, out_c}), b_({out_c}),
          gw_({k * k * in_c, out_c}), gb_({out_c}) {
        if (k == 0 || stride == 0)
            throw validation_error("Conv2d: kernel and stride must be positive");
    }

    const char* kind() const override { return "conv2d"; }

    DTensor forward(const DTensor& x, bool training) override {
        check_input(x);
        const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2);
        const std::size_t oh = out_extent(h), ow = out_extent(w);
        DTensor cols = im2col(x, oh, ow);

        const std::size_t rows = n * oh * ow, kk = k_ * k_ * in_c_;
        DTensor y({n, oh, ow, out_c_});
        ECMap a(cols.data(), rows, kk);
        ECMap wm(w_.data(), kk, out_c_);
        EMap ym(y.data(), rows, out_c_);
        ym.noalias() = a * wm;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < out_c_; ++c) y[r * out_c_ + c] += b_[c];

        if (training) {
            cols_ = std::move(cols);
            in_shape_ = x.shape();
        }
        return y;
    }

    DTensor backward(const DTensor& grad_out) override {
        const std::size_t n = in_shape_[0], h = in_shape_[1], w = in_shape_[2];
        const std::size_t oh = out_extent(h), ow = out_extent(w);
        const std::size_t rows = n * oh * ow, kk = k_ * k_ * in_c_;

        ECMap g(grad_out.data(), rows, out_c_);
        ECMap a(cols_.data(), rows, kk);
        EMap gwm(gw_.data(), kk, out_c_);
        gwm.noalias() += a.transpose() * g;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < out_c_; ++c) gb_[c] += grad_out[r * out_c_ + c];

        DTensor dcols({rows, kk});
        ECMap wm(w_.data(), kk, out_c_);
        EMap dc(dcols.data(), rows, kk);
        dc.noalias() = g * wm.transpose();
        return col2im(dcols, n, h, w, oh, ow);
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        out.push_back({prefix + ".weight", &w_, &gw_, k_ * k_ * in_c_});
        out.push_back({prefix + ".bias", &b_, &gb_, 0});
    }

    std::size_t out_extent(std::size_t in) const {
        return (in + 2 * pad_ - k_) / stride_ + 1;
    }

private:
    void check_input(const DTensor& x) const {
        if (x.rank() != 4 || x.dim(3) != in_c_)
            throw validation_error("Conv2d: expected [N,H,W," + std::to_string(in_c_) +
                                   "], got " + x.shape_str());
        if (x.dim(1) + 2 * pad_ < k_ || x.dim(2) + 2 * pad_ < k_)
            throw validation_error("Conv2d: input smaller than kernel");
    }

    DTensor im2col(const DTensor& x, std::size_t oh, std::size_t ow) const {
        const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2);
        DTensor cols({n * oh * ow, k_ * k_ * in_c_});
        double* dst = cols.data();
        for (std::size_t img = 0; img < n; ++img)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox)
                    for (std::size_t ky = 0; ky < k_; ++ky) {
                        const std::ptrdiff_t iy =
                            static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                            static_cast<std::ptrdiff_t>(pad_);
                        for (std::size_t kx = 0; kx < k_; ++kx) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * stride_ + kx) -
                                static_cast<std::ptrdiff_t>(pad_);
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h) || ix < 0 ||
                                ix >= static_cast<std::ptrdiff_t>(w)) {
                                std::memset(dst, 0, in_c_ * sizeof(double));
                            } else {
                                std::memcpy(dst,
                                            &x.at(img, static_cast<std::size_t>(iy),
                                                  static_cast<std::size_t>(ix), 0),
                                            in_c_ * sizeof(double));
                            }
                            dst += in_c_;
                        }
                    }
        return cols;
    }

    DTensor col2im(const DTensor& dcols, std::size_t n, std::size_t h, std::size_t w,
                   std::size_t oh, std::size_t ow) const {
        DTensor dx({n, h, w, in_c_});
        const double* src = dcols.data();
        for (std::size_t img = 0; img < n; ++img)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox)
                    for (std::size_t ky = 0; ky < k_; ++ky) {
                        const std::ptrdiff_t iy =
                            static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                            static_cast<std::ptrdiff_t>(pad_);
                        for (std::size_t kx = 0; kx < k_; ++kx) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * stride_ + kx) -
                                static_cast<std::ptrdiff_t>(pad_);
                            if (iy >= 0 && iy < static_cast<std::ptrdiff_t>(h) && ix >= 0 &&
                                ix < static_cast<std::ptrdiff_t>(w)) {
                                double* d = &dx.at(img, static_cast<std::size_t>(iy),
                                                   static_cast<std::size_t>(ix), 0);
                                for (std::size_t c = 0; c < in_c_; ++c) d[c] += src[c];
                            }
                            src += in_c_;
                        }
                    }
        return dx;
    }

    std::size_t in_c_, out_c_, k_, stride_, pad_;
    DTensor w_, b_, gw_, gb_;
    DTensor cols_;
    std::vector<std::size_t> in_shape_;
};

/** Per-channel (depthwise) convolution. Weights [k,k,C]. */
class DepthwiseConv2d : public Layer {
public:
    DepthwiseConv2d(std::size_t channels, std::size_t k, std::size_t stride = 1,
                    std::size_t pad = 0)
        : c_(channels), k_(k), stride_(stride), pad_(pad),
          w_({k, k, channels}), b_({channels}), gw_({k, k, channels}), gb_({channels}) {}

    const char* kind() const override { return "depthwise_conv2d"; }

    DTensor forward(const DTensor& x, bool training) override {
        if (x.rank() != 4 || x.dim(3) != c_)
            throw validation_error("DepthwiseConv2d: expected [N,H,W," + std::to_string(c_) +
                                   "], got " + x.shape_str());
        const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2);
        const std::size_t oh = (h + 2 * pad_ - k_) / stride_ + 1;
        const std::size_t ow = (w + 2 * pad_ - k_) / stride_ + 1;
        DTensor y({n, oh, ow, c_});
        for (std::size_t img = 0; img < n; ++img)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox)
                    for (std::size_t ky = 0; ky < k_; ++ky) {
                        const std::ptrdiff_t iy =
                            static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                            static_cast<std::ptrdiff_t>(pad_);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < k_; ++kx) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * stride_ + kx) -
                                static_cast<std::ptrdiff_t>(pad_);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            const double* xv = &x.at(img, static_cast<std::size_t>(iy),
                                                     static_cast<std::size_t>(ix), 0);
                            double* yv = &y.at(img, oy, ox, 0);
                            const double* wv = &w_.at(ky, kx, 0);
                            for (std::size_t c = 0; c < c_; ++c) yv[c] += wv[c] * xv[c];
                        }
                    }
        for (std::size_t i = 0; i < y.numel(); ++i) y[i] += b_[i % c_];
        if (training) in_ = x;
        return y;
    }

    DTensor backward(const DTensor& g) override {
        const std::size_t n = in_.dim(0), h = in_.dim(1), w = in_.dim(2);
        const std::size_t oh = g.dim(1), ow = g.dim(2);
        DTensor dx({n, h, w, c_});
        for (std::size_t i = 0; i < g.numel(); ++i) gb_[i % c_] += g[i];
        for (std::size_t img = 0; img < n; ++img)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox)
                    for (std::size_t ky = 0; ky < k_; ++ky) {
                        const std::ptrdiff_t iy =
                            static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                            static_cast<std::ptrdiff_t>(pad_);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < k_; ++kx) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * stride_ + kx) -
                                static_cast<std::ptrdiff_t>(pad_);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            const double* gv = &g.at(img, oy, ox, 0);
                            const double* xv = &in_.at(img, static_cast<std::size_t>(iy),
                                                       static_cast<std::size_t>(ix), 0);
                            double* dxv = &dx.at(img, static_cast<std::size_t>(iy),
                                                 static_cast<std::size_t>(ix), 0);
                            double* gwv = &gw_.at(ky, kx, 0);
                            const double* wv = &w_.at(ky, kx, 0);
                            for (std::size_t c = 0; c < c_; ++c) {
                                gwv[c] += gv[c] * xv[c];
                                dxv[c] += gv[c] * wv[c];
                            }
                        }
                    }
        return dx;
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        out.push_back({prefix + ".weight", &w_, &gw_, k_ * k_});
        out.push_back({prefix + ".bias", &b_, &gb_, 0});
    }

private:
    std::size_t c_, k_, stride_, pad_;
    DTensor w_, b_, gw_, gb_;
    DTensor in_;
};

/** Fully connected layer over [N, D]. */
class Dense : public Layer {
public:
    Dense(std::size_t in_d, std::size_t out_d)
        : in_d_(in_d), out_d_(out_d), w_({in_d, out_d}), b_({out_d}),
          gw_({in_d, out_d}), gb_({out_d}) {}

    const char* kind() const override { return "dense"; }

    DTensor forward(const DTensor& x, bool training) override {
        if (x.rank() != 2 || x.dim(1) != in_d_)
            throw validation_error("Dense: expected [N," + std::to_string(in_d_) + "], got " +
                                   x.shape_str());
        const std::size_t n = x.dim(0);
        DTensor y({n, out_d_});
        ECMap xm(x.data(), n, in_d_);
        ECMap wm(w_.data(), in_d_, out_d_);
        EMap ym(y.data(), n, out_d_);
        ym.noalias() = xm * wm;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < out_d_; ++c) y.at(r, c) += b_[c];
        if (training) in_ = x;
        return y;
    }

    DTensor backward(const DTensor& g) override {
        const std::size_t n = in_.dim(0);
        ECMap gm(g.data(), n, out_d_);
        ECMap xm(in_.data(), n, in_d_);
        EMap gwm(gw_.data(), in_d_, out_d_);
        gwm.noalias() += xm.transpose() * gm;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < out_d_; ++c) gb_[c] += g.at(r, c);
        DTensor dx({n, in_d_});
        ECMap wm(w_.data(), in_d_, out_d_);
        EMap dxm(dx.data(), n, in_d_);
        dxm.noalias() = gm * wm.transpose();
        return dx;
    }

    void collect_params(const std::string& prefix, std::vector<Param>& out) override {
        out.push_back({prefix + ".weight", &w_, &gw_, in_d_});
        out.push_back({prefix + ".bias", &b_, &gb_, 0});
    }

private:
    std::size_t in_d_, out_d_;
    DTensor w_, b_, gw_, gb_;
    DTensor in_;
};

class ReLU : public Layer {
public:
    const char* kind() const override { return "relu"; }

    DTensor forward(const DTensor& x, bool training) override {
        DTensor y = x;
        for (std::size_t i = 0; i < y.numel(); ++i)
            if (y[i] < 0.0) y[i] = 0.0;
        if (training) in_ = x;
        return y;
    }

    DTensor backward(const DTensor& g) override {
        DTensor dx = g;
        for (std::size_t i = 0; i < dx.numel(); ++i)
            if (in_[i] <= 0.0) dx[i] = 0.0;
        return dx;
    }

private:
    DTensor in_;
};

/** Clamp to [-1, 1]; gradient passes only strictly inside the interval. */
class Hardtanh : public Layer {
public:
    const char* kind() const override { return "hardtanh"; }

    DTensor forward(const DTensor& x, bool training) override {
        DTensor y = x;
        for (std::size_t i = 0; i < y.numel(); ++i) {
            if (y[i] < -1.0) y[i] = -1.0;
            else if (y[i] > 1.0) y[i] = 1.0;
        }
        if (training) in_ = x;
        return y;
    }

    DTensor backward(const DTensor& g) override {
        DTensor dx = g;
        for (std::size_t i = 0; i < dx.numel(); ++i)
            if (in_[i] <= -1.0 || in_[i] >= 1.0) dx[i] = 0.0;
        return dx;
    }

private:
    DTensor in_;
};

/** [N,H,W,C] -> [N,C] spatial mean. */
class GlobalAvgPool : public Layer {
public:
    const char* kind() const override { return "global_avg_pool"; }

    DTensor forward(const DTensor& x, bool training) override {
        if (x.rank() != 4) throw validation_error("GlobalAvgPool: expected rank-4 input");
        const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
        DTensor y({n, c});
        for (std::size_t img = 0; img < n; ++img)
            for (std::size_t yy = 0; yy < h; ++yy)
                for (std::size_t xx = 0; xx < w; ++xx)
                    for (std::size_t ch = 0; ch < c; ++ch)
                        y.at(img, ch) += x.at(img, yy, xx, ch);
        const double inv = 1.0 / static_cast<double>(h * w);
        for (std::size_t i = 0; i < y.numel(); ++i) y[i] *= inv;
        if (training) in_shape_ = x.shape();
        return y;
    }

    DTensor backward(const DTensor& g) override {
        const std::size_t n = in_shape_[0], h = in_shape_[1], w = in_shape_[2],
                          c = in_shape_[3];
        const double inv = 1.0 / static_cast<double>(h * w);
        DTensor dx({n, h, w, c});
        for (std::size_t img = 0; img < n; ++img)
            for (std::size_t yy = 0; yy < h; ++yy)
                for (std::size_t xx = 0; xx < w; ++xx)
                    for (std::size_t ch = 0; ch < c; ++ch)
                        dx.at(img, yy, xx, ch) = g.at(img, ch) * inv;
        return dx;
    }

private:
    std::vector<std::size_t> in_shape_;
};

/**
 * Depth-to-space rearrangement by factor r:
 * input[n, y, x, c*(r*r) + ry*r + rx] -> output[n, y*r+ry, x*r+rx, c].
 */
class DepthToSpace : public Layer {
public:
    explicit DepthToSpace(std::size_t r) : r_(r) {
        if (r == 0) throw validation_error("DepthToSpace: factor must be positive");
    }

    const char* kind() const override { return "depth_to_space"; }

    DTensor forward(const DTensor& x, bool training) override {
        if (x.rank() != 4 || x.dim(3) % (r_ * r_) != 0)
            throw validation_error("DepthToSpace: channels " + std::to_string(x.dim(3)) +
                                   " not divisible by r^2=" + std::to_string(r_ * r_));
        const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2);
        const std::size_t oc = x.dim(3) / (r_ * r_);
        DTensor y({n, h * r_, w * r_, oc});
        for (std::size_t img = 0; img < n; ++img)
            for (std::size_t yy = 0; yy < h; ++yy)
                for (std::size_t xx = 0; xx < w; ++xx)
                    for (std::size_t c = 0; c < oc; ++c)
                        for (std::size_t ry = 0; ry < r_; ++ry)
                            for (std::size_t rx = 0; rx < r_; ++rx)
                                y.at(img, yy * r_ + ry, xx * r_ + rx, c) =
                                    x.at(img, yy, xx, c * r_ * r_ + ry * r_ + rx);
        if (training) in_shape_ = x.shape();
        return y;
    }

    DTensor backward(const DTensor& g) override {
        const std::size_t n = in_shape_[0], h = in_shape_[1], w = in_shape_[2],
                          ic = in_shape_[3];
        const std::size_t oc = ic / (r_ * r_);
        DTensor dx({n, h, w, ic});
        for (std::size_t img = 0; img < n; ++img)
            for (std::size_t yy = 0; yy < h; ++yy)
                for (std::size_t xx = 0; xx < w; ++xx)
                    for (std::size_t c = 0; c < oc; ++c)
                        for (std::size_t ry = 0; ry < r_; ++ry)
                            for (std::size_t rx = 0; rx < r_; ++rx)
                                dx.at(img, yy, xx, c * r_ * r_ + ry * r_ + rx) =
                                    g.at(img, yy * r_ + ry, xx * r_ + rx, c);
        return dx;
    }

private:
    std::size_t r_;
    std::vector<std::size_t> in_shape_;
};

/** Nearest-neighbor spatial resampling to a fixed target size. */
class NearestResize : public Layer {
public:
    NearestResize(std::size_t th, std::size_t tw) : th_(th), tw_(tw) {
        if (th == 0 || tw == 0) throw validation_error("NearestResize: zero target");
    }

    const char* kind() const override { return "nearest_resize"; }

    DTensor forward(const DTensor& x, bool training) override {
        if (x.rank() != 4) throw validation_error("NearestResize: expected rank-4 input");
        const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
        DTensor y({n, th_, tw_, c});
        for (std::size_t img = 0; img < n; ++img)
            for (std::size_t yy = 0; yy < th_; ++yy) {
                const std::size_t sy = yy * h / th_;
                for (std::size_t xx = 0; xx < tw_; ++xx) {
                    const std::size_t sx = xx * w / tw_;
                    for (std::size_t ch = 0; ch < c; ++ch)
                        y.at(img, yy, xx, ch) = x.at(img, sy, sx, ch);
                }
            }
        if (training) in_shape_ = x.shape();
        return y;
    }

    DTensor backward(const DTensor& g) override {
        const std::size_t n = in_shape_[0], h = in_shape_[1], w = in_shape_[2],
                          c = in_shape_[3];
        DTensor dx({n, h, w, c});
        for (std::size_t img = 0; img < n; ++img)
            for (std::size_t yy = 0; yy < th_; ++yy) {
                const std::size_t sy = yy * h / th_;
                for (std::size_t xx = 0; xx < tw_; ++xx) {
                    const std::size_t sx = xx * w / tw_;
                    for (std::size_t ch = 0; ch < c; ++ch)
                        dx.at(img, sy, sx, ch) += g.at(img, yy, xx, ch);
                }
            }
        return dx;
    }

private:
    std::size_t th_, tw_;
    std::vector<std::size_t> in_shape_;
};

} // namespace bsl::nn
