#pragma once

#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "../core/rng.hpp"
#include "image_io.hpp"
#include "manifest.hpp"

namespace bsl {

// =====================================================================
// Procedural spliced-forgery corpus.
//
// Real images are cartoon portraits over a position-coded background:
// the red channel brightens left to right, the blue channel top to
// bottom, so tile content carries its own grid coordinates. The face
// adds part layout (eyes above mouth) and the hair adds fine stripes,
// giving both low and high frequency structure.
//
// Fakes splice an elliptical patch from a donor portrait into a target
// at the same location, with a small spatial shift and a per-channel
// color offset of guaranteed magnitude on the donor. Two cue families
// result: a checkerboard micro-texture stamped on the splice (mimicking
// upsampling artifacts) plus the sharp seam, both high frequency and
// wiped out by blur or a resize round trip; and the color mismatch
// against the position-coded background, low frequency and robust.
// =====================================================================

namespace synth_detail {

/** Soft-edged ellipse composite. `edge` is the feather width in normalized
    radius units; `shade` darkens the lower half; `stripe_freq` > 0 modulates
    coverage with vertical stripes (cycles per pixel). */
inline void add_ellipse(ImageTensor& img, double cy, double cx, double ay, double ax,
                        const std::array<double, 3>& color, double edge, double shade = 0.0,
                        double stripe_freq = 0.0, double stripe_phase = 0.0) {
    const std::size_t h = img.dim(0), w = img.dim(1), c = img.dim(2);
    const long y0 = std::max(0L, static_cast<long>(std::floor(cy - ay * (1.0 + edge))));
    const long y1 = std::min(static_cast<long>(h) - 1, static_cast<long>(std::ceil(cy + ay * (1.0 + edge))));
    const long x0 = std::max(0L, static_cast<long>(std::floor(cx - ax * (1.0 + edge))));
    const long x1 = std::min(static_cast<long>(w) - 1, static_cast<long>(std::ceil(cx + ax * (1.0 + edge))));
    for (long y = y0; y <= y1; ++y) {
        for (long x = x0; x <= x1; ++x) {
            const double dy = (y - cy) / ay, dx = (x - cx) / ax;
            const double d = std::sqrt(dy * dy + dx * dx);
            double cover = (1.0 - d) / edge;
            if (cover <= 0.0) continue;
            if (cover > 1.0) cover = 1.0;
            if (stripe_freq > 0.0)
                cover *= 0.55 + 0.45 * std::sin(2.0 * M_PI * stripe_freq * x + stripe_phase);
            const double tone = 1.0 - shade * dy;
            for (std::size_t ch = 0; ch < c; ++ch) {
                double& v = img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), ch);
                v = v * (1.0 - cover) + color[ch] * tone * cover;
            }
        }
    }
}

inline std::array<double, 3> jitter3(const std::array<double, 3>& base, RngStream& s, double amp) {
    return {base[0] + s.uniform(-amp, amp), base[1] + s.uniform(-amp, amp),
            base[2] + s.uniform(-amp, amp)};
}

} // namespace synth_detail

/** One procedural portrait, side x side x 3, deterministic in the stream. */
inline ImageTensor synth_real_image(std::size_t side, RngStream& s) {
    if (side < 16)
        throw validation_error("synth_real_image: side must be >= 16, got " + std::to_string(side));
    using synth_detail::add_ellipse;
    using synth_detail::jitter3;
    const double S = static_cast<double>(side);
    ImageTensor img({side, side, 3});

    // Position-coded background: red codes the column, blue codes the row.
    const std::array<double, 3> base = {s.uniform(0.18, 0.26), s.uniform(0.18, 0.26),
                                        s.uniform(0.18, 0.26)};
    const std::array<double, 3> rowk = {0.10 * s.uniform(0.85, 1.15), 0.18 * s.uniform(0.85, 1.15),
                                        0.30 * s.uniform(0.85, 1.15)};
    const std::array<double, 3> colk = {0.30 * s.uniform(0.85, 1.15), 0.18 * s.uniform(0.85, 1.15),
                                        0.10 * s.uniform(0.85, 1.15)};
    const double tex_amp = s.uniform(0.008, 0.016);
    const double tex_phase = s.uniform(0.0, 2.0 * M_PI);
    for (std::size_t y = 0; y < side; ++y) {
        const double ny = y / (S - 1.0);
        for (std::size_t x = 0; x < side; ++x) {
            const double nx = x / (S - 1.0);
            const double tex = tex_amp * std::sin(2.0 * M_PI * (x + 2.0 * y) / 3.0 + tex_phase);
            for (std::size_t c = 0; c < 3; ++c)
                img.at(y, x, c) = base[c] + rowk[c] * ny + colk[c] * nx + tex + s.uniform(-0.004, 0.004);
        }
    }

    // Portrait: hair behind, then face, eyes, brows, mouth.
    const double cy = S * s.uniform(0.40, 0.50), cx = S * s.uniform(0.44, 0.56);
    const double ay = S * s.uniform(0.30, 0.38), ax = S * s.uniform(0.22, 0.28);
    const std::array<double, 3> skin = jitter3({0.78, 0.62, 0.50}, s, 0.05);
    const std::array<double, 3> hair = jitter3({0.16, 0.12, 0.08}, s, 0.04);
    const std::array<double, 3> lips = jitter3({0.55, 0.22, 0.20}, s, 0.04);
    add_ellipse(img, cy - 0.55 * ay, cx, 0.55 * ay, 1.15 * ax, hair, 0.10, 0.0,
                s.uniform(0.22, 0.40), s.uniform(0.0, 2.0 * M_PI));
    add_ellipse(img, cy, cx, ay, ax, skin, 0.06, 0.22);
    for (const double sgn : {-1.0, 1.0}) {
        add_ellipse(img, cy - 0.22 * ay, cx + sgn * 0.40 * ax, 0.11 * ay, 0.18 * ax,
                    {0.92, 0.92, 0.90}, 0.25);
        add_ellipse(img, cy - 0.22 * ay, cx + sgn * 0.40 * ax, 0.055 * ay, 0.07 * ax,
                    {0.12, 0.10, 0.10}, 0.40);
        add_ellipse(img, cy - 0.38 * ay, cx + sgn * 0.40 * ax, 0.035 * ay, 0.20 * ax,
                    {0.18, 0.13, 0.09}, 0.30);
    }
    add_ellipse(img, cy + 0.48 * ay, cx, 0.07 * ay, 0.30 * ax, lips, 0.20);

    for (std::size_t i = 0; i < img.numel(); ++i)
        img[i] = std::min(0.98, std::max(0.02, img[i]));
    return img;
}

/** Pool of portraits; image i depends only on (seed, i). */
inline std::vector<ImageTensor> synth_real_pool(std::size_t n, std::size_t side, std::uint64_t seed) {
    std::vector<ImageTensor> pool;
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream s = RngStream::derive(seed, "synth/real", i);
        pool.push_back(synth_real_image(side, s));
    }
    return pool;
}

struct FakeSample {
    ImageTensor image;
    std::size_t target_index = 0;
    std::size_t donor_index = 0;
    DTensor alpha; ///< [H,W,1] blend weight; exactly 0 outside the feathered splice
};

/** Splice one fake from the pool. Retries draws until more than 1% of the
    pixels move by more than 2/255; throws structural_error after 16 failed
    attempts. */
inline FakeSample synth_fake_image(const std::vector<ImageTensor>& pool, RngStream& s) {
    if (pool.size() < 2)
        throw validation_error("synth_fake_image: pool needs at least 2 images");
    const std::size_t h = pool[0].dim(0), w = pool[0].dim(1), c = pool[0].dim(2);
    for (const ImageTensor& p : pool)
        if (!p.same_shape(pool[0]))
            throw validation_error("synth_fake_image: pool images must share one shape");

    const std::size_t target = s.bounded(pool.size());
    std::size_t donor = s.bounded(pool.size() - 1);
    if (donor >= target) ++donor;
    const ImageTensor& t = pool[target];
    const ImageTensor& d = pool[donor];
    const double S = static_cast<double>(std::min(h, w));
    const long max_shift = std::max(2L, static_cast<long>(S) / 8);

    for (int attempt = 0; attempt < 16; ++attempt) {
        const double cy = h * s.uniform(0.30, 0.70), cx = w * s.uniform(0.30, 0.70);
        const double ay = S * s.uniform(0.18, 0.30), ax = S * s.uniform(0.18, 0.30);
        const long dy = static_cast<long>(s.bounded(2 * max_shift + 1)) - max_shift;
        const long dx = static_cast<long>(s.bounded(2 * max_shift + 1)) - max_shift;
        std::array<double, 3> gain, off;
        for (std::size_t ch = 0; ch < 3; ++ch) {
            gain[ch] = s.uniform(0.92, 1.08);
            off[ch] = s.uniform(0.05, 0.12) * (s.bounded(2) ? 1.0 : -1.0);
        }
        const double check_amp = s.uniform(0.05, 0.09);
        const std::size_t check_phase = s.bounded(2);

        cv::Mat mask = cv::Mat::zeros(static_cast<int>(h), static_cast<int>(w), CV_64FC1);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const double ddy = (y - cy) / ay, ddx = (x - cx) / ax;
                if (ddy * ddy + ddx * ddx <= 1.0) mask.at<double>(static_cast<int>(y), static_cast<int>(x)) = 1.0;
            }
        cv::Mat feathered;
        cv::GaussianBlur(mask, feathered, cv::Size(3, 3), 0.8, 0.8);

        FakeSample out;
        out.image = t;
        out.target_index = target;
        out.donor_index = donor;
        out.alpha = DTensor({h, w, 1});
        std::size_t moved = 0;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const double a = feathered.at<double>(static_cast<int>(y), static_cast<int>(x));
                out.alpha.at(y, x, std::size_t{0}) = a;
                if (a <= 0.0) continue;
                const std::size_t sy = static_cast<std::size_t>(
                    std::min<long>(static_cast<long>(h) - 1, std::max(0L, static_cast<long>(y) + dy)));
                const std::size_t sx = static_cast<std::size_t>(
                    std::min<long>(static_cast<long>(w) - 1, std::max(0L, static_cast<long>(x) + dx)));
                const double check = ((y + x + check_phase) & 1) ? check_amp : -check_amp;
                bool big = false;
                for (std::size_t ch = 0; ch < c; ++ch) {
                    double dv = d.at(sy, sx, ch) * gain[ch] + off[ch] + check;
                    dv = std::min(1.0, std::max(0.0, dv));
                    double& v = out.image.at(y, x, ch);
                    v = t.at(y, x, ch) * (1.0 - a) + dv * a;
                    if (std::abs(v - t.at(y, x, ch)) > 2.0 / 255.0) big = true;
                }
                if (big) ++moved;
            }
        }
        if (moved * 100 > h * w) return out;
    }
    throw structural_error("synth_fake_image: no detectable splice after 16 attempts");
}

/** Write the pool as real PNGs plus `count` spliced fakes, all labelled with
    `split`. Fake i depends only on (seed, i). Returns the manifest rows;
    count = 0 yields real rows only. */
inline Manifest synth_forgery(const std::vector<ImageTensor>& pool, std::size_t count,
                              std::uint64_t seed, const std::filesystem::path& out_dir,
                              const std::string& split = "train", const std::string& prefix = "") {
    std::filesystem::create_directories(out_dir);
    Manifest m;
    m.root = out_dir;
    const auto name = [&](const char* kind, std::size_t i) {
        std::ostringstream os;
        os << prefix << kind << '_' << std::setw(5) << std::setfill('0') << i << ".png";
        return os.str();
    };
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const std::string file = name("real", i);
        save_png(pool[i], out_dir / file);
        m.rows.push_back({file, 0, split});
    }
    for (std::size_t i = 0; i < count; ++i) {
        RngStream s = RngStream::derive(seed, "synth/fake", i);
        FakeSample fake = synth_fake_image(pool, s);
        const std::string file = name("fake", i);
        save_png(fake.image, out_dir / file);
        m.rows.push_back({file, 1, split});
    }
    return m;
}

struct SynthPlan {
    std::size_t side = 64;
    std::size_t train = 0, val = 0, test = 0; ///< per-class counts per split
};

/** Generate a balanced multi-split corpus under out_dir and save manifest.csv.
    Fakes for a split splice only images from that split's pool. */
inline Manifest synth_dataset(const SynthPlan& plan, std::uint64_t seed,
                              const std::filesystem::path& out_dir) {
    if (plan.train + plan.val + plan.test == 0)
        throw validation_error("synth_dataset: empty plan");
    Manifest all;
    all.root = out_dir;
    const std::array<std::pair<const char*, std::size_t>, 3> splits = {
        {{"train", plan.train}, {"val", plan.val}, {"test", plan.test}}};
    for (const auto& [split, n] : splits) {
        if (n == 0) continue;
        const std::uint64_t split_seed = derive_key(seed, std::string("synth/split/") + split);
        std::vector<ImageTensor> pool = synth_real_pool(n, plan.side, split_seed);
        Manifest part = synth_forgery(pool, n, split_seed, out_dir, split,
                                      std::string(split) + "_");
        all.rows.insert(all.rows.end(), part.rows.begin(), part.rows.end());
    }
    all.save(out_dir / "manifest.csv");
    return all;
}

} // namespace bsl
