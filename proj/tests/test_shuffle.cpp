#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <vector>

#include <bsl/shuffle/shuffle.hpp>

using namespace bsl;

namespace {

ImageTensor random_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
    RngStream s = RngStream::derive(seed, "img");
    ImageTensor img({h, w, c});
    for (std::size_t i = 0; i < img.numel(); ++i) img[i] = s.uniform();
    return img;
}

std::vector<double> channel_sorted(const ImageTensor& img, std::size_t ch) {
    std::vector<double> v;
    v.reserve(img.dim(0) * img.dim(1));
    for (std::size_t y = 0; y < img.dim(0); ++y)
        for (std::size_t x = 0; x < img.dim(1); ++x) v.push_back(img.at(y, x, ch));
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<double> block_sorted(const ImageTensor& img, std::size_t by, std::size_t bx,
                                 std::size_t s) {
    std::vector<double> v;
    for (std::size_t y = 0; y < s; ++y)
        for (std::size_t x = 0; x < s; ++x)
            for (std::size_t k = 0; k < img.dim(2); ++k)
                v.push_back(img.at(by * s + y, bx * s + x, k));
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

TEST_CASE("partition produces the expected grids", "[shuffle][grid]") {
    ImageTensor img = random_image(224, 224, 3, 1);
    BlockGrid g16 = partition_blocks(img, 16);
    REQUIRE(g16.m == 14);
    REQUIRE(g16.n == 14);
    REQUIRE(g16.tiles.size() == 196);
    REQUIRE(g16.tile(0, 0).shape() == std::vector<std::size_t>{16, 16, 3});

    BlockGrid g32 = partition_blocks(img, 32);
    REQUIRE(g32.m == 7);
    REQUIRE(g32.n == 7);

    ImageTensor tiny = random_image(16, 16, 3, 2);
    BlockGrid g1 = partition_blocks(tiny, 16);
    REQUIRE(g1.m == 1);
    REQUIRE(g1.n == 1);
    REQUIRE(g1.tile(0, 0).storage() == tiny.storage());
}

TEST_CASE("partition rejects non-divisible extents naming the axis", "[shuffle][grid]") {
    ImageTensor img = random_image(48, 64, 3, 3);
    REQUIRE_THROWS_WITH(partition_blocks(img, 32), Catch::Matchers::ContainsSubstring("height"));
    ImageTensor img2 = random_image(64, 48, 3, 4);
    REQUIRE_THROWS_WITH(partition_blocks(img2, 32), Catch::Matchers::ContainsSubstring("width"));
}

TEST_CASE("assemble inverts partition exactly", "[shuffle][grid]") {
    for (std::size_t s : {8u, 16u, 32u}) {
        ImageTensor img = random_image(64, 96, 3, 5 + s);
        ImageTensor back = assemble_blocks(partition_blocks(img, s));
        REQUIRE(back.storage() == img.storage());
    }
}

TEST_CASE("assemble rejects ragged grids", "[shuffle][grid]") {
    ImageTensor img = random_image(64, 64, 3, 6);
    BlockGrid g = partition_blocks(img, 32);
    g.tiles[1] = DTensor({16, 16, 3});
    REQUIRE_THROWS_AS(assemble_blocks(g), structural_error);

    BlockGrid missing = partition_blocks(img, 32);
    missing.tiles.pop_back();
    REQUIRE_THROWS_AS(assemble_blocks(missing), structural_error);
}

TEST_CASE("intra_shuffle_block applies out[k] = in[perm[k]]", "[shuffle][block]") {
    // 2x2 tile [[a,b],[c,d]], full reversal.
    DTensor tile = DTensor::from_data({2, 2, 1}, {0.1, 0.2, 0.3, 0.4});
    DTensor rev = intra_shuffle_block(tile, {3, 2, 1, 0});
    REQUIRE(rev.storage() == std::vector<double>{0.4, 0.3, 0.2, 0.1});

    // Identity permutation is a no-op.
    DTensor same = intra_shuffle_block(tile, {0, 1, 2, 3});
    REQUIRE(same.storage() == tile.storage());

    // Channels travel together.
    DTensor rgb = DTensor::from_data({2, 2, 2}, {1, 10, 2, 20, 3, 30, 4, 40});
    DTensor r = intra_shuffle_block(rgb, {2, 3, 0, 1});
    REQUIRE(r.at(0, 0, 0) == 3.0);
    REQUIRE(r.at(0, 0, 1) == 30.0);

    // A constant tile is invariant under any permutation.
    DTensor flat({4, 4, 3});
    flat.fill(0.25);
    RngStream s = RngStream::derive(9, "p");
    DTensor shuffled = intra_shuffle_block(flat, s.permutation(16));
    REQUIRE(shuffled.storage() == flat.storage());
}

TEST_CASE("intra_shuffle_block validates the permutation", "[shuffle][block]") {
    DTensor tile({2, 2, 1});
    REQUIRE_THROWS_AS(intra_shuffle_block(tile, {0, 1, 2}), validation_error);
    REQUIRE_THROWS_AS(intra_shuffle_block(tile, {0, 1, 2, 4}), validation_error);
    REQUIRE_THROWS_AS(intra_shuffle_block(tile, {0, 1, 1, 2}), validation_error);
}

TEST_CASE("shuffle config validation", "[shuffle]") {
    ShuffleConfig cfg;
    REQUIRE_NOTHROW(cfg.validate_for(224, 224));

    ShuffleConfig bad = cfg;
    bad.s_inter = 24;   // not a multiple of 16
    REQUIRE_THROWS_AS(bad.validate(), validation_error);

    bad = cfg;
    bad.q_lo = 0.7;
    bad.q_hi = 0.5;
    REQUIRE_THROWS_AS(bad.validate(), validation_error);

    bad = cfg;
    bad.p_inter = 1.5;
    REQUIRE_THROWS_AS(bad.validate(), validation_error);

    REQUIRE_THROWS_AS(cfg.validate_for(100, 224), validation_error);
}

TEST_CASE("shuffle conserves pixels per channel", "[shuffle][property]") {
    for (std::uint64_t trial = 0; trial < 8; ++trial) {
        ImageTensor img = random_image(64, 64, 3, 100 + trial);
        ShuffleConfig cfg;
        cfg.s_intra = 8;
        cfg.s_inter = 16;
        RngStream s = RngStream::derive(50, "shuffle", trial);
        ShuffleOutcome out = shuffle_image(img, cfg, s);
        for (std::size_t ch = 0; ch < 3; ++ch)
            REQUIRE(channel_sorted(out.image, ch) == channel_sorted(img, ch));
    }
}

TEST_CASE("with p_inter=0 every pixel stays inside its fine block", "[shuffle][property]") {
    ImageTensor img = random_image(64, 64, 3, 200);
    ShuffleConfig cfg;
    cfg.s_intra = 8;
    cfg.s_inter = 16;
    cfg.p_inter = 0.0;
    cfg.q_lo = cfg.q_hi = 1.0;   // shuffle every block
    RngStream s = RngStream::derive(51, "shuffle");
    ShuffleOutcome out = shuffle_image(img, cfg, s);
    REQUIRE(!out.inter_applied);
    for (std::size_t by = 0; by < 8; ++by)
        for (std::size_t bx = 0; bx < 8; ++bx)
            REQUIRE(block_sorted(out.image, by, bx, 8) == block_sorted(img, by, bx, 8));
    // And the coarse mapping is the identity.
    for (std::size_t i = 0; i < out.coords.m; ++i)
        for (std::size_t j = 0; j < out.coords.n; ++j)
            REQUIRE(out.coords.at(i, j) == GridPos{i, j});
}

TEST_CASE("inter-only shuffle moves whole tiles on the nested grid", "[shuffle][property]") {
    ImageTensor img = random_image(96, 64, 3, 300);
    ShuffleConfig cfg;
    cfg.s_intra = 8;
    cfg.s_inter = 32;
    cfg.q_lo = cfg.q_hi = 0.0;   // no intra shuffling
    RngStream s = RngStream::derive(52, "shuffle");
    ShuffleOutcome out = shuffle_image(img, cfg, s);
    REQUIRE(out.inter_applied);
    REQUIRE(out.mark.mean() == 0.0);

    // Each coarse tile of the output equals the recorded source tile of the input.
    const std::size_t S = cfg.s_inter;
    for (std::size_t i = 0; i < out.coords.m; ++i)
        for (std::size_t j = 0; j < out.coords.n; ++j) {
            const GridPos src = out.coords.at(i, j);
            for (std::size_t y = 0; y < S; ++y)
                for (std::size_t x = 0; x < S; ++x)
                    for (std::size_t k = 0; k < 3; ++k)
                        REQUIRE(out.image.at(i * S + y, j * S + x, k) ==
                                img.at(src.row * S + y, src.col * S + x, k));
        }

    // Grid nesting: every fine block of the output is some fine block of the input.
    std::map<std::vector<double>, int> input_blocks;
    for (std::size_t by = 0; by < 96 / 8; ++by)
        for (std::size_t bx = 0; bx < 64 / 8; ++bx)
            input_blocks[block_sorted(img, by, bx, 8)]++;
    for (std::size_t by = 0; by < 96 / 8; ++by)
        for (std::size_t bx = 0; bx < 64 / 8; ++bx) {
            auto it = input_blocks.find(block_sorted(out.image, by, bx, 8));
            REQUIRE(it != input_blocks.end());
            if (--it->second == 0) input_blocks.erase(it);
        }
    REQUIRE(input_blocks.empty());
}

TEST_CASE("coords record a bijection over coarse cells", "[shuffle][property]") {
    ImageTensor img = random_image(128, 128, 3, 400);
    ShuffleConfig cfg;
    cfg.s_intra = 16;
    cfg.s_inter = 32;
    RngStream s = RngStream::derive(53, "shuffle");
    ShuffleOutcome out = shuffle_image(img, cfg, s);
    std::vector<bool> seen(out.coords.m * out.coords.n, false);
    for (const GridPos& p : out.coords.source) {
        const std::size_t flat = p.row * out.coords.n + p.col;
        REQUIRE(!seen[flat]);
        seen[flat] = true;
    }
}

TEST_CASE("mark is set exactly where a permutation was recorded", "[shuffle][property]") {
    ImageTensor img = random_image(64, 64, 3, 500);
    ShuffleConfig cfg;
    cfg.s_intra = 8;
    cfg.s_inter = 16;
    RngStream s = RngStream::derive(54, "shuffle");
    ShuffleOutcome out = shuffle_image(img, cfg, s);
    REQUIRE(out.intra_perms.size() == out.mark.mark.size());
    bool any_set = false, any_clear = false;
    for (std::size_t b = 0; b < out.mark.mark.size(); ++b) {
        REQUIRE((out.mark.mark[b] == 1) == !out.intra_perms[b].empty());
        any_set |= out.mark.mark[b] == 1;
        any_clear |= out.mark.mark[b] == 0;
    }
    REQUIRE(any_set);
    REQUIRE(any_clear);
}

TEST_CASE("unshuffle inverts the transform exactly", "[shuffle][property]") {
    for (std::uint64_t trial = 0; trial < 6; ++trial) {
        ImageTensor img = random_image(64, 64, 3, 600 + trial);
        ShuffleConfig cfg;
        cfg.s_intra = 8;
        cfg.s_inter = trial % 2 ? 16 : 32;
        RngStream s = RngStream::derive(55, "shuffle", trial);
        ShuffleOutcome out = shuffle_image(img, cfg, s);
        ImageTensor back = unshuffle_image(out);
        REQUIRE(back.storage() == img.storage());
    }
}

TEST_CASE("unshuffle without records is rejected", "[shuffle]") {
    ImageTensor img = random_image(64, 64, 3, 700);
    ShuffleConfig cfg;
    cfg.s_intra = 8;
    cfg.s_inter = 16;
    RngStream s = RngStream::derive(56, "shuffle");
    ShuffleOutcome out = shuffle_image(img, cfg, s);
    out.strip_records();
    REQUIRE_THROWS_AS(unshuffle_image(out), unsupported_error);
}

TEST_CASE("equal streams give bit-identical outcomes", "[shuffle][determinism]") {
    ImageTensor img = random_image(64, 64, 3, 800);
    ShuffleConfig cfg;
    cfg.s_intra = 8;
    cfg.s_inter = 16;
    RngStream s1 = RngStream::derive(57, "shuffle", 11);
    RngStream s2 = RngStream::derive(57, "shuffle", 11);
    ShuffleOutcome a = shuffle_image(img, cfg, s1);
    ShuffleOutcome b = shuffle_image(img, cfg, s2);
    REQUIRE(a.image.storage() == b.image.storage());
    REQUIRE(a.mark.mark == b.mark.mark);
    REQUIRE(a.coords.source == b.coords.source);
    REQUIRE(a.intra_perms == b.intra_perms);
    REQUIRE(a.inter_applied == b.inter_applied);
}

TEST_CASE("coordinate normalization maps grid corners to -1 and 1", "[shuffle][coords]") {
    REQUIRE(normalize_coord(0, 7) == -1.0);
    REQUIRE(normalize_coord(6, 7) == 1.0);
    REQUIRE(normalize_coord(3, 7) == 0.0);
    REQUIRE(normalize_coord(0, 1) == 0.0);

    for (std::size_t extent : {1u, 2u, 4u, 7u, 14u})
        for (std::size_t i = 0; i < extent; ++i)
            REQUIRE(decode_coord(normalize_coord(i, extent), extent) == i);

    // Out-of-range predictions clamp to the grid.
    REQUIRE(decode_coord(-3.0, 7) == 0);
    REQUIRE(decode_coord(3.0, 7) == 6);
}

TEST_CASE("zero predictions on a 7x7 grid decode to the center cell", "[shuffle][coords]") {
    DTensor zeros({7, 7, 2});
    std::vector<GridPos> cells = decode_coords(zeros);
    for (const GridPos& p : cells) REQUIRE(p == GridPos{3, 3});
}

TEST_CASE("identity coord target normalizes to a symmetric ramp", "[shuffle][coords]") {
    CoordTarget ct = CoordTarget::identity(7, 7);
    DTensor m = ct.normalized();
    REQUIRE(m.at(0, 0, 0) == -1.0);
    REQUIRE(m.at(6, 0, 0) == 1.0);
    REQUIRE(m.at(0, 0, 1) == -1.0);
    REQUIRE(m.at(0, 6, 1) == 1.0);
    REQUIRE(m.at(3, 3, 0) == 0.0);
}

TEST_CASE("mark density tracks the configured ratio window", "[shuffle][statistics]") {
    // E[mean(P)] = E[q] = 0.5 for q ~ U(0.4, 0.6).
    ImageTensor img = random_image(64, 64, 3, 900);
    ShuffleConfig cfg;   // defaults: s_intra 16, s_inter 32 -> 4x4 fine grid
    double total = 0.0;
    const std::size_t n_images = 10000;
    for (std::size_t i = 0; i < n_images; ++i) {
        RngStream s = RngStream::derive(58, "shuffle", i);
        total += shuffle_image(img, cfg, s).mark.mean();
    }
    const double mean = total / static_cast<double>(n_images);
    REQUIRE(mean > 0.49);
    REQUIRE(mean < 0.51);
}
