#include <doctest.h>

#include <cstring>
#include <random>

#include "infgen/structure.hpp"
#include "infgen/verify.hpp"

using namespace infgen;

namespace {

Tensor random_tensor(int c, int h, int w, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<float> nd;
    Tensor t(c, h, w);
    for (float& v : t.data) v = nd(rng);
    return t;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) && std::memcmp(a.data.data(), b.data.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("unfold: k=1 is identity") {
    Tensor x = random_tensor(3, 4, 5, 1);
    CHECK(bit_equal(unfold(x, 1), x));
}

TEST_CASE("unfold: 3x3 single-channel full window read in tap order") {
    Tensor x(1, 3, 3);
    for (int i = 0; i < 9; ++i) x.data[std::size_t(i)] = float(i);
    Tensor u = unfold(x, 3);
    CHECK(u.channels == 9);
    CHECK(u.height == 1);
    CHECK(u.width == 1);
    // channel (dy*3+dx)*C + c carries input (dy, dx)
    for (int t = 0; t < 9; ++t) CHECK(u.at(t, 0, 0) == float(t));
}

TEST_CASE("unfold: equals valid convolution with one-hot kernels") {
    Tensor x = random_tensor(2, 6, 7, 2);
    const int k = 3;
    Tensor u = unfold(x, k);
    for (int dy = 0; dy < k; ++dy)
        for (int dx = 0; dx < k; ++dx)
            for (int c = 0; c < 2; ++c) {
                ConvWeights onehot(1, 2, k, k);
                onehot.at(0, c, dy, dx) = 1.0f;
                Tensor ref = conv2d_valid(x, onehot);
                int oc = (dy * k + dx) * 2 + c;
                for (int y = 0; y < u.height; ++y)
                    for (int xx = 0; xx < u.width; ++xx) CHECK(u.at(oc, y, xx) == ref.at(0, y, xx));
            }
    Tensor tiny(1, 2, 2);
    CHECK_THROWS_AS(unfold(tiny, 3), Error);
}

TEST_CASE("forward_structure: margin law for both presets") {
    {
        EngineConfig cfg = test_preset();
        WeightSet ws = init_weights(cfg, 5);
        auto z_g = sample_global(1, cfg.fields.d_zg);
        FieldSpec local{1, Stream::local, 0, cfg.fields.d_zl};
        Tensor win = sample_local_window(local, {0, 0}, 9, 9);
        CoordGrid grid = build_grid({0, 0}, 9, 9, cfg.coord.period, cfg.coord.v_scale);
        Tensor zs = forward_structure(z_g, win, grid, cfg, ws);
        CHECK(zs.channels == cfg.structure.hidden);
        CHECK(zs.height == 5);
        CHECK(zs.width == 5);
    }
    {
        EngineConfig cfg = full_preset();
        WeightSet ws = init_weights(cfg, 5);
        auto z_g = sample_global(1, cfg.fields.d_zg);
        FieldSpec local{1, Stream::local, 0, cfg.fields.d_zl};
        Tensor win = sample_local_window(local, {0, 0}, 19, 19);
        CoordGrid grid = build_grid({0, 0}, 19, 19, cfg.coord.period, cfg.coord.v_scale);
        Tensor zs = forward_structure(z_g, win, grid, cfg, ws);
        CHECK(zs.height == 11);
        CHECK(zs.width == 11);
        CHECK(all_finite(zs));
    }
}

TEST_CASE("forward_structure: corner perturbation stays local") {
    EngineConfig cfg = test_preset();
    WeightSet ws = init_weights(cfg, 6);
    auto z_g = sample_global(2, cfg.fields.d_zg);
    FieldSpec local{2, Stream::local, 0, cfg.fields.d_zl};
    Tensor win = sample_local_window(local, {4, 4}, 9, 9);
    CoordGrid grid = build_grid({4, 4}, 9, 9, cfg.coord.period, cfg.coord.v_scale);
    Tensor base = forward_structure(z_g, win, grid, cfg, ws);

    Tensor poked = win;
    poked.at(0, 0, 0) += 3.0f;
    Tensor out = forward_structure(z_g, poked, grid, cfg, ws);

    // window (0,0) can only reach z_S (0,0): every other pixel is bit-identical
    bool corner_changed = false;
    for (int c = 0; c < base.channels; ++c) {
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x) {
                if (y == 0 && x == 0)
                    corner_changed |= base.at(c, y, x) != out.at(c, y, x);
                else
                    CHECK(base.at(c, y, x) == out.at(c, y, x));
            }
    }
    CHECK(corner_changed);
}

TEST_CASE("forward_structure: restriction to a subwindow is exact") {
    EngineConfig cfg = test_preset();
    WeightSet ws = init_weights(cfg, 8);
    auto z_g = sample_global(3, cfg.fields.d_zg);
    FieldSpec local{3, Stream::local, 0, cfg.fields.d_zl};
    Tensor big = sample_local_window(local, {-5, 2}, 12, 12);
    CoordGrid grid_big = build_grid({-5, 2}, 12, 12, cfg.coord.period, cfg.coord.v_scale);
    Tensor zs_big = forward_structure(z_g, big, grid_big, cfg, ws);
    CHECK(zs_big.height == 8);

    Tensor sub = sample_local_window(local, {-3, 3}, 9, 9);
    CoordGrid grid_sub = build_grid({-3, 3}, 9, 9, cfg.coord.period, cfg.coord.v_scale);
    Tensor zs_sub = forward_structure(z_g, sub, grid_sub, cfg, ws);
    CHECK(bit_equal(zs_sub, crop_tensor(zs_big, 2, 1, 5, 5)));
}

TEST_CASE("forward_structure: identical neighborhoods give identical outputs") {
    EngineConfig cfg = test_preset();
    WeightSet ws = init_weights(cfg, 9);
    auto z_g = sample_global(4, cfg.fields.d_zg);

    // same z_l values, coordinates one period apart: grids match bit for bit,
    // so z_S must match too
    Tensor zl = random_tensor(cfg.fields.d_zl, 9, 9, 10);
    CoordGrid g1 = build_grid({2, 5}, 9, 9, cfg.coord.period, cfg.coord.v_scale);
    CoordGrid g2 = build_grid({2, 5 + cfg.coord.period}, 9, 9, cfg.coord.period, cfg.coord.v_scale);
    Tensor a = forward_structure(z_g, zl, g1, cfg, ws);
    Tensor b = forward_structure(z_g, zl, g2, cfg, ws);
    CHECK(bit_equal(a, b));
}

TEST_CASE("forward_structure: periodic coordinates alone do not repeat the output") {
    EngineConfig cfg = test_preset();
    WeightSet ws = init_weights(cfg, 9);
    auto z_g = sample_global(4, cfg.fields.d_zg);
    FieldSpec local{4, Stream::local, 0, cfg.fields.d_zl};

    GlobalIndex o1{2, 5};
    GlobalIndex o2{2, 5 + cfg.coord.period};
    Tensor w1 = sample_local_window(local, o1, 9, 9);
    Tensor w2 = sample_local_window(local, o2, 9, 9);
    CoordGrid g1 = build_grid(o1, 9, 9, cfg.coord.period, cfg.coord.v_scale);
    CoordGrid g2 = build_grid(o2, 9, 9, cfg.coord.period, cfg.coord.v_scale);
    Tensor a = forward_structure(z_g, w1, g1, cfg, ws);
    Tensor b = forward_structure(z_g, w2, g2, cfg, ws);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) differs |= a.data[i] != b.data[i];
    CHECK(differs);  // z_l variation reaches the output
}

TEST_CASE("forward_structure: shape errors") {
    EngineConfig cfg = test_preset();
    WeightSet ws = init_weights(cfg, 10);
    auto z_g = sample_global(5, cfg.fields.d_zg);
    Tensor win = random_tensor(cfg.fields.d_zl, 4, 4, 11);  // margin is 4: no output left
    CoordGrid grid = build_grid({0, 0}, 4, 4, 64, 8.0);
    CHECK_THROWS_AS(forward_structure(z_g, win, grid, cfg, ws), Error);

    Tensor wrong_ch = random_tensor(cfg.fields.d_zl + 1, 9, 9, 12);
    CoordGrid grid9 = build_grid({0, 0}, 9, 9, 64, 8.0);
    CHECK_THROWS_AS(forward_structure(z_g, wrong_ch, grid9, cfg, ws), Error);
}

TEST_CASE("diversity_loss: degenerate, identity, and oracle cases") {
    Tensor z(2, 3, 3);
    CHECK(diversity_loss(z, z, z, z) == 0.0);

    Tensor z1 = random_tensor(2, 3, 3, 13);
    Tensor z2 = random_tensor(2, 3, 3, 14);
    CHECK(diversity_loss(z1, z2, z1, z2) == doctest::Approx(1.0).epsilon(1e-6));

    Tensor s1 = random_tensor(4, 2, 2, 15);
    Tensor s2 = random_tensor(4, 2, 2, 16);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < z1.size(); ++i) num += std::abs(double(z1.data[i]) - double(z2.data[i]));
    for (std::size_t i = 0; i < s1.size(); ++i) den += std::abs(double(s1.data[i]) - double(s2.data[i]));
    CHECK(diversity_loss(z1, z2, s1, s2) == doctest::Approx(num / (den + 1e-6)).epsilon(1e-12));

    Tensor bad(2, 3, 4);
    CHECK_THROWS_AS(diversity_loss(z1, bad, s1, s2), Error);
}
