#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "infgen/objectives.hpp"
#include "infgen/fields.hpp"

using namespace infgen;

TEST_CASE("adv_losses: zeros, saturation, and the softplus oracle") {
    std::vector<double> zeros{0.0, 0.0};
    AdvLosses l = adv_losses(zeros, zeros);
    CHECK(l.d_loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(l.g_loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    std::vector<double> real{40.0}, fake{-40.0};
    AdvLosses sat = adv_losses(real, fake);
    CHECK(sat.d_loss < 1e-15);

    std::mt19937 rng(1);
    std::normal_distribution<double> nd(0.0, 3.0);
    std::vector<double> r(17), f(9);
    for (double& v : r) v = nd(rng);
    for (double& v : f) v = nd(rng);
    AdvLosses got = adv_losses(r, f);
    double dr = 0, df = 0, g = 0;
    for (double v : r) dr += std::log1p(std::exp(-std::abs(v))) + std::max(-v, 0.0);
    for (double v : f) {
        df += std::log1p(std::exp(-std::abs(v))) + std::max(v, 0.0);
        g += std::log1p(std::exp(-std::abs(v))) + std::max(-v, 0.0);
    }
    CHECK(got.d_loss == doctest::Approx(dr / 17 + df / 9).epsilon(1e-12));
    CHECK(got.g_loss == doctest::Approx(g / 9).epsilon(1e-12));

    CHECK_THROWS_AS(adv_losses({}, fake), Error);
}

TEST_CASE("aux_coord_loss: exact values and errors") {
    std::vector<double> a{0.3}, b{0.5};
    CHECK(aux_coord_loss(a, a) == 0.0);
    CHECK(aux_coord_loss(a, b) == doctest::Approx(0.2).epsilon(1e-15));

    std::mt19937 rng(2);
    std::uniform_real_distribution<double> ud(-1, 1);
    std::vector<double> p(11), q(11);
    for (std::size_t i = 0; i < 11; ++i) {
        p[i] = ud(rng);
        q[i] = ud(rng);
    }
    double s = 0;
    for (std::size_t i = 0; i < 11; ++i) s += std::abs(p[i] - q[i]);
    CHECK(aux_coord_loss(p, q) == doctest::Approx(s / 11).epsilon(1e-15));

    std::vector<double> c{1.0, 2.0};
    CHECK_THROWS_AS(aux_coord_loss(a, c), Error);
}

TEST_CASE("r1_penalty_fd: exact on linear maps, zero on constants, h^2 on quadratics") {
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    std::vector<double> a(12), x(12);
    for (std::size_t i = 0; i < 12; ++i) {
        a[i] = nd(rng);
        x[i] = nd(rng);
    }
    ScalarFn linear = [&](std::span<const double> p) {
        double s = 0;
        for (std::size_t i = 0; i < p.size(); ++i) s += a[i] * p[i];
        return s;
    };
    double expect = 0;
    for (double v : a) expect += v * v;
    expect *= 0.5;
    CHECK(r1_penalty_fd(linear, x, 1e-3) == doctest::Approx(expect).epsilon(1e-8));

    ScalarFn constant = [](std::span<const double>) { return 4.2; };
    CHECK(r1_penalty_fd(constant, x, 1e-3) == 0.0);

    ScalarFn quad = [](std::span<const double> p) {
        double s = 0;
        for (double v : p) s += v * v;
        return s;
    };
    double g2 = 0;
    for (double v : x) g2 += 4.0 * v * v;  // grad = 2x
    CHECK(r1_penalty_fd(quad, x, 1e-3) == doctest::Approx(0.5 * g2).epsilon(1e-4));

    ScalarFn bad = [](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); };
    CHECK_THROWS_AS(r1_penalty_fd(bad, x, 1e-3), Error);
    CHECK_THROWS_AS(r1_penalty_fd(linear, x, 0.0), Error);
}

TEST_CASE("path_length_fd: exact on linear maps, a^2 on constants, tiny net vs dense jacobian") {
    std::mt19937 rng(4);
    std::normal_distribution<double> nd;
    const int n_out = 10, n_in = 5;
    std::vector<double> A(std::size_t(n_out) * n_in), z(n_in), y(n_out);
    for (double& v : A) v = nd(rng);
    for (double& v : z) v = nd(rng);
    for (double& v : y) v = nd(rng);

    VectorFn linear = [&](std::span<const double> p) {
        std::vector<double> out(std::size_t(n_out), 0.0);
        for (int r = 0; r < n_out; ++r)
            for (int c = 0; c < n_in; ++c) out[std::size_t(r)] += A[std::size_t(r) * n_in + c] * p[std::size_t(c)];
        return out;
    };
    // J^T y = A^T y
    double norm2 = 0;
    for (int c = 0; c < n_in; ++c) {
        double dot = 0;
        for (int r = 0; r < n_out; ++r) dot += A[std::size_t(r) * n_in + c] * y[std::size_t(r)];
        norm2 += dot * dot;
    }
    double aval = 0.7;
    double expect = (std::sqrt(norm2) - aval) * (std::sqrt(norm2) - aval);
    CHECK(path_length_fd(linear, z, y, aval, 1e-3) == doctest::Approx(expect).epsilon(1e-8));

    VectorFn constant = [&](std::span<const double>) { return std::vector<double>(std::size_t(n_out), 1.0); };
    CHECK(path_length_fd(constant, z, y, aval, 1e-3) == doctest::Approx(aval * aval).epsilon(1e-12));

    // two-layer tanh net; oracle builds the dense jacobian by per-output FD
    std::vector<double> W1(std::size_t(6) * n_in), W2(std::size_t(n_out) * 6);
    for (double& v : W1) v = nd(rng) * 0.5;
    for (double& v : W2) v = nd(rng) * 0.5;
    VectorFn net = [&](std::span<const double> p) {
        std::vector<double> h(6, 0.0), out(std::size_t(n_out), 0.0);
        for (int r = 0; r < 6; ++r) {
            for (int c = 0; c < n_in; ++c) h[std::size_t(r)] += W1[std::size_t(r) * n_in + c] * p[std::size_t(c)];
            h[std::size_t(r)] = std::tanh(h[std::size_t(r)]);
        }
        for (int r = 0; r < n_out; ++r)
            for (int c = 0; c < 6; ++c) out[std::size_t(r)] += W2[std::size_t(r) * 6 + c] * h[std::size_t(c)];
        return out;
    };
    const double h = 1e-3;
    std::vector<double> J(std::size_t(n_out) * n_in);
    std::vector<double> zp(z);
    for (int c = 0; c < n_in; ++c) {
        zp[std::size_t(c)] = z[std::size_t(c)] + h;
        auto up = net(zp);
        zp[std::size_t(c)] = z[std::size_t(c)] - h;
        auto dn = net(zp);
        zp[std::size_t(c)] = z[std::size_t(c)];
        for (int r = 0; r < n_out; ++r) J[std::size_t(r) * n_in + c] = (up[std::size_t(r)] - dn[std::size_t(r)]) / (2 * h);
    }
    double jn2 = 0;
    for (int c = 0; c < n_in; ++c) {
        double dot = 0;
        for (int r = 0; r < n_out; ++r) dot += J[std::size_t(r) * n_in + c] * y[std::size_t(r)];
        jn2 += dot * dot;
    }
    double oracle = (std::sqrt(jn2) - aval) * (std::sqrt(jn2) - aval);
    CHECK(path_length_fd(net, z, y, aval, h) == doctest::Approx(oracle).epsilon(1e-3));
}

TEST_CASE("total_objectives: paper weights and linearity") {
    LossWeights w;  // defaults: ar=1, div=1, r1=10, path=2
    ObjectiveComponents zero;
    TotalObjectives t0 = total_objectives(zero, w);
    CHECK(t0.d_total == 0.0);
    CHECK(t0.g_total == 0.0);

    ObjectiveComponents unit{{1.0, 1.0}, 1.0, 1.0, 1.0, 1.0};
    TotalObjectives t1 = total_objectives(unit, w);
    CHECK(t1.d_total == 12.0);  // 1 + 1 + 10
    CHECK(t1.g_total == 5.0);   // 1 + 1 + 1 + 2

    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ud(-2, 2);
    ObjectiveComponents c{{ud(rng), ud(rng)}, ud(rng), ud(rng), ud(rng), ud(rng)};
    TotalObjectives t = total_objectives(c, w);
    CHECK(t.d_total == c.adv.d_loss + w.ar * c.l_ar + w.r1 * c.l_r1);
    CHECK(t.g_total == c.adv.g_loss + w.ar * c.l_ar + w.div * c.l_div + w.path * c.l_path);

    // linear in each component
    ObjectiveComponents c2 = c;
    c2.l_r1 += 0.25;
    CHECK(total_objectives(c2, w).d_total == doctest::Approx(t.d_total + 10.0 * 0.25).epsilon(1e-12));
}

TEST_CASE("real_vertical_target maps rows onto tanh's range") {
    CHECK(real_vertical_target(0, 197) == -1.0);
    CHECK(real_vertical_target(196, 197) == 1.0);
    CHECK(real_vertical_target(98, 197) == 0.0);
    CHECK_THROWS_AS(real_vertical_target(0, 1), Error);
}

TEST_CASE("forward_discriminator: zero weights, ladder shape, thread determinism") {
    EngineConfig cfg = test_preset();
    WeightSet zero = init_weights(cfg, 1);
    for (Param& p : zero.params) std::fill(p.values.begin(), p.values.end(), 0.0f);
    Tensor x(3, 11, 11);
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] = float(i % 7) - 3.0f;
    DiscriminatorScores s = forward_discriminator(x, cfg, zero);
    CHECK(s.realness == 0.0);
    CHECK(s.c_hat_y == 0.0);

    CHECK(discriminator_size_chain(cfg) == std::vector<int>{11, 5, 3, 1});
    CHECK(discriminator_size_chain(full_preset()) == std::vector<int>{101, 50, 24, 11, 5, 3, 1});

    WeightSet ws = init_weights(cfg, 2);
    DiscriminatorScores base = forward_discriminator(x, cfg, ws);
    std::vector<DiscriminatorScores> results(4);
    std::vector<std::thread> ts;
    for (int i = 0; i < 4; ++i)
        ts.emplace_back([&, i] { results[std::size_t(i)] = forward_discriminator(x, cfg, ws); });
    for (auto& t : ts) t.join();
    for (const auto& r : results) {
        CHECK(r.realness == base.realness);
        CHECK(r.c_hat_y == base.c_hat_y);
    }

    Tensor bad(3, 7, 7);
    CHECK_THROWS_AS(forward_discriminator(bad, cfg, ws), Error);
}
