#include <doctest.h>

#include <vector>

#include <array>

#include "infgen/planner.hpp"

using namespace infgen;

TEST_CASE("plan_region: one aligned patch is one job") {
    EngineConfig cfg = test_preset();
    TilePlan plan = plan_region({8, -16, 11, 11}, cfg);
    CHECK(plan.jobs.size() == 1);
    CHECK(plan.pitch == 8);
    CHECK(plan.stride == 4);
    const TileJob& j = plan.jobs[0];
    CHECK(j.out_rect.y == 0);
    CHECK(j.out_rect.x == 0);
    CHECK(j.out_rect.h == 11);
    CHECK(j.out_rect.w == 11);
    // the only crop is the one-lattice-unit overscan rim
    CHECK(j.crop_top == plan.stride);
    CHECK(j.crop_left == plan.stride);
    CHECK(j.zl_origin.iy == 8 / 4 - 1);
    CHECK(j.zl_size == zl_window_size(cfg) + 2);
}

TEST_CASE("plan_region: 1024x1024 full preset takes 121 jobs") {
    EngineConfig cfg = full_preset();
    TilePlan plan = plan_region({0, 0, 1024, 1024}, cfg);
    CHECK(plan.pitch == 96);
    CHECK(plan.jobs_y == 11);
    CHECK(plan.jobs_x == 11);
    CHECK(plan.jobs.size() == 121);
}

namespace {

void check_exact_coverage(const TilePlan& plan, int h, int w) {
    std::vector<int> hits(std::size_t(h) * w, 0);
    for (const TileJob& j : plan.jobs) {
        REQUIRE(j.out_rect.h > 0);
        REQUIRE(j.out_rect.w > 0);
        for (int y = 0; y < j.out_rect.h; ++y)
            for (int x = 0; x < j.out_rect.w; ++x) {
                int yy = j.out_rect.y + y, xx = j.out_rect.x + x;
                REQUIRE(yy >= 0);
                REQUIRE(yy < h);
                REQUIRE(xx >= 0);
                REQUIRE(xx < w);
                hits[std::size_t(yy) * w + xx]++;
            }
    }
    for (int v : hits) CHECK(v == 1);
}

}  // namespace

TEST_CASE("plan_region: 22x22 test region covers every pixel exactly once") {
    EngineConfig cfg = test_preset();
    TilePlan plan = plan_region({0, 0, 22, 22}, cfg);
    CHECK(plan.jobs_y == 3);
    CHECK(plan.jobs_x == 3);
    CHECK(plan.jobs.size() == 9);
    check_exact_coverage(plan, 22, 22);
}

TEST_CASE("plan_region: coverage holds for unaligned and negative origins") {
    EngineConfig cfg = test_preset();
    for (auto [y, x, h, w] : std::vector<std::array<long long, 4>>{
             {3, -7, 30, 17}, {-100, 999, 13, 45}, {1, 1, 1, 1}, {-3, -3, 6, 6}, {5, 2, 40, 8}}) {
        TilePlan plan = plan_region({y, x, int(h), int(w)}, cfg);
        check_exact_coverage(plan, int(h), int(w));
        // every job's patch must fully contain its owned rect
        for (const TileJob& j : plan.jobs) {
            const int raw = plan.patch + 2 * plan.stride;
            CHECK(j.crop_top >= 0);
            CHECK(j.crop_left >= 0);
            CHECK(j.crop_top + j.out_rect.h <= raw);
            CHECK(j.crop_left + j.out_rect.w <= raw);
        }
    }
    CHECK_THROWS_AS(plan_region({0, 0, 0, 5}, cfg), Error);
}

TEST_CASE("plan_region: pitch is a multiple of the stride") {
    for (const EngineConfig& cfg : {test_preset(), full_preset()}) {
        TilePlan plan = plan_region({0, 0, 64, 64}, cfg);
        CHECK(plan.pitch % plan.stride == 0);
        CHECK(plan.pitch == (plan.patch / plan.stride) * plan.stride);
    }
}

TEST_CASE("layer_offsets: affine in the window origin") {
    EngineConfig cfg = test_preset();
    Pipeline p = build_pipeline(cfg);
    auto at0 = layer_offsets(p, {0, 0});
    for (std::size_t i = 0; i < p.stages.size(); ++i) {
        CHECK(at0[i].iy == p.stages[i].offset);
        CHECK(at0[i].ix == p.stages[i].offset);
    }
    auto at1 = layer_offsets(p, {1, 0});
    for (std::size_t i = 0; i < p.stages.size(); ++i) {
        CHECK(at1[i].iy - at0[i].iy == p.stages[i].scale);  // 2^(tconvs so far)
        CHECK(at1[i].ix == at0[i].ix);
    }
    // scales double exactly at each tconv
    long long expect = 1;
    for (const Stage& s : p.stages) {
        if (s.kind == StageKind::tconv) expect *= 2;
        CHECK(s.scale == expect);
    }
}

TEST_CASE("adjacent jobs address identical noise cells for shared pixels") {
    EngineConfig cfg = test_preset();
    TilePlan plan = plan_region({0, 0, 19, 11}, cfg);  // two jobs stacked vertically
    REQUIRE(plan.jobs_y >= 2);
    const TileJob& a = plan.jobs[0];
    const TileJob& b = plan.jobs[std::size_t(plan.jobs_x)];
    Pipeline p = build_pipeline(cfg);
    int site = 0;
    for (const Stage& st : p.stages) {
        if (st.noise_site < 0) continue;
        const NoiseWindow& na = a.noise[std::size_t(site)];
        const NoiseWindow& nb = b.noise[std::size_t(site)];
        // same affine image of the two origins: difference is scale * dz
        long long dz = b.zl_origin.iy - a.zl_origin.iy;
        CHECK(nb.origin.iy - na.origin.iy == st.scale * dz);
        CHECK(nb.origin.ix == na.origin.ix);
        // windows overlap, so shared global rows exist
        CHECK(nb.origin.iy < na.origin.iy + na.h);
        ++site;
    }
    CHECK(site == p.noise_sites);
}

TEST_CASE("memory_bound: a function of the config only, matching the shape chain") {
    EngineConfig cfg = test_preset();
    CHECK(memory_bound(cfg) == memory_bound(cfg));

    // independent walk over the physical (overscanned) shape chain
    Pipeline p = build_pipeline(cfg);
    std::size_t max_act = std::size_t(cfg.fields.d_zl + 3) * (p.zl_window + 2) * (p.zl_window + 2);
    std::size_t max_noise = 0;
    for (const Stage& s : p.stages) {
        std::size_t side = std::size_t(s.out_size) + 2 * std::size_t(s.scale);
        max_act = std::max(max_act, std::size_t(s.out_ch) * side * side);
        if (s.noise_site >= 0) max_noise = std::max(max_noise, side * side);
    }
    CHECK(memory_bound(cfg) == (2 * max_act + max_noise) * sizeof(float));
}

TEST_CASE("plan json lists jobs with placement and noise windows") {
    EngineConfig cfg = test_preset();
    TilePlan plan = plan_region({0, 0, 22, 22}, cfg);
    json j = plan_to_json(plan);
    CHECK(j["jobs_y"] == 3);
    CHECK(j["jobs"].size() == 9);
    CHECK(j["jobs"][0].contains("noise_windows"));
    CHECK(j["jobs"][0]["noise_windows"].size() == 4);
}
