#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "infgen/config.hpp"
#include "infgen/styles.hpp"
#include "infgen/weights.hpp"

using namespace infgen;

TEST_CASE("full preset reproduces the training geometry") {
    EngineConfig cfg = full_preset();
    validate(cfg);
    CHECK(patch_size(cfg) == 101);
    CHECK(cfg.texture.z_s_size == 11);
    CHECK(zl_window_size(cfg) == 19);
    CHECK(texture_stride(cfg.texture) == 16);
    CHECK(texture_size_chain(cfg.texture, 11) == std::vector<int>{11, 17, 29, 53, 101});
    // stacking one more up block on a 101 patch gives the next resolution
    CHECK(texture_block_out(cfg.texture, 101) == 197);
}

TEST_CASE("test preset chain") {
    EngineConfig cfg = test_preset();
    validate(cfg);
    CHECK(patch_size(cfg) == 11);
    CHECK(zl_window_size(cfg) == 9);
    CHECK(texture_stride(cfg.texture) == 4);
    CHECK(texture_size_chain(cfg.texture, 5) == std::vector<int>{5, 7, 11});
}

TEST_CASE("backward_shape inverts the block recurrence") {
    CHECK(backward_shape(full_preset().texture, 101) == 11);
    CHECK(backward_shape(test_preset().texture, 11) == 5);
    CHECK(backward_shape(full_preset().texture, 197) == 17);  // four blocks invert 197 all the way down

    // 100 is a parity violation; the error names the achievable neighbors
    try {
        backward_shape(full_preset().texture, 100);
        FAIL("expected an error");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find("101") != std::string::npos);
        CHECK(msg.find("69") != std::string::npos);
        CHECK(e.code() == Errc::invalid_argument);
    }
}

TEST_CASE("config json round trip is identity") {
    for (const EngineConfig& cfg : {test_preset(), full_preset()}) {
        json j1 = to_json(cfg);
        EngineConfig parsed = config_from_json(j1);
        json j2 = to_json(parsed);
        CHECK(j1 == j2);
    }
    // loss weight defaults
    CHECK(test_preset().loss.ar == 1.0);
    CHECK(test_preset().loss.div == 1.0);
    CHECK(test_preset().loss.r1 == 10.0);
    CHECK(test_preset().loss.path == 2.0);
}

TEST_CASE("pipeline stages carry the lattice transforms") {
    EngineConfig cfg = test_preset();
    Pipeline p = build_pipeline(cfg);
    CHECK(p.patch == 11);
    CHECK(p.stride == 4);
    CHECK(p.noise_sites == 4);  // two blocks, one up path + one conv each
    CHECK(p.style_dim == 175);
    CHECK(p.out_scale == 4);
    CHECK(p.out_offset == 14);

    // spot-check transforms against a hand walk
    const Stage& torgb = p.stages.back();
    CHECK(torgb.kind == StageKind::to_rgb);
    CHECK(torgb.scale == 4);
    CHECK(torgb.offset == 14);
    const Stage& first_unfold = p.stages.front();
    CHECK(first_unfold.kind == StageKind::unfold);
    CHECK(first_unfold.scale == 1);
    CHECK(first_unfold.offset == 1);

    // sizes for the standard window
    std::vector<int> sizes;
    for (const Stage& s : p.stages) sizes.push_back(s.out_size);
    CHECK(sizes == std::vector<int>{7, 7, 5, 5, 11, 9, 7, 15, 13, 11, 11});
}

TEST_CASE("invalid configs are rejected") {
    EngineConfig cfg = test_preset();
    cfg.texture.z_s_size = 4;
    CHECK_THROWS_AS(validate(cfg), Error);

    cfg = test_preset();
    cfg.texture.channels = {8};
    CHECK_THROWS_AS(validate(cfg), Error);

    cfg = test_preset();
    cfg.disc.strides = {1, 1, 1};  // ladder no longer ends at 1x1
    CHECK_THROWS_AS(validate(cfg), Error);
}

TEST_CASE("init_weights: determinism and layer statistics") {
    EngineConfig cfg = test_preset();
    WeightSet a = init_weights(cfg, 42);
    WeightSet b = init_weights(cfg, 42);
    WeightSet c = init_weights(cfg, 43);
    CHECK(serialize_weights(a) == serialize_weights(b));
    CHECK(serialize_weights(a) != serialize_weights(c));

    // noise scales start disabled; the style projection bias starts at one
    for (const Param& p : a.params) {
        if (p.name.ends_with(".noise"))
            for (float v : p.values) CHECK(v == 0.0f);
        if (p.name == "map.out.bias")
            for (float v : p.values) CHECK(v == 1.0f);
    }

    // empirical std within 10% of 1/sqrt(fan_in) on big layers
    EngineConfig full = full_preset();
    WeightSet fw = init_weights(full, 7);
    int checked = 0;
    for (const Param& p : fw.params) {
        if (!p.name.ends_with(".weight") || p.count() < 10000) continue;
        std::size_t fan_in = 1;
        for (std::size_t i = 1; i < p.dims.size(); ++i) fan_in *= p.dims[i];
        double mean = 0, var = 0;
        for (float v : p.values) mean += v;
        mean /= double(p.count());
        for (float v : p.values) var += (v - mean) * (v - mean);
        double sd = std::sqrt(var / double(p.count()));
        double expect = 1.0 / std::sqrt(double(fan_in));
        CHECK(sd == doctest::Approx(expect).epsilon(0.10));
        ++checked;
    }
    CHECK(checked >= 5);
}

TEST_CASE("weight file round trip and corruption errors") {
    EngineConfig cfg = test_preset();
    WeightSet ws = init_weights(cfg, 11);
    const std::string path = "roundtrip.ifgw";
    save_weights(ws, path);
    WeightSet loaded = load_weights(path, cfg);
    CHECK(serialize_weights(loaded) == serialize_weights(ws));
    save_weights(loaded, path + "2");
    std::ifstream f1(path, std::ios::binary), f2(path + "2", std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    // truncation
    {
        std::ofstream t("truncated.ifgw", std::ios::binary);
        t.write(b1.data(), static_cast<std::streamsize>(b1.size() / 2));
    }
    try {
        load_weights("truncated.ifgw", cfg);
        FAIL("expected truncation error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::corrupt_file);
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }

    // bad magic
    {
        std::string bad = b1;
        bad[0] = 'X';
        std::ofstream t("badmagic.ifgw", std::ios::binary);
        t.write(bad.data(), static_cast<std::streamsize>(bad.size()));
    }
    CHECK_THROWS_AS(load_weights("badmagic.ifgw", cfg), Error);

    // wrong config names the first offending entry
    EngineConfig other = test_preset();
    other.structure.hidden = 12;
    other.texture.channels = {12, 12};
    try {
        load_weights(path, other);
        FAIL("expected shape mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::shape_mismatch);
        CHECK(std::string(e.what()).find("map.") != std::string::npos);
    }

    CHECK_THROWS_AS(load_weights("missing_file.ifgw", cfg), Error);
    std::remove(path.c_str());
    std::remove((path + "2").c_str());
    std::remove("truncated.ifgw");
    std::remove("badmagic.ifgw");
}

TEST_CASE("mapping_forward produces the concatenated style vector") {
    EngineConfig cfg = test_preset();
    WeightSet ws = init_weights(cfg, 3);
    Pipeline p = build_pipeline(cfg);
    auto z_g = sample_global(5, cfg.fields.d_zg);
    auto styles = mapping_forward(cfg, ws, z_g);
    CHECK(int(styles.size()) == p.style_dim);
    auto again = mapping_forward(cfg, ws, z_g);
    CHECK(styles == again);

    std::vector<float> wrong(cfg.fields.d_zg + 1, 0.0f);
    CHECK_THROWS_AS(mapping_forward(cfg, ws, wrong), Error);
}
