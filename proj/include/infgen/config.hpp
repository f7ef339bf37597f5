#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "infgen/tensor.hpp"

namespace infgen {

struct CoordConfig {
    long long period = 64;  // horizontal repeat length, in z_l columns
    double v_scale = 8.0;   // vertical tanh scale, in z_l rows
};

struct FieldConfig {
    int d_zg = 512;
    int d_zl = 64;
};

struct StructureConfig {
    int layers = 4;
    int unfold_k = 3;
    int hidden = 256;  // channel width of every structure layer, and of z_S
};

struct TextureConfig {
    int up_blocks = 4;
    int convs_per_block = 2;
    std::vector<int> channels = {256, 128, 64, 32};  // output channels per block
    int z_s_size = 11;                               // z_S side for the standard patch
};

struct MappingConfig {
    int depth = 2;   // hidden layers
    int width = 128;
};

struct DiscriminatorConfig {
    std::vector<int> channels;
    std::vector<int> kernels;
    std::vector<int> strides;
};

struct LossWeights {
    double ar = 1.0;
    double div = 1.0;
    double r1 = 10.0;
    double path = 2.0;
};

struct EngineConfig {
    std::string preset;  // "full", "test", or "" for hand-written configs
    CoordConfig coord;
    FieldConfig fields;
    StructureConfig structure;
    TextureConfig texture;
    MappingConfig mapping;
    DiscriminatorConfig disc;
    LossWeights loss;
};

// --- size calculus ----------------------------------------------------------

// z_l rows/cols consumed by the structure stack.
inline int structure_margin(const StructureConfig& s) { return s.layers * (s.unfold_k - 1); }

// One texture up-block: stride-2 transposed conv (2n+1), blur (-2), then
// convs_per_block valid 3x3 convs (-2 each).
inline int texture_block_out(const TextureConfig& t, int in) { return 2 * in - 1 - 2 * t.convs_per_block; }

inline std::vector<int> texture_size_chain(const TextureConfig& t, int z_s) {
    std::vector<int> chain{z_s};
    int s = z_s;
    for (int b = 0; b < t.up_blocks; ++b) {
        s = texture_block_out(t, s);
        chain.push_back(s);
    }
    return chain;
}

inline int texture_forward_size(const TextureConfig& t, int z_s) { return texture_size_chain(t, z_s).back(); }

// Inverts the block recurrence. Throws with the two nearest achievable sizes
// when the requested output cannot be produced.
inline int backward_shape(const TextureConfig& t, int output_size) {
    auto fail = [&](const std::string& why) {
        // Smallest z_S that clears every intermediate op is 3 (blur needs 3x3)
        // unless a conv chain shrinks below 1 first.
        int lo = 1;
        while (lo < output_size) {
            int v = texture_forward_size(t, lo + 2);
            if (v >= output_size) break;
            lo += 2;
        }
        int below = texture_forward_size(t, lo);
        int above = texture_forward_size(t, lo + 2);
        throw Error(Errc::invalid_argument, "backward_shape: output size " + std::to_string(output_size) + " " +
                                                why + "; nearest achievable sizes are " + std::to_string(below) +
                                                " and " + std::to_string(above));
    };
    if (output_size < 1) throw Error(Errc::invalid_argument, "backward_shape: output size must be >= 1");
    long long s = output_size;
    for (int b = 0; b < t.up_blocks; ++b) {
        long long pre = s + 1 + 2 * t.convs_per_block;
        if (pre % 2 != 0) fail("is not reachable (parity violation)");
        s = pre / 2;
        if (s < 1) fail("is not reachable (chain shrinks below 1)");
    }
    if (s % 2 == 0) fail("requires an even z_S (center alignment needs odd sizes)");
    // Round trip must land exactly: intermediate sizes must stay >= kernel.
    if (texture_forward_size(t, static_cast<int>(s)) != output_size) fail("is not reachable");
    return static_cast<int>(s);
}

inline int texture_stride(const TextureConfig& t) { return 1 << t.up_blocks; }

inline int patch_size(const EngineConfig& cfg) {
    return texture_forward_size(cfg.texture, cfg.texture.z_s_size);
}

inline int zl_window_size(const EngineConfig& cfg) {
    return cfg.texture.z_s_size + structure_margin(cfg.structure);
}

// --- pipeline description ---------------------------------------------------
//
// A flat, execution-ordered list of stages from the z_l window to the RGB
// patch, annotated with the lattice transform of each stage's output:
// origin = scale * z + offset, where z is the z_l-window origin. The planner
// uses the transforms to address per-layer noise fields; the style fusion
// code uses them to resample the assignment map.

enum class StageKind {
    unfold,
    structure_conv,
    tconv,
    blur,
    conv,
    to_rgb,
};

struct Stage {
    StageKind kind;
    int kernel = 1;
    int in_ch = 0;
    int out_ch = 0;
    long long scale = 1;
    long long offset = 0;
    int out_size = 0;        // spatial side for the standard z_l window
    int noise_site = -1;     // contiguous id when noise is injected after this stage
    int style_offset = -1;   // slice start in the mapping output, when modulated
    bool demodulate = false;
    bool activate = false;   // leaky relu after this stage's post-ops
    std::string name;        // parameter prefix, e.g. "gs.l0", "gt.b1.c0"
};

struct Pipeline {
    std::vector<Stage> stages;
    int noise_sites = 0;
    int style_dim = 0;
    int zl_window = 0;
    int z_s_size = 0;
    int patch = 0;
    int stride = 0;
    long long out_scale = 1;
    long long out_offset = 0;  // raw-lattice origin of the patch; the user
                               // output frame is anchored so this cancels
    int first_texture_stage = 0;
};

// A stride-2 transposed conv computes partial sums at the first and last
// output pixel of a window (the outside neighbor's tap is missing), and that
// window dependence grows to exactly stride-1 output pixels per side through
// the block stack. Jobs therefore read one extra z_l lattice unit per side
// and crop stride pixels per side of the raw patch, which removes every
// window-dependent pixel while keeping the nominal size chain intact.
constexpr int kOverscanZl = 1;

// Stage output side when the z_l window is widened by kOverscanZl per side.
inline int phys_out_size(const Stage& s) { return s.out_size + 2 * kOverscanZl * static_cast<int>(s.scale); }

inline Pipeline build_pipeline(const EngineConfig& cfg) {
    const auto& st = cfg.structure;
    const auto& tx = cfg.texture;
    if (static_cast<int>(tx.channels.size()) != tx.up_blocks)
        throw Error(Errc::invalid_argument, "config: texture.channels must list one width per up block");
    if (st.unfold_k % 2 == 0) throw Error(Errc::invalid_argument, "config: unfold_k must be odd");

    Pipeline p;
    p.zl_window = zl_window_size(cfg);
    p.z_s_size = tx.z_s_size;
    p.stride = texture_stride(tx);

    long long scale = 1, offset = 0;
    int size = p.zl_window;
    int ch = cfg.fields.d_zl + 3;
    int style_at = 0;
    int noise_at = 0;

    auto push = [&](Stage s) {
        s.scale = scale;
        s.offset = offset;
        s.out_size = size;
        p.stages.push_back(std::move(s));
    };

    for (int i = 0; i < st.layers; ++i) {
        std::string name = "gs.l" + std::to_string(i);
        offset += (st.unfold_k - 1) / 2;
        size -= st.unfold_k - 1;
        push({.kind = StageKind::unfold, .kernel = st.unfold_k, .in_ch = ch, .out_ch = ch * st.unfold_k * st.unfold_k});
        ch *= st.unfold_k * st.unfold_k;
        Stage conv{.kind = StageKind::structure_conv, .kernel = 1, .in_ch = ch, .out_ch = st.hidden,
                   .style_offset = style_at, .demodulate = true, .activate = true, .name = name};
        style_at += ch;
        push(conv);
        ch = st.hidden;
    }
    if (size != tx.z_s_size)
        throw Error(Errc::invalid_argument, "config: z_l window " + std::to_string(p.zl_window) +
                                                " does not reduce to z_S " + std::to_string(tx.z_s_size));

    p.first_texture_stage = static_cast<int>(p.stages.size());
    for (int b = 0; b < tx.up_blocks; ++b) {
        std::string bname = "gt.b" + std::to_string(b);
        int out_ch = tx.channels[b];
        scale *= 2;
        offset *= 2;
        size = 2 * size + 1;
        push({.kind = StageKind::tconv, .kernel = 3, .in_ch = ch, .out_ch = out_ch,
              .style_offset = style_at, .demodulate = true, .name = bname + ".up"});
        style_at += ch;
        ch = out_ch;
        offset += 1;
        size -= 2;
        // The up path's noise/bias/activation land after its blur.
        push({.kind = StageKind::blur, .kernel = 3, .in_ch = ch, .out_ch = ch, .noise_site = noise_at++,
              .activate = true, .name = bname + ".up"});
        for (int j = 0; j < tx.convs_per_block; ++j) {
            offset += 1;
            size -= 2;
            push({.kind = StageKind::conv, .kernel = 3, .in_ch = ch, .out_ch = ch, .noise_site = noise_at++,
                  .style_offset = style_at, .demodulate = true, .activate = true,
                  .name = bname + ".c" + std::to_string(j)});
            style_at += ch;
        }
    }
    push({.kind = StageKind::to_rgb, .kernel = 1, .in_ch = ch, .out_ch = 3, .style_offset = style_at,
          .demodulate = false, .name = "gt.torgb"});
    style_at += ch;

    p.noise_sites = noise_at;
    p.style_dim = style_at;
    p.patch = size;
    p.out_scale = scale;
    p.out_offset = offset;
    if (p.patch != patch_size(cfg))
        throw Error(Errc::invalid_argument, "config: inconsistent patch size");
    return p;
}

// --- validation ---------------------------------------------------------

inline void validate(const EngineConfig& cfg) {
    const auto& tx = cfg.texture;
    if (tx.up_blocks < 1) throw Error(Errc::invalid_argument, "config: need at least one up block");
    if (cfg.structure.layers < 1) throw Error(Errc::invalid_argument, "config: need at least one structure layer");
    if (cfg.fields.d_zg < 1 || cfg.fields.d_zl < 1)
        throw Error(Errc::invalid_argument, "config: latent dims must be >= 1");
    if (tx.z_s_size % 2 == 0) throw Error(Errc::invalid_argument, "config: z_S size must be odd");

    int patch = patch_size(cfg);
    if (backward_shape(tx, patch) != tx.z_s_size)
        throw Error(Errc::invalid_argument, "config: patch/z_S chain does not invert");
    int win = zl_window_size(cfg);
    if (win != backward_shape(tx, patch) + structure_margin(cfg.structure))
        throw Error(Errc::invalid_argument, "config: z_l window inconsistent");
    if (win % 2 == 0) throw Error(Errc::invalid_argument, "config: z_l window must be odd");
    for (int s : texture_size_chain(tx, tx.z_s_size))
        if (s % 2 == 0 || s < 1)
            throw Error(Errc::invalid_argument, "config: intermediate size " + std::to_string(s) +
                                                    " is not odd and positive");
    int stride = texture_stride(tx);
    int pitch = (patch / stride) * stride;
    if (pitch <= 0 || pitch % stride != 0)
        throw Error(Errc::invalid_argument, "config: patch pitch must be a positive multiple of the stride");

    const auto& d = cfg.disc;
    if (d.channels.size() != d.kernels.size() || d.channels.size() != d.strides.size())
        throw Error(Errc::invalid_argument, "config: discriminator spec lists must share length");
    int s = patch;
    for (std::size_t i = 0; i < d.channels.size(); ++i) {
        if (d.kernels[i] % 2 == 0) throw Error(Errc::invalid_argument, "config: discriminator kernels must be odd");
        if (s < d.kernels[i]) throw Error(Errc::invalid_argument, "config: discriminator ladder underflows");
        s = (s - d.kernels[i]) / d.strides[i] + 1;
    }
    if (!d.channels.empty() && s != 1)
        throw Error(Errc::invalid_argument, "config: discriminator ladder must end at 1x1, got " +
                                                std::to_string(s));
    build_pipeline(cfg);  // throws on any remaining inconsistency
}

// Spatial sizes of the discriminator trunk, input included.
inline std::vector<int> discriminator_size_chain(const EngineConfig& cfg) {
    std::vector<int> chain{patch_size(cfg)};
    int s = chain[0];
    for (std::size_t i = 0; i < cfg.disc.channels.size(); ++i) {
        s = (s - cfg.disc.kernels[i]) / cfg.disc.strides[i] + 1;
        chain.push_back(s);
    }
    return chain;
}

// --- presets ------------------------------------------------------------

inline EngineConfig test_preset() {
    EngineConfig c;
    c.preset = "test";
    c.coord = {64, 8.0};
    c.fields = {16, 4};
    c.structure = {2, 3, 8};
    c.texture = {2, 1, {8, 8}, 5};
    c.mapping = {1, 16};
    c.disc = {{8, 16, 16}, {3, 3, 3}, {2, 1, 1}};
    return c;
}

inline EngineConfig full_preset() {
    EngineConfig c;
    c.preset = "full";
    c.coord = {64, 8.0};
    c.fields = {512, 64};
    c.structure = {4, 3, 256};
    c.texture = {4, 2, {256, 128, 64, 32}, 11};
    c.mapping = {2, 128};
    c.disc = {{32, 64, 128, 256, 256, 256}, {3, 3, 3, 3, 3, 3}, {2, 2, 2, 2, 1, 1}};
    return c;
}

// --- JSON ----------------------------------------------------------------

using json = nlohmann::ordered_json;

inline json to_json(const EngineConfig& c) {
    json j;
    if (!c.preset.empty()) j["preset"] = c.preset;
    j["coord"] = {{"period", c.coord.period}, {"v_scale", c.coord.v_scale}};
    j["fields"] = {{"d_zg", c.fields.d_zg}, {"d_zl", c.fields.d_zl}};
    j["structure"] = {{"layers", c.structure.layers}, {"unfold_k", c.structure.unfold_k}, {"hidden", c.structure.hidden}};
    j["texture"] = {{"up_blocks", c.texture.up_blocks},
                    {"convs_per_block", c.texture.convs_per_block},
                    {"channels", c.texture.channels},
                    {"z_s_size", c.texture.z_s_size}};
    j["mapping"] = {{"depth", c.mapping.depth}, {"width", c.mapping.width}};
    j["discriminator"] = {{"channels", c.disc.channels}, {"kernels", c.disc.kernels}, {"strides", c.disc.strides}};
    j["loss_weights"] = {{"ar", c.loss.ar}, {"div", c.loss.div}, {"r1", c.loss.r1}, {"path", c.loss.path}};
    return j;
}

inline EngineConfig config_from_json(const json& j) {
    EngineConfig c;
    if (j.contains("preset")) {
        std::string p = j.at("preset").get<std::string>();
        if (p == "test")
            c = test_preset();
        else if (p == "full")
            c = full_preset();
        else
            throw Error(Errc::invalid_argument, "config: unknown preset '" + p + "'");
    }
    auto get = [&](const char* sec, const char* key, auto& out) {
        if (j.contains(sec) && j.at(sec).contains(key)) j.at(sec).at(key).get_to(out);
    };
    get("coord", "period", c.coord.period);
    get("coord", "v_scale", c.coord.v_scale);
    get("fields", "d_zg", c.fields.d_zg);
    get("fields", "d_zl", c.fields.d_zl);
    get("structure", "layers", c.structure.layers);
    get("structure", "unfold_k", c.structure.unfold_k);
    get("structure", "hidden", c.structure.hidden);
    get("texture", "up_blocks", c.texture.up_blocks);
    get("texture", "convs_per_block", c.texture.convs_per_block);
    get("texture", "channels", c.texture.channels);
    get("texture", "z_s_size", c.texture.z_s_size);
    get("mapping", "depth", c.mapping.depth);
    get("mapping", "width", c.mapping.width);
    get("discriminator", "channels", c.disc.channels);
    get("discriminator", "kernels", c.disc.kernels);
    get("discriminator", "strides", c.disc.strides);
    get("loss_weights", "ar", c.loss.ar);
    get("loss_weights", "div", c.loss.div);
    get("loss_weights", "r1", c.loss.r1);
    get("loss_weights", "path", c.loss.path);
    validate(c);
    return c;
}

}  // namespace infgen
