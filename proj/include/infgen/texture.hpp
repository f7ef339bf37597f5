#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "infgen/kernels.hpp"
#include "infgen/styles.hpp"
#include "infgen/weights.hpp"

// Texture synthesizer: stacked up-blocks of stride-2 transposed conv, blur,
// and valid 3x3 convs, all style-modulated, with per-site noise injection and
// a final 1x1 toRGB. No padding anywhere, so the output is a translation-
// equivariant function of z_S and patches can be composed exactly.

namespace infgen {

// Per-stage weight views resolved against a WeightSet, parallel to
// Pipeline::stages. Resolve once per render; jobs share it read-only.
struct StageWeights {
    ConvWeights weight;  // empty for unfold/blur stages
    std::span<const float> bias;
    std::span<const float> noise_scale;
};

struct ResolvedModel {
    EngineConfig cfg;
    Pipeline pipe;
    std::vector<StageWeights> stages;
};

inline ResolvedModel resolve_model(const EngineConfig& cfg, const WeightSet& ws) {
    ResolvedModel m;
    m.cfg = cfg;
    m.pipe = build_pipeline(cfg);
    m.stages.resize(m.pipe.stages.size());
    for (std::size_t i = 0; i < m.pipe.stages.size(); ++i) {
        const Stage& s = m.pipe.stages[i];
        StageWeights& sw = m.stages[i];
        switch (s.kind) {
            case StageKind::unfold:
                break;
            case StageKind::structure_conv:
            case StageKind::to_rgb:
                sw.weight = as_conv(ws.at(s.name + ".weight"));
                sw.bias = ws.at(s.name + ".bias").values;
                break;
            case StageKind::tconv:
                sw.weight = as_conv(ws.at(s.name + ".weight"));
                break;
            case StageKind::blur:
                sw.bias = ws.at(s.name + ".bias").values;
                sw.noise_scale = ws.at(s.name + ".noise").values;
                break;
            case StageKind::conv:
                sw.weight = as_conv(ws.at(s.name + ".weight"));
                sw.bias = ws.at(s.name + ".bias").values;
                sw.noise_scale = ws.at(s.name + ".noise").values;
                break;
        }
    }
    return m;
}

// Spatial side after each texture stage for an arbitrary z_S input. Throws,
// naming the stage, if any intermediate drops below its kernel.
inline std::vector<int> texture_stage_sizes(const Pipeline& p, int z_s_side) {
    std::vector<int> sizes;
    int s = z_s_side;
    for (std::size_t i = static_cast<std::size_t>(p.first_texture_stage); i < p.stages.size(); ++i) {
        const Stage& st = p.stages[i];
        switch (st.kind) {
            case StageKind::tconv:
                s = 2 * s + 1;
                break;
            case StageKind::blur:
            case StageKind::conv:
                if (s < 3)
                    throw Error(Errc::shape_mismatch,
                                "forward_texture: stage '" + st.name + "' input side " + std::to_string(s) +
                                    " is smaller than its 3x3 kernel");
                s -= 2;
                break;
            case StageKind::to_rgb:
                break;
            default:
                break;
        }
        sizes.push_back(s);
    }
    return sizes;
}

// Fills `out` (already sized) with the noise window for a site, or leaves it
// zero when noise is disabled.
using NoiseFill = std::function<void(int site, int h, int w, Tensor& out)>;

namespace detail {

// Runs the texture stages over a ping-pong workspace. On entry `a` holds z_S;
// on exit `a` holds the tanh RGB patch.
inline void run_texture_pipeline(const ResolvedModel& m, const std::vector<float>& styles,
                                 const NoiseFill& noise_fill, Tensor& a, Tensor& b, Tensor& noise_buf,
                                 std::vector<float>& wscratch) {
    const Pipeline& p = m.pipe;
    texture_stage_sizes(p, a.height);  // validates the chain up front
    for (std::size_t i = static_cast<std::size_t>(p.first_texture_stage); i < p.stages.size(); ++i) {
        const Stage& st = p.stages[i];
        const StageWeights& sw = m.stages[i];
        switch (st.kind) {
            case StageKind::tconv:
                modulated_tconv_into(a, sw.weight, style_slice(styles, st), st.demodulate, b, wscratch);
                std::swap(a, b);
                break;
            case StageKind::blur:
                blur3_into(a, b);
                scale_inplace(b, kUpBlurGain);
                noise_buf.resize(1, b.height, b.width);
                noise_fill(st.noise_site, b.height, b.width, noise_buf);
                add_noise_inplace(b, noise_buf, sw.noise_scale);
                add_bias_inplace(b, sw.bias);
                scaled_leaky_relu_inplace(b, 0.2f);
                std::swap(a, b);
                break;
            case StageKind::conv:
                modulated_conv_into(a, sw.weight, style_slice(styles, st), st.demodulate, b, wscratch);
                noise_buf.resize(1, b.height, b.width);
                noise_fill(st.noise_site, b.height, b.width, noise_buf);
                add_noise_inplace(b, noise_buf, sw.noise_scale);
                add_bias_inplace(b, sw.bias);
                scaled_leaky_relu_inplace(b, 0.2f);
                std::swap(a, b);
                break;
            case StageKind::to_rgb:
                modulated_conv_into(a, sw.weight, style_slice(styles, st), /*demodulate=*/false, b, wscratch);
                add_bias_inplace(b, sw.bias);
                tanh_inplace(b);
                std::swap(a, b);
                break;
            default:
                break;
        }
    }
}

inline NoiseFill noise_from_windows(const Pipeline& p, const std::vector<Tensor>& windows) {
    if (windows.empty())
        return [](int, int, int, Tensor& out) { std::fill(out.data.begin(), out.data.end(), 0.0f); };
    if (static_cast<int>(windows.size()) != p.noise_sites)
        throw Error(Errc::shape_mismatch, "forward_texture: got " + std::to_string(windows.size()) +
                                              " noise windows, pipeline has " + std::to_string(p.noise_sites) +
                                              " sites");
    return [&windows](int site, int h, int w, Tensor& out) {
        const Tensor& n = windows[static_cast<std::size_t>(site)];
        if (n.channels != 1 || n.height != h || n.width != w)
            throw Error(Errc::shape_mismatch, "forward_texture: noise window for site " + std::to_string(site) +
                                                  " is " + std::to_string(n.height) + "x" + std::to_string(n.width) +
                                                  ", expected " + std::to_string(h) + "x" + std::to_string(w));
        out.data.assign(n.data.begin(), n.data.end());
    };
}

}  // namespace detail

// p_c = G_T(z_S, z_g, z_n). Pass an empty noise vector for all-zero noise.
inline Tensor forward_texture(const Tensor& z_s, std::span<const float> z_g,
                              const std::vector<Tensor>& noise_windows, const EngineConfig& cfg,
                              const WeightSet& ws) {
    if (z_s.height != z_s.width || z_s.height % 2 == 0)
        throw Error(Errc::invalid_argument, "forward_texture: z_S must be square and odd-sized, got " +
                                                std::to_string(z_s.height) + "x" + std::to_string(z_s.width));
    ResolvedModel m = resolve_model(cfg, ws);
    if (z_s.channels != cfg.structure.hidden)
        throw Error(Errc::shape_mismatch, "forward_texture: z_S has " + std::to_string(z_s.channels) +
                                              " channels, config expects " + std::to_string(cfg.structure.hidden));
    std::vector<float> styles = mapping_forward(cfg, ws, z_g);
    Tensor a = z_s, b, noise_buf;
    std::vector<float> wscratch;
    detail::run_texture_pipeline(m, styles, detail::noise_from_windows(m.pipe, noise_windows), a, b, noise_buf,
                                 wscratch);
    return a;
}

// --- zero-padded twin -------------------------------------------------------
// The conventional generator used only for differential tests: identical
// weights and stage order, but every spatial op keeps its size by zero
// padding, the way a fixed-canvas generator would.

namespace detail {

inline Tensor zero_pad1(const Tensor& x) {
    Tensor out(x.channels, x.height + 2, x.width + 2);
    for (int c = 0; c < x.channels; ++c)
        for (int y = 0; y < x.height; ++y)
            for (int xx = 0; xx < x.width; ++xx) out.at(c, y + 1, xx + 1) = x.at(c, y, xx);
    return out;
}

// Stride-2 transposed conv with pad 1 and output padding 1: the full scatter
// grid (2n+1) minus its leading row and column, giving out = 2n.
inline Tensor padded_tconv(const Tensor& x, const ConvWeights& w) {
    Tensor full = tconv2d_stride2_valid(x, w);
    Tensor out(full.channels, full.height - 1, full.width - 1);
    for (int c = 0; c < out.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int xx = 0; xx < out.width; ++xx) out.at(c, y, xx) = full.at(c, y + 1, xx + 1);
    return out;
}

}  // namespace detail

inline Tensor forward_texture_padded(const Tensor& z_s, std::span<const float> z_g,
                                     const std::vector<Tensor>& noise_windows, const EngineConfig& cfg,
                                     const WeightSet& ws) {
    ResolvedModel m = resolve_model(cfg, ws);
    if (z_s.channels != cfg.structure.hidden)
        throw Error(Errc::shape_mismatch, "forward_texture_padded: z_S channel mismatch");
    std::vector<float> styles = mapping_forward(cfg, ws, z_g);
    const Pipeline& p = m.pipe;

    std::vector<float> wscratch;
    Tensor a = z_s, b, noise_buf;
    int site_seen = 0;
    auto apply_noise = [&](const Stage& st, const StageWeights& sw, Tensor& t) {
        noise_buf.resize(1, t.height, t.width);
        if (noise_windows.empty()) {
            std::fill(noise_buf.data.begin(), noise_buf.data.end(), 0.0f);
        } else {
            const Tensor& n = noise_windows.at(static_cast<std::size_t>(st.noise_site));
            if (n.height != t.height || n.width != t.width)
                throw Error(Errc::shape_mismatch, "forward_texture_padded: noise window mismatch at site " +
                                                      std::to_string(st.noise_site));
            noise_buf.data.assign(n.data.begin(), n.data.end());
        }
        add_noise_inplace(t, noise_buf, sw.noise_scale);
        ++site_seen;
    };

    for (std::size_t i = static_cast<std::size_t>(p.first_texture_stage); i < p.stages.size(); ++i) {
        const Stage& st = p.stages[i];
        const StageWeights& sw = m.stages[i];
        switch (st.kind) {
            case StageKind::tconv: {
                materialize_modulated_weights(sw.weight, style_slice(styles, st), st.demodulate, wscratch);
                ConvWeights wm = sw.weight;
                wm.values = wscratch;
                a = detail::padded_tconv(a, wm);
                break;
            }
            case StageKind::blur: {
                a = blur3(detail::zero_pad1(a));
                scale_inplace(a, kUpBlurGain);
                apply_noise(st, sw, a);
                add_bias_inplace(a, sw.bias);
                scaled_leaky_relu_inplace(a, 0.2f);
                break;
            }
            case StageKind::conv: {
                Tensor padded = detail::zero_pad1(a);
                modulated_conv_into(padded, sw.weight, style_slice(styles, st), st.demodulate, a, wscratch);
                apply_noise(st, sw, a);
                add_bias_inplace(a, sw.bias);
                scaled_leaky_relu_inplace(a, 0.2f);
                break;
            }
            case StageKind::to_rgb: {
                modulated_conv_into(a, sw.weight, style_slice(styles, st), false, b, wscratch);
                add_bias_inplace(b, sw.bias);
                tanh_inplace(b);
                a = b;
                break;
            }
            default:
                break;
        }
    }
    (void)site_seen;
    return a;
}

}  // namespace infgen
