#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "infgen/config.hpp"
#include "infgen/coords.hpp"
#include "infgen/kernels.hpp"
#include "infgen/planner.hpp"

// Spatial style fusion: K style centers in output pixel space, a nearest-
// center one-hot assignment, and per-stage weight maps obtained by resampling
// that assignment onto each stage's lattice and box-smoothing it. Maps are
// pure functions of global indices, so fused patches compose as exactly as
// plain ones.

namespace infgen {

struct StyleCenter {
    double y = 0.0;  // output pixel space
    double x = 0.0;
    std::uint64_t seed = 0;       // z_g drawn from this seed...
    std::vector<float> z_g;       // ...unless an explicit z_g is given
};

inline int nearest_center(const std::vector<StyleCenter>& centers, double py, double px) {
    if (centers.empty()) throw Error(Errc::invalid_argument, "fusion: need at least one style center");
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centers.size(); ++k) {
        double dy = py - centers[k].y;
        double dx = px - centers[k].x;
        double d = dy * dy + dx * dx;
        if (d < best_d) {  // ties keep the lowest index
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

// Box-smoothing radius per stage, in that stage's own lattice units: the
// per-side crop of every later valid op, scaled back to this lattice. Deeper
// stages influence fewer output pixels per lattice step, so their radii
// shrink to zero.
inline std::vector<int> fusion_radii(const Pipeline& p) {
    std::vector<int> radii(p.stages.size(), 0);
    for (std::size_t i = 0; i < p.stages.size(); ++i) {
        double r = 0.0;
        for (std::size_t j = i + 1; j < p.stages.size(); ++j) {
            const Stage& sj = p.stages[j];
            double rel = static_cast<double>(p.stages[i].scale) / static_cast<double>(sj.scale);
            if (sj.kind == StageKind::blur || sj.kind == StageKind::conv)
                r += 1.0 * rel;
            else if (sj.kind == StageKind::unfold)
                r += ((sj.kernel - 1) / 2) * rel;
        }
        radii[i] = static_cast<int>(std::ceil(r - 1e-12));
    }
    return radii;
}

// K-channel weight window for one stage of one job. Pixel (gy, gx) on the
// stage lattice sits at output position out_scale/stage.scale * (g - offset);
// its weights average the one-hot assignments over the (2r+1)^2 box around it.
// Weights are non-negative and sum to 1 per pixel.
inline void fusion_map_window_into(const std::vector<StyleCenter>& centers, const Stage& st, int radius,
                                   long long out_scale, GlobalIndex zl_origin, int h, int w, Tensor& out) {
    const int K = static_cast<int>(centers.size());
    const long long q = out_scale / st.scale;
    const long long gy0 = st.scale * zl_origin.iy + st.offset;
    const long long gx0 = st.scale * zl_origin.ix + st.offset;
    out.resize(K, h, w);
    std::vector<int> counts(static_cast<std::size_t>(K));
    const int side = 2 * radius + 1;
    const float inv = 1.0f / static_cast<float>(side * side);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::fill(counts.begin(), counts.end(), 0);
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    double py = static_cast<double>(q * (gy0 + y + dy - st.offset));
                    double px = static_cast<double>(q * (gx0 + x + dx - st.offset));
                    counts[static_cast<std::size_t>(nearest_center(centers, py, px))]++;
                }
            for (int k = 0; k < K; ++k) out.at(k, y, x) = static_cast<float>(counts[k]) * inv;
        }
}

// Output-space one-hot assignment plus the per-stage smoothed maps for a
// region around the origin job. The layer-0 (output-space) map is strictly
// one-hot; smoothed per-stage maps stay a partition of unity.
struct FusionMap {
    std::vector<int> assignment;       // h*w nearest-center ids, output space
    int h = 0, w = 0;
    std::vector<Tensor> per_stage;     // one K-channel map per pipeline stage
};

inline FusionMap build_fusion_map(const std::vector<StyleCenter>& centers, const Region& region,
                                  const EngineConfig& cfg) {
    if (centers.empty()) throw Error(Errc::invalid_argument, "build_fusion_map: need at least one style center");
    Pipeline p = build_pipeline(cfg);
    FusionMap m;
    m.h = region.h;
    m.w = region.w;
    m.assignment.resize(static_cast<std::size_t>(region.h) * region.w);
    for (int y = 0; y < region.h; ++y)
        for (int x = 0; x < region.w; ++x)
            m.assignment[static_cast<std::size_t>(y) * region.w + x] =
                nearest_center(centers, static_cast<double>(region.y + y), static_cast<double>(region.x + x));

    std::vector<int> radii = fusion_radii(p);
    GlobalIndex z0{detail::floor_div(region.y, p.stride), detail::floor_div(region.x, p.stride)};
    m.per_stage.resize(p.stages.size());
    for (std::size_t i = 0; i < p.stages.size(); ++i) {
        const Stage& st = p.stages[i];
        fusion_map_window_into(centers, st, radii[i], p.out_scale, z0, st.out_size, st.out_size, m.per_stage[i]);
    }
    return m;
}

// --- fused kernels ----------------------------------------------------------
// K modulated convolutions blended per output pixel by the map weights. The
// per-style weight tensors are materialized (and demodulated) up front; the
// inner sums reuse the plain kernels' accumulation helpers, so a K=1 fusion
// with unit weight reproduces the plain result bit for bit.

inline void fused_conv_into(const Tensor& x, std::span<const ConvWeights> per_style, const Tensor& fmap,
                            Tensor& out) {
    const int K = static_cast<int>(per_style.size());
    if (fmap.channels != K)
        throw Error(Errc::shape_mismatch, "fused_conv: map has " + std::to_string(fmap.channels) +
                                              " channels, got " + std::to_string(K) + " styles");
    const ConvWeights& w0 = per_style[0];
    detail::check_conv_input(x, w0, "fused_conv");
    const int oh = x.height - (w0.kernel_h - 1);
    const int ow = x.width - (w0.kernel_w - 1);
    if (fmap.height != oh || fmap.width != ow)
        throw Error(Errc::shape_mismatch, "fused_conv: map is " + std::to_string(fmap.height) + "x" +
                                              std::to_string(fmap.width) + ", output is " + std::to_string(oh) +
                                              "x" + std::to_string(ow));
    out.resize(w0.out_channels, oh, ow);
    for (int oc = 0; oc < w0.out_channels; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                float v = 0.0f;
                for (int k = 0; k < K; ++k)
                    v += fmap.at(k, oy, ox) * detail::conv_accum(x, per_style[k], oc, oy, ox);
                out.at(oc, oy, ox) = v;
            }
}

inline void fused_tconv_into(const Tensor& x, std::span<const ConvWeights> per_style, const Tensor& fmap,
                             Tensor& out) {
    const int K = static_cast<int>(per_style.size());
    const ConvWeights& w0 = per_style[0];
    const int oh = (x.height - 1) * 2 + w0.kernel_h;
    const int ow = (x.width - 1) * 2 + w0.kernel_w;
    if (fmap.channels != K || fmap.height != oh || fmap.width != ow)
        throw Error(Errc::shape_mismatch, "fused_tconv: map does not match output");
    out.resize(w0.out_channels, oh, ow);
    for (int oc = 0; oc < w0.out_channels; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                float v = 0.0f;
                for (int k = 0; k < K; ++k)
                    v += fmap.at(k, oy, ox) * detail::tconv_accum(x, per_style[k], oc, oy, ox);
                out.at(oc, oy, ox) = v;
            }
}

// Spec-level op: blend K style vectors through one conv. Map weights index
// the conv *output* lattice (for 1x1 kernels that coincides with the input).
inline Tensor fused_modulated_conv(const Tensor& x, const ConvWeights& w,
                                   const std::vector<std::vector<float>>& styles, const Tensor& map_slice,
                                   bool demodulate = true) {
    if (styles.empty()) throw Error(Errc::invalid_argument, "fused_modulated_conv: need at least one style");
    if (static_cast<int>(styles.size()) != map_slice.channels)
        throw Error(Errc::shape_mismatch, "fused_modulated_conv: style count " + std::to_string(styles.size()) +
                                              " != map channels " + std::to_string(map_slice.channels));
    std::vector<ConvWeights> per_style;
    per_style.reserve(styles.size());
    std::vector<float> scratch;
    for (const auto& s : styles) {
        materialize_modulated_weights(w, s, demodulate, scratch);
        ConvWeights wm = w;
        wm.values = scratch;
        per_style.push_back(std::move(wm));
    }
    Tensor out;
    fused_conv_into(x, per_style, map_slice, out);
    return out;
}

}  // namespace infgen
