#pragma once

#include <span>
#include <vector>

#include "infgen/coords.hpp"
#include "infgen/kernels.hpp"
#include "infgen/styles.hpp"
#include "infgen/weights.hpp"

// Structure synthesizer: a pointwise network over unfolded neighborhoods of
// the local latent window and its coordinate grid. Everything is a valid
// operation, so restricting the input window restricts the output without
// changing a single bit.

namespace infgen {

// k x k neighborhood concatenation along channels. Output channel order is
// tap-major: channel (dy*k + dx)*C + c holds input channel c at tap (dy,dx).
// Border positions cannot unfold without padding, so the spatial size drops
// by k-1.
inline void unfold_into(const Tensor& x, int k, Tensor& out) {
    if (k < 1 || k % 2 == 0) throw Error(Errc::invalid_argument, "unfold: k must be odd and >= 1");
    if (x.height < k || x.width < k)
        throw Error(Errc::shape_mismatch, "unfold: input " + std::to_string(x.height) + "x" +
                                              std::to_string(x.width) + " smaller than k=" + std::to_string(k));
    const int oh = x.height - (k - 1);
    const int ow = x.width - (k - 1);
    out.resize(x.channels * k * k, oh, ow);
    for (int dy = 0; dy < k; ++dy)
        for (int dx = 0; dx < k; ++dx)
            for (int c = 0; c < x.channels; ++c) {
                const int oc = (dy * k + dx) * x.channels + c;
                for (int y = 0; y < oh; ++y)
                    for (int xx = 0; xx < ow; ++xx) out.at(oc, y, xx) = x.at(c, y + dy, xx + dx);
            }
}

inline Tensor unfold(const Tensor& x, int k) {
    Tensor out;
    unfold_into(x, k, out);
    return out;
}

namespace detail {

// One structure layer applied in a ping-pong workspace: unfold a -> b, then
// modulated 1x1 conv b -> a with bias and activation.
struct StructureLayerView {
    ConvWeights weight;
    const Param* bias;
    std::span<const float> style;
    int unfold_k;
};

inline void run_structure_layer(const StructureLayerView& l, Tensor& a, Tensor& b, std::vector<float>& wscratch) {
    unfold_into(a, l.unfold_k, b);
    modulated_conv_into(b, l.weight, l.style, /*demodulate=*/true, a, wscratch);
    add_bias_inplace(a, l.bias->values);
    scaled_leaky_relu_inplace(a, 0.2f);
}

}  // namespace detail

// z_S = G_S(z_g, z_l, c). The z_l window and coordinate grid must share
// origin and size; output shrinks by layers*(unfold_k-1).
inline Tensor forward_structure(std::span<const float> z_g, const Tensor& z_l_window, const CoordGrid& grid,
                                const EngineConfig& cfg, const WeightSet& ws) {
    if (z_l_window.channels != cfg.fields.d_zl)
        throw Error(Errc::shape_mismatch, "forward_structure: z_l window has " +
                                              std::to_string(z_l_window.channels) + " channels, config expects " +
                                              std::to_string(cfg.fields.d_zl));
    if (grid.planes.channels != 3 || grid.planes.height != z_l_window.height ||
        grid.planes.width != z_l_window.width)
        throw Error(Errc::shape_mismatch, "forward_structure: coordinate grid does not match z_l window");
    int margin = structure_margin(cfg.structure);
    if (z_l_window.height <= margin || z_l_window.width <= margin)
        throw Error(Errc::shape_mismatch, "forward_structure: window " + std::to_string(z_l_window.height) + "x" +
                                              std::to_string(z_l_window.width) +
                                              " leaves no output after margin " + std::to_string(margin));

    std::vector<float> styles = mapping_forward(cfg, ws, z_g);
    Pipeline p = build_pipeline(cfg);

    Tensor a(cfg.fields.d_zl + 3, z_l_window.height, z_l_window.width);
    std::copy(z_l_window.data.begin(), z_l_window.data.end(), a.data.begin());
    std::copy(grid.planes.data.begin(), grid.planes.data.end(),
              a.data.begin() + z_l_window.data.size());

    Tensor b;
    std::vector<float> wscratch;
    for (int i = 0; i < p.first_texture_stage; ++i) {
        const Stage& s = p.stages[i];
        if (s.kind != StageKind::structure_conv) continue;
        detail::StructureLayerView layer{as_conv(ws.at(s.name + ".weight")), &ws.at(s.name + ".bias"),
                                         style_slice(styles, s), cfg.structure.unfold_k};
        detail::run_structure_layer(layer, a, b, wscratch);
    }
    return a;
}

// Mode-seeking diversity ratio: L1 distance between the latent pair over L1
// distance between the synthesized pair, with eps guarding the denominator.
inline double diversity_loss(const Tensor& z_l1, const Tensor& z_l2, const Tensor& z_s1, const Tensor& z_s2,
                             double eps = 1e-6) {
    if (!z_l1.same_shape(z_l2)) throw Error(Errc::shape_mismatch, "diversity_loss: z_l shapes differ");
    if (!z_s1.same_shape(z_s2)) throw Error(Errc::shape_mismatch, "diversity_loss: z_S shapes differ");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < z_l1.data.size(); ++i) num += std::abs(double(z_l1.data[i]) - double(z_l2.data[i]));
    for (std::size_t i = 0; i < z_s1.data.size(); ++i) den += std::abs(double(z_s1.data[i]) - double(z_s2.data[i]));
    return num / (den + eps);
}

}  // namespace infgen
