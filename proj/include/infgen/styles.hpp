#pragma once

#include <span>
#include <vector>

#include "infgen/config.hpp"
#include "infgen/kernels.hpp"
#include "infgen/weights.hpp"

namespace infgen {

namespace detail {

inline void linear_forward(const Param& w, const Param& b, std::span<const float> x, std::vector<float>& out) {
    int rows = static_cast<int>(w.dims[0]);
    int cols = static_cast<int>(w.dims[1]);
    if (static_cast<int>(x.size()) != cols)
        throw Error(Errc::shape_mismatch, "mapping: input length " + std::to_string(x.size()) +
                                              " != " + std::to_string(cols) + " for '" + w.name + "'");
    out.assign(static_cast<std::size_t>(rows), 0.0f);
    for (int r = 0; r < rows; ++r) {
        float acc = b.values[r];
        const float* wp = &w.values[static_cast<std::size_t>(r) * cols];
        for (int c = 0; c < cols; ++c) acc += wp[c] * x[c];
        out[r] = acc;
    }
}

}  // namespace detail

// Projects z_g through the shared mapping network. The result is the
// concatenation of every modulated stage's style slice; Stage::style_offset
// and Stage::in_ch select a slice.
inline std::vector<float> mapping_forward(const EngineConfig& cfg, const WeightSet& ws,
                                          std::span<const float> z_g) {
    if (static_cast<int>(z_g.size()) != cfg.fields.d_zg)
        throw Error(Errc::shape_mismatch, "mapping: z_g length " + std::to_string(z_g.size()) +
                                              " != d_zg " + std::to_string(cfg.fields.d_zg));
    std::vector<float> x(z_g.begin(), z_g.end());
    std::vector<float> next;
    for (int i = 0; i < cfg.mapping.depth; ++i) {
        std::string prefix = "map.l" + std::to_string(i);
        detail::linear_forward(ws.at(prefix + ".weight"), ws.at(prefix + ".bias"), x, next);
        for (float& v : next) v = (v > 0.0f ? v : 0.2f * v) * kActGain;
        x.swap(next);
    }
    detail::linear_forward(ws.at("map.out.weight"), ws.at("map.out.bias"), x, next);
    return next;
}

inline std::span<const float> style_slice(const std::vector<float>& styles, const Stage& s) {
    return std::span<const float>(styles).subspan(static_cast<std::size_t>(s.style_offset),
                                                  static_cast<std::size_t>(s.in_ch));
}

}  // namespace infgen
