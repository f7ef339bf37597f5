#pragma once

#include <cmath>
#include <span>
#include <string>

#include "infgen/tensor.hpp"

// Deterministic direct-convolution kernels.
//
// Accumulation order is part of the contract: for one output element the
// summands are always visited input-channel-major, then kernel taps row-major.
// Because that order does not depend on where the input window sits inside a
// larger feature map, overlapping windows produce bit-identical values, which
// is what the patch compositor relies on.

namespace infgen {

namespace detail {

// Sum of one valid-conv output element, without bias.
inline float conv_accum(const Tensor& x, const ConvWeights& w, int oc, int oy, int ox) {
    float acc = 0.0f;
    for (int ic = 0; ic < w.in_channels; ++ic) {
        const float* xp = &x.data[(static_cast<std::size_t>(ic) * x.height + oy) * x.width + ox];
        const float* wp = &w.values[(static_cast<std::size_t>(oc) * w.in_channels + ic) * w.kernel_h * w.kernel_w];
        for (int ky = 0; ky < w.kernel_h; ++ky) {
            for (int kx = 0; kx < w.kernel_w; ++kx) acc += xp[ky * x.width + kx] * wp[ky * w.kernel_w + kx];
        }
    }
    return acc;
}

// Sum of one stride-2 transposed-conv output element. Equivalent to the
// scatter-add definition; evaluated as a gather so the per-element order is
// fixed no matter which window of the input is being processed.
inline float tconv_accum(const Tensor& x, const ConvWeights& w, int oc, int oy, int ox) {
    float acc = 0.0f;
    for (int ic = 0; ic < w.in_channels; ++ic) {
        for (int ky = 0; ky < w.kernel_h; ++ky) {
            int sy = oy - ky;
            if (sy < 0 || sy % 2 != 0) continue;
            int iy = sy / 2;
            if (iy >= x.height) continue;
            for (int kx = 0; kx < w.kernel_w; ++kx) {
                int sx = ox - kx;
                if (sx < 0 || sx % 2 != 0) continue;
                int ix = sx / 2;
                if (ix >= x.width) continue;
                acc += x.at(ic, iy, ix) * w.at(oc, ic, ky, kx);
            }
        }
    }
    return acc;
}

inline void check_conv_input(const Tensor& x, const ConvWeights& w, const char* op) {
    if (x.channels != w.in_channels)
        throw Error(Errc::shape_mismatch, std::string(op) + ": input has " + std::to_string(x.channels) +
                                              " channels, weights expect " + std::to_string(w.in_channels));
    if (x.height < w.kernel_h || x.width < w.kernel_w)
        throw Error(Errc::shape_mismatch, std::string(op) + ": input " + std::to_string(x.height) + "x" +
                                              std::to_string(x.width) + " smaller than kernel " +
                                              std::to_string(w.kernel_h) + "x" + std::to_string(w.kernel_w));
}

}  // namespace detail

// --- valid 2-D convolution ------------------------------------------------

inline void conv2d_valid_into(const Tensor& x, const ConvWeights& w, const float* bias, Tensor& out) {
    detail::check_conv_input(x, w, "conv2d_valid");
    const int oh = x.height - (w.kernel_h - 1);
    const int ow = x.width - (w.kernel_w - 1);
    out.resize(w.out_channels, oh, ow);
    for (int oc = 0; oc < w.out_channels; ++oc) {
        const float b = bias ? bias[oc] : 0.0f;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) out.at(oc, oy, ox) = b + detail::conv_accum(x, w, oc, oy, ox);
    }
}

inline Tensor conv2d_valid(const Tensor& x, const ConvWeights& w, std::span<const float> bias = {}) {
    if (!bias.empty() && static_cast<int>(bias.size()) != w.out_channels)
        throw Error(Errc::shape_mismatch, "conv2d_valid: bias length " + std::to_string(bias.size()) +
                                              " != out_channels " + std::to_string(w.out_channels));
    Tensor out;
    conv2d_valid_into(x, w, bias.empty() ? nullptr : bias.data(), out);
    return out;
}

// --- stride-2 transposed convolution, no padding ----------------------------

inline void tconv2d_stride2_valid_into(const Tensor& x, const ConvWeights& w, Tensor& out) {
    if (x.height < 1 || x.width < 1 || x.channels < 1)
        throw Error(Errc::invalid_argument, "tconv2d_stride2_valid: empty input");
    if (x.channels != w.in_channels)
        throw Error(Errc::shape_mismatch, "tconv2d_stride2_valid: input has " + std::to_string(x.channels) +
                                              " channels, weights expect " + std::to_string(w.in_channels));
    const int oh = (x.height - 1) * 2 + w.kernel_h;
    const int ow = (x.width - 1) * 2 + w.kernel_w;
    out.resize(w.out_channels, oh, ow);
    for (int oc = 0; oc < w.out_channels; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) out.at(oc, oy, ox) = detail::tconv_accum(x, w, oc, oy, ox);
}

inline Tensor tconv2d_stride2_valid(const Tensor& x, const ConvWeights& w) {
    Tensor out;
    tconv2d_stride2_valid_into(x, w, out);
    return out;
}

// --- separable binomial blur [1,2,1]/4 per axis, valid ----------------------

inline void blur3_into(const Tensor& x, Tensor& out) {
    if (x.height < 3 || x.width < 3)
        throw Error(Errc::shape_mismatch, "blur3: input " + std::to_string(x.height) + "x" +
                                              std::to_string(x.width) + " smaller than 3x3");
    static const float taps[3][3] = {
        {1.0f / 16, 2.0f / 16, 1.0f / 16},
        {2.0f / 16, 4.0f / 16, 2.0f / 16},
        {1.0f / 16, 2.0f / 16, 1.0f / 16},
    };
    const int oh = x.height - 2;
    const int ow = x.width - 2;
    out.resize(x.channels, oh, ow);
    for (int c = 0; c < x.channels; ++c)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                float acc = 0.0f;
                for (int ky = 0; ky < 3; ++ky)
                    for (int kx = 0; kx < 3; ++kx) acc += x.at(c, oy + ky, ox + kx) * taps[ky][kx];
                out.at(c, oy, ox) = acc;
            }
}

inline Tensor blur3(const Tensor& x) {
    Tensor out;
    blur3_into(x, out);
    return out;
}

// --- style modulation -------------------------------------------------------

constexpr double kDemodEps = 1e-8;

// Scales each input-channel slice of w by style, then (optionally) rescales
// each output filter to unit norm. Result goes into `scratch` laid out like
// w.values.
inline void materialize_modulated_weights(const ConvWeights& w, std::span<const float> style, bool demodulate,
                                          std::vector<float>& scratch) {
    if (static_cast<int>(style.size()) != w.in_channels)
        throw Error(Errc::shape_mismatch, "modulated_conv: style length " + std::to_string(style.size()) +
                                              " != in_channels " + std::to_string(w.in_channels));
    const std::size_t per_ic = static_cast<std::size_t>(w.kernel_h) * w.kernel_w;
    scratch.resize(w.values.size());
    for (int oc = 0; oc < w.out_channels; ++oc) {
        std::size_t base = static_cast<std::size_t>(oc) * w.in_channels * per_ic;
        for (int ic = 0; ic < w.in_channels; ++ic)
            for (std::size_t t = 0; t < per_ic; ++t)
                scratch[base + ic * per_ic + t] = w.values[base + ic * per_ic + t] * style[ic];
        if (demodulate) {
            double ss = 0.0;
            for (std::size_t t = 0; t < per_ic * w.in_channels; ++t) {
                double v = scratch[base + t];
                ss += v * v;
            }
            float d = static_cast<float>(1.0 / std::sqrt(ss + kDemodEps));
            for (std::size_t t = 0; t < per_ic * w.in_channels; ++t) scratch[base + t] *= d;
        }
    }
}

inline void modulated_conv_into(const Tensor& x, const ConvWeights& w, std::span<const float> style,
                                bool demodulate, Tensor& out, std::vector<float>& wscratch) {
    materialize_modulated_weights(w, style, demodulate, wscratch);
    ConvWeights wm;
    wm.out_channels = w.out_channels;
    wm.in_channels = w.in_channels;
    wm.kernel_h = w.kernel_h;
    wm.kernel_w = w.kernel_w;
    wm.values = std::move(wscratch);
    conv2d_valid_into(x, wm, nullptr, out);
    wscratch = std::move(wm.values);
}

inline Tensor modulated_conv(const Tensor& x, const ConvWeights& w, std::span<const float> style,
                             bool demodulate) {
    Tensor out;
    std::vector<float> scratch;
    modulated_conv_into(x, w, style, demodulate, out, scratch);
    return out;
}

inline void modulated_tconv_into(const Tensor& x, const ConvWeights& w, std::span<const float> style,
                                 bool demodulate, Tensor& out, std::vector<float>& wscratch) {
    materialize_modulated_weights(w, style, demodulate, wscratch);
    ConvWeights wm;
    wm.out_channels = w.out_channels;
    wm.in_channels = w.in_channels;
    wm.kernel_h = w.kernel_h;
    wm.kernel_w = w.kernel_w;
    wm.values = std::move(wscratch);
    tconv2d_stride2_valid_into(x, wm, out);
    wscratch = std::move(wm.values);
}

// --- elementwise ------------------------------------------------------------

inline void leaky_relu_inplace(Tensor& x, float slope = 0.2f) {
    for (float& v : x.data) v = v > 0.0f ? v : slope * v;
}

// Network layers use the scaled form (gain sqrt(2)) so activation variance
// survives deep stacks; the bare op above keeps its plain contract.
constexpr float kActGain = 1.4142135623730951f;

inline void scaled_leaky_relu_inplace(Tensor& x, float slope = 0.2f) {
    for (float& v : x.data) v = (v > 0.0f ? v : slope * v) * kActGain;
}

inline Tensor leaky_relu(const Tensor& x, float slope = 0.2f) {
    Tensor out = x;
    leaky_relu_inplace(out, slope);
    return out;
}

inline void add_noise_inplace(Tensor& x, const Tensor& noise, std::span<const float> scale) {
    if (noise.channels != 1 || noise.height != x.height || noise.width != x.width)
        throw Error(Errc::shape_mismatch, "add_noise: noise " + std::to_string(noise.height) + "x" +
                                              std::to_string(noise.width) + " does not match input " +
                                              std::to_string(x.height) + "x" + std::to_string(x.width));
    if (static_cast<int>(scale.size()) != x.channels)
        throw Error(Errc::shape_mismatch, "add_noise: scale length " + std::to_string(scale.size()) +
                                              " != channels " + std::to_string(x.channels));
    const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;
    for (int c = 0; c < x.channels; ++c) {
        float s = scale[c];
        float* xp = &x.data[c * plane];
        for (std::size_t i = 0; i < plane; ++i) xp[i] += s * noise.data[i];
    }
}

inline Tensor add_noise(const Tensor& x, const Tensor& noise, std::span<const float> scale) {
    Tensor out = x;
    add_noise_inplace(out, noise, scale);
    return out;
}

inline void scale_inplace(Tensor& x, float s) {
    for (float& v : x.data) v *= s;
}

// The stride-2 up path inserts three zeros per input sample, so the smoothing
// blur carries gain factor^2 to keep the signal scale through the stack.
constexpr float kUpBlurGain = 4.0f;

inline void add_bias_inplace(Tensor& x, std::span<const float> bias) {
    if (static_cast<int>(bias.size()) != x.channels)
        throw Error(Errc::shape_mismatch, "add_bias: bias length " + std::to_string(bias.size()) +
                                              " != channels " + std::to_string(x.channels));
    const std::size_t plane = static_cast<std::size_t>(x.height) * x.width;
    for (int c = 0; c < x.channels; ++c) {
        float b = bias[c];
        float* xp = &x.data[c * plane];
        for (std::size_t i = 0; i < plane; ++i) xp[i] += b;
    }
}

inline void tanh_inplace(Tensor& x) {
    for (float& v : x.data) v = std::tanh(v);
}

}  // namespace infgen
