#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "infgen/coords.hpp"
#include "infgen/tensor.hpp"

// Deterministic infinite random fields, addressed by global position.
//
// Every element is produced by hashing its full address — (seed, stream,
// layer, channel, y, x) — through a SplitMix64-style mixer, expanding the
// digest to two 64-bit words, and pushing those through Box-Muller. No state
// is kept anywhere, so any window query at any time reads exactly the same
// value for the same global position. That restriction property is what lets
// independently computed patches share one underlying field.

namespace infgen {

enum class Stream : std::uint64_t {
    global = 0,
    local = 1,
    noise = 2,
    weight = 3,
};

namespace rng {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Sequential absorption of the address components; each component passes
// through the full mixer so nearby addresses decorrelate.
inline std::uint64_t field_key(std::uint64_t seed, Stream stream, std::uint64_t layer, std::uint64_t ch,
                               std::int64_t y, std::int64_t x) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ static_cast<std::uint64_t>(stream));
    h = mix64(h ^ layer);
    h = mix64(h ^ ch);
    h = mix64(h ^ static_cast<std::uint64_t>(y));
    h = mix64(h ^ static_cast<std::uint64_t>(x));
    return h;
}

inline double unit_open(std::uint64_t w) {
    // (0, 1]: the +1 keeps log() off zero.
    return static_cast<double>((w >> 11) + 1) * 0x1.0p-53;
}

inline double unit_half_open(std::uint64_t w) {
    return static_cast<double>(w >> 11) * 0x1.0p-53;
}

inline float normal_from_key(std::uint64_t h) {
    std::uint64_t w1 = mix64(h ^ 0xD1B54A32D192ED03ull);
    std::uint64_t w2 = mix64(h ^ 0x8CB92BA72F3D8DD7ull);
    double u1 = unit_open(w1);
    double u2 = unit_half_open(w2);
    double r = std::sqrt(-2.0 * std::log(u1));
    return static_cast<float>(r * std::cos(2.0 * std::numbers::pi * u2));
}

inline float normal_at(std::uint64_t seed, Stream stream, std::uint64_t layer, std::uint64_t ch,
                       std::int64_t y, std::int64_t x) {
    return normal_from_key(field_key(seed, stream, layer, ch, y, x));
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace rng

struct FieldSpec {
    std::uint64_t seed = 0;
    Stream stream = Stream::local;
    int layer = 0;  // used by noise streams only
    int channels = 1;
};

// z_g: one standard-normal vector per seed.
inline std::vector<float> sample_global(std::uint64_t seed, int dim) {
    std::vector<float> v(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) v[i] = rng::normal_at(seed, Stream::global, 0, static_cast<std::uint64_t>(i), 0, 0);
    return v;
}

// z_l window: channels x h x w slice of the infinite local-latent field.
inline Tensor sample_local_window(const FieldSpec& spec, GlobalIndex origin, int h, int w) {
    if (h < 1 || w < 1) throw Error(Errc::invalid_argument, "sample_local_window: size must be >= 1");
    Tensor t(spec.channels, h, w);
    for (int c = 0; c < spec.channels; ++c)
        for (int r = 0; r < h; ++r)
            for (int col = 0; col < w; ++col)
                t.at(c, r, col) = rng::normal_at(spec.seed, Stream::local, 0, static_cast<std::uint64_t>(c),
                                                 origin.iy + r, origin.ix + col);
    return t;
}

inline void fill_noise_window(std::uint64_t seed, int layer, GlobalIndex origin, int h, int w, Tensor& out) {
    out.resize(1, h, w);
    for (int r = 0; r < h; ++r)
        for (int col = 0; col < w; ++col)
            out.at(0, r, col) = rng::normal_at(seed, Stream::noise, static_cast<std::uint64_t>(layer), 0,
                                               origin.iy + r, origin.ix + col);
}

// z_n window for one noise site: single channel, keyed additionally by the
// site's layer id so distinct layers read distinct fields.
inline Tensor sample_noise_window(const FieldSpec& spec, GlobalIndex origin, int h, int w) {
    if (h < 1 || w < 1) throw Error(Errc::invalid_argument, "sample_noise_window: size must be >= 1");
    Tensor t;
    fill_noise_window(spec.seed, spec.layer, origin, h, w, t);
    return t;
}

}  // namespace infgen
