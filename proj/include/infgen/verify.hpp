#pragma once

#include <cstring>
#include <limits>

#include "infgen/runtime.hpp"

// Seam property trials: the padding-free path must compose bit-exactly, and
// the zero-padded twin must measurably fail the same comparison.

namespace infgen {

// Noise scales initialize to zero so the noisy and noise-free paths coincide;
// seam trials turn them on explicitly so the noise fields are exercised.
inline void randomize_noise_scales(WeightSet& ws, std::uint64_t seed) {
    for (Param& p : ws.params) {
        if (p.name.size() < 6 || p.name.compare(p.name.size() - 6, 6, ".noise") != 0) continue;
        std::uint64_t tag = rng::fnv1a(p.name) + 1;
        for (std::size_t i = 0; i < p.values.size(); ++i)
            p.values[i] = rng::normal_at(seed, Stream::weight, tag, 0, 0, static_cast<std::int64_t>(i));
    }
}

inline Tensor crop_tensor(const Tensor& t, int y0, int x0, int h, int w) {
    if (y0 < 0 || x0 < 0 || y0 + h > t.height || x0 + w > t.width)
        throw Error(Errc::invalid_argument, "crop_tensor: crop outside tensor");
    Tensor out(t.channels, h, w);
    for (int c = 0; c < t.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = t.at(c, y0 + y, x0 + x);
    return out;
}

struct SeamTrialSummary {
    int trials = 0;
    int render_overlap_failures = 0;  // runtime path: overlap not bit-identical
    int op_overlap_failures = 0;      // op-level path: overlap not bit-identical
    int padded_not_failing = 0;       // padded twin unexpectedly consistent
    double min_padded_diff = std::numeric_limits<double>::infinity();

    bool ok() const {
        return trials > 0 && render_overlap_failures == 0 && op_overlap_failures == 0 && padded_not_failing == 0;
    }
};

namespace detail {

// Max abs difference between A shifted by (sy, sx) and B, over the overlap.
inline double overlap_max_diff(const Canvas& a, const Canvas& b, int sy, int sx) {
    double m = 0.0;
    for (int y = sy; y < a.h; ++y)
        for (int x = sx; x < a.w; ++x)
            for (int c = 0; c < 3; ++c) {
                double d = std::abs(double(a.rgb[(static_cast<std::size_t>(y) * a.w + x) * 3 + c]) -
                                    double(b.rgb[(static_cast<std::size_t>(y - sy) * b.w + (x - sx)) * 3 + c]));
                m = std::max(m, d);
            }
    return m;
}

// Max abs difference over the overlap of A and B (B shifted by sy, sx),
// excluding pixels within `margin` of either tensor's border. Raw op outputs
// carry a window-dependent rim of stride-1 pixels (see kOverscanZl), so the
// op-level seam comparison uses margin = stride.
inline double overlap_max_diff_t(const Tensor& a, const Tensor& b, int sy, int sx, int margin = 0) {
    double m = 0.0;
    const int y0 = std::max(margin, sy + margin);
    const int y1 = std::min(a.height - margin, sy + b.height - margin);
    const int x0 = std::max(margin, sx + margin);
    const int x1 = std::min(a.width - margin, sx + b.width - margin);
    for (int c = 0; c < a.channels; ++c)
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x)
                m = std::max(m, std::abs(double(a.at(c, y, x)) - double(b.at(c, y - sy, x - sx))));
    return m;
}

}  // namespace detail

// One seam trial at a random placement. Renders two overlapping single-patch
// regions through the full runtime (noise on) and checks bit-exact agreement,
// then repeats the comparison at the op level with shared z_S windows, for
// both the padding-free stack and its zero-padded twin.
inline void run_seam_trial(const EngineConfig& cfg, std::uint64_t trial_seed, SeamTrialSummary& sum,
                           double padded_threshold = 1e-3) {
    Pipeline p = build_pipeline(cfg);
    const int P = p.patch;
    const int S = p.stride;
    const int win = p.zl_window;
    const int zs = p.z_s_size;

    WeightSet ws = init_weights(cfg, trial_seed);
    randomize_noise_scales(ws, trial_seed + 1);

    auto ri = [&](std::uint64_t salt, long long lo, long long hi) {  // uniform in [lo, hi]
        std::uint64_t h = rng::mix64(trial_seed ^ rng::mix64(salt));
        return lo + static_cast<long long>(h % static_cast<std::uint64_t>(hi - lo + 1));
    };
    const long long max_d = (P - 1) / S;  // keep output windows overlapping
    GlobalIndex z1{ri(1, -8, 8), ri(2, -8, 8)};
    long long dy = ri(3, 0, max_d), dx = ri(4, 0, max_d);
    if (dy == 0 && dx == 0) dy = 1;
    GlobalIndex z2{z1.iy + dy, z1.ix + dx};

    ++sum.trials;

    // Runtime path: two independently planned and rendered patches.
    RenderRequest r1{{z1.iy * S, z1.ix * S, P, P}, trial_seed, 1, 1, {}};
    RenderRequest r2{{z2.iy * S, z2.ix * S, P, P}, trial_seed, 1, 1, {}};
    Canvas c1 = render(r1, cfg, ws);
    Canvas c2 = render(r2, cfg, ws);
    if (detail::overlap_max_diff(c1, c2, static_cast<int>(dy) * S, static_cast<int>(dx) * S) != 0.0)
        ++sum.render_overlap_failures;

    // Op-level path: z_S windows cut from one structure pass, zero noise.
    std::vector<float> z_g = sample_global(trial_seed, cfg.fields.d_zg);
    FieldSpec local{trial_seed, Stream::local, 0, cfg.fields.d_zl};
    int big = win + static_cast<int>(std::max(dy, dx));
    Tensor zl_big = sample_local_window(local, z1, big, big);
    CoordGrid grid_big = build_grid(z1, big, big, cfg.coord.period, cfg.coord.v_scale);
    Tensor zs_big = forward_structure(z_g, zl_big, grid_big, cfg, ws);
    Tensor zs_a = crop_tensor(zs_big, 0, 0, zs, zs);
    Tensor zs_b = crop_tensor(zs_big, static_cast<int>(dy), static_cast<int>(dx), zs, zs);

    Tensor pa = forward_texture(zs_a, z_g, {}, cfg, ws);
    Tensor pb = forward_texture(zs_b, z_g, {}, cfg, ws);
    if (detail::overlap_max_diff_t(pa, pb, static_cast<int>(dy) * S, static_cast<int>(dx) * S, S) != 0.0)
        ++sum.op_overlap_failures;

    Tensor qa = forward_texture_padded(zs_a, z_g, {}, cfg, ws);
    Tensor qb = forward_texture_padded(zs_b, z_g, {}, cfg, ws);
    const int s_pad = 1 << cfg.texture.up_blocks;  // padded chain: out = in * 2^N
    double padded_diff =
        detail::overlap_max_diff_t(qa, qb, static_cast<int>(dy) * s_pad, static_cast<int>(dx) * s_pad);
    sum.min_padded_diff = std::min(sum.min_padded_diff, padded_diff);
    if (!(padded_diff > padded_threshold)) ++sum.padded_not_failing;
}

inline SeamTrialSummary run_seam_trials(const EngineConfig& cfg, int trials, std::uint64_t seed0) {
    SeamTrialSummary sum;
    for (int t = 0; t < trials; ++t) run_seam_trial(cfg, seed0 + static_cast<std::uint64_t>(t) * 7919, sum);
    return sum;
}

}  // namespace infgen
