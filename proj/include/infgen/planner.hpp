#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "infgen/config.hpp"
#include "infgen/coords.hpp"

// Maps a requested output region to a lattice of uniform patch jobs.
//
// Conventions. A job is identified by its z_l-window origin z (in z_l lattice
// units). Its patch covers output rows [stride*z.iy, stride*z.iy + patch) and
// likewise for columns; the output frame is anchored so the pipeline's
// constant lattice offset cancels. Jobs are laid out with pitch = patch
// rounded down to a multiple of stride, generate a full patch each, and crop
// the overshoot, so every requested pixel is owned by exactly one job.

namespace infgen {

struct Region {
    long long y = 0;
    long long x = 0;
    int h = 0;
    int w = 0;
};

struct Rect {
    int y = 0;  // relative to the region origin
    int x = 0;
    int h = 0;
    int w = 0;
};

struct NoiseWindow {
    GlobalIndex origin;
    int h = 0;
    int w = 0;
};

struct TileJob {
    int id = 0;
    GlobalIndex zl_origin;
    int zl_size = 0;
    std::vector<NoiseWindow> noise;  // one per noise site
    long long patch_y = 0;           // absolute output coords of the full patch
    long long patch_x = 0;
    Rect out_rect;                   // owned pixels, region-relative
    int crop_top = 0;                // offset of out_rect inside the patch
    int crop_left = 0;
};

struct TilePlan {
    int patch = 0;
    int pitch = 0;
    int stride = 0;
    int jobs_y = 0;
    int jobs_x = 0;
    std::vector<TileJob> jobs;
};

namespace detail {

inline long long floor_div(long long a, long long b) {
    long long q = a / b;
    return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

}  // namespace detail

// Per-stage output origin for a job, on each stage's own lattice:
// origin = scale * z + offset. Two jobs that share an output pixel get the
// same global index for every feature pixel feeding it, at every stage.
inline std::vector<GlobalIndex> layer_offsets(const Pipeline& p, GlobalIndex zl_origin) {
    std::vector<GlobalIndex> out;
    out.reserve(p.stages.size());
    for (const Stage& s : p.stages)
        out.push_back({s.scale * zl_origin.iy + s.offset, s.scale * zl_origin.ix + s.offset});
    return out;
}

inline TilePlan plan_region(const Region& region, const EngineConfig& cfg) {
    if (region.h < 1 || region.w < 1) throw Error(Errc::invalid_argument, "plan_region: empty region");
    Pipeline p = build_pipeline(cfg);
    TilePlan plan;
    plan.patch = p.patch;
    plan.stride = p.stride;
    plan.pitch = (p.patch / p.stride) * p.stride;
    if (plan.pitch % p.stride != 0 || plan.pitch <= 0)
        throw Error(Errc::invalid_argument, "plan_region: pitch must be a positive multiple of the stride");

    // First lattice-aligned patch start at or before the region edge. For
    // lattice-aligned origins this makes the job grid exactly
    // ceil(h/pitch) x ceil(w/pitch).
    const long long z0y = detail::floor_div(region.y, p.stride);
    const long long z0x = detail::floor_div(region.x, p.stride);
    const long long p0y = z0y * p.stride;
    const long long p0x = z0x * p.stride;
    const long long end_y = region.y + region.h;
    const long long end_x = region.x + region.w;
    const long long zstep = plan.pitch / p.stride;

    // Fewest patches that cover the span when stepping by pitch. For
    // lattice-aligned regions larger than one patch this is ceil(h/pitch).
    auto jobs_needed = [&](long long span) {
        return span <= plan.patch ? 1 : static_cast<int>((span - plan.patch + plan.pitch - 1) / plan.pitch) + 1;
    };
    plan.jobs_y = jobs_needed(end_y - p0y);
    plan.jobs_x = jobs_needed(end_x - p0x);

    for (int jy = 0; jy < plan.jobs_y; ++jy) {
        for (int jx = 0; jx < plan.jobs_x; ++jx) {
            TileJob job;
            job.id = jy * plan.jobs_x + jx;
            // Nominal lattice position, then widen by the overscan margin.
            const long long zny = z0y + jy * zstep;
            const long long znx = z0x + jx * zstep;
            job.zl_origin = {zny - kOverscanZl, znx - kOverscanZl};
            job.zl_size = p.zl_window + 2 * kOverscanZl;
            job.patch_y = job.zl_origin.iy * p.stride;  // raw patch start
            job.patch_x = job.zl_origin.ix * p.stride;

            // Ownership is decided on the nominal lattice: interior jobs own
            // one pitch of rows/cols; the trailing job also owns whatever its
            // patch covers past the last pitch boundary.
            const long long pn_y = zny * p.stride;
            const long long pn_x = znx * p.stride;
            const long long own_y0 = std::max(region.y, pn_y);
            const long long own_x0 = std::max(region.x, pn_x);
            const long long own_y1 = jy + 1 == plan.jobs_y ? end_y : std::min(end_y, pn_y + plan.pitch);
            const long long own_x1 = jx + 1 == plan.jobs_x ? end_x : std::min(end_x, pn_x + plan.pitch);
            job.out_rect = Rect{static_cast<int>(own_y0 - region.y), static_cast<int>(own_x0 - region.x),
                                static_cast<int>(own_y1 - own_y0), static_cast<int>(own_x1 - own_x0)};
            job.crop_top = static_cast<int>(own_y0 - job.patch_y);
            job.crop_left = static_cast<int>(own_x0 - job.patch_x);

            job.noise.reserve(p.stages.size());
            for (std::size_t si = 0; si < p.stages.size(); ++si) {
                const Stage& st = p.stages[si];
                if (st.noise_site < 0) continue;
                GlobalIndex so{st.scale * job.zl_origin.iy + st.offset,
                               st.scale * job.zl_origin.ix + st.offset};
                job.noise.push_back(NoiseWindow{so, phys_out_size(st), phys_out_size(st)});
            }
            plan.jobs.push_back(std::move(job));
        }
    }
    return plan;
}

// Peak live activation bytes of one in-flight job. The runtime executes each
// job in a ping-pong workspace of two buffers sized to the largest activation
// in the chain plus one noise window buffer, so this bound is exact, and it
// has no term that depends on the requested region.
inline std::size_t memory_bound(const EngineConfig& cfg) {
    Pipeline p = build_pipeline(cfg);
    const int win = p.zl_window + 2 * kOverscanZl;
    std::size_t max_act = static_cast<std::size_t>(cfg.fields.d_zl + 3) * win * win;
    std::size_t max_noise = 0;
    for (const Stage& s : p.stages) {
        const int side = phys_out_size(s);
        std::size_t elems = static_cast<std::size_t>(s.out_ch) * side * side;
        max_act = std::max(max_act, elems);
        if (s.noise_site >= 0) max_noise = std::max(max_noise, static_cast<std::size_t>(side) * side);
    }
    return (2 * max_act + max_noise) * sizeof(float);
}

// Bytes of the single row-band buffer the streaming renderer keeps live.
inline std::size_t stream_band_bytes(const EngineConfig& cfg, int region_width) {
    return static_cast<std::size_t>(patch_size(cfg)) * region_width * 3 * sizeof(float);
}

inline json plan_to_json(const TilePlan& plan) {
    json j;
    j["patch"] = plan.patch;
    j["pitch"] = plan.pitch;
    j["stride"] = plan.stride;
    j["jobs_y"] = plan.jobs_y;
    j["jobs_x"] = plan.jobs_x;
    j["jobs"] = json::array();
    for (const TileJob& job : plan.jobs) {
        json n = json::array();
        for (const NoiseWindow& w : job.noise)
            n.push_back({{"iy", w.origin.iy}, {"ix", w.origin.ix}, {"h", w.h}, {"w", w.w}});
        j["jobs"].push_back({{"id", job.id},
                             {"zl_origin", {{"iy", job.zl_origin.iy}, {"ix", job.zl_origin.ix}}},
                             {"zl_size", job.zl_size},
                             {"patch_y", job.patch_y},
                             {"patch_x", job.patch_x},
                             {"out_rect", {{"y", job.out_rect.y}, {"x", job.out_rect.x}, {"h", job.out_rect.h}, {"w", job.out_rect.w}}},
                             {"crop_top", job.crop_top},
                             {"crop_left", job.crop_left},
                             {"noise_windows", n}});
    }
    return j;
}

}  // namespace infgen
