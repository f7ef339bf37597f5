#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include "infgen/fields.hpp"
#include "infgen/fusion.hpp"
#include "infgen/image_io.hpp"
#include "infgen/planner.hpp"
#include "infgen/structure.hpp"
#include "infgen/texture.hpp"

// Executes a TilePlan. Jobs are uniform, write disjoint rectangles, and read
// only immutable shared state, so the rendered bytes are a pure function of
// (config, weights, seed, region, styles) no matter how many workers or what
// batch size the scheduler uses.

namespace infgen {

struct RenderRequest {
    Region region;
    std::uint64_t seed = 0;
    int workers = 1;
    int batch = 1;
    std::vector<StyleCenter> centers;  // empty: single style drawn from seed
};

struct Canvas {
    int h = 0;
    int w = 0;
    FloatBuf rgb;  // interleaved, row-major

    Canvas() = default;
    Canvas(int hh, int ww) : h(hh), w(ww), rgb(static_cast<std::size_t>(hh) * ww * 3, 0.0f) {}
};

namespace detail {

// Everything jobs share, resolved once per render.
struct Prepared {
    EngineConfig cfg;
    Pipeline pipe;
    std::uint64_t seed = 0;
    int K = 1;
    bool fused = false;
    std::vector<StyleCenter> centers;
    std::vector<int> fusion_radius;                  // per stage
    std::vector<std::vector<ConvWeights>> stage_w;   // [stage][center], modulated+demodulated
    std::vector<std::span<const float>> stage_bias;  // per stage
    std::vector<std::span<const float>> stage_noise; // per stage
};

inline Prepared prepare_render(const EngineConfig& cfg, const WeightSet& ws, std::uint64_t seed,
                               const std::vector<StyleCenter>& centers) {
    Prepared P;
    P.cfg = cfg;
    P.pipe = build_pipeline(cfg);
    P.seed = seed;
    P.fused = !centers.empty();
    P.centers = centers;
    P.K = P.fused ? static_cast<int>(centers.size()) : 1;
    P.fusion_radius = fusion_radii(P.pipe);

    std::vector<std::vector<float>> styles;
    if (P.fused) {
        for (const StyleCenter& c : centers) {
            std::vector<float> zg = c.z_g.empty() ? sample_global(c.seed, cfg.fields.d_zg) : c.z_g;
            if (static_cast<int>(zg.size()) != cfg.fields.d_zg)
                throw Error(Errc::shape_mismatch, "render: style center z_g length mismatch");
            styles.push_back(mapping_forward(cfg, ws, zg));
        }
    } else {
        styles.push_back(mapping_forward(cfg, ws, sample_global(seed, cfg.fields.d_zg)));
    }

    ResolvedModel m = resolve_model(cfg, ws);
    P.stage_w.resize(P.pipe.stages.size());
    P.stage_bias.resize(P.pipe.stages.size());
    P.stage_noise.resize(P.pipe.stages.size());
    std::vector<float> scratch;
    for (std::size_t i = 0; i < P.pipe.stages.size(); ++i) {
        const Stage& st = P.pipe.stages[i];
        P.stage_bias[i] = m.stages[i].bias;
        P.stage_noise[i] = m.stages[i].noise_scale;
        if (st.style_offset < 0) continue;
        for (int k = 0; k < P.K; ++k) {
            materialize_modulated_weights(m.stages[i].weight, style_slice(styles[k], st), st.demodulate, scratch);
            ConvWeights wm = m.stages[i].weight;
            wm.values = scratch;
            P.stage_w[i].push_back(std::move(wm));
        }
    }
    return P;
}

// Ping-pong workspace: two activation buffers sized for the largest stage,
// one noise window, and (for fused renders) one map window. Allocated per
// worker, reused across jobs, so a render's live activation bytes stay at
// workers * memory_bound plus the output band.
struct Workspace {
    Tensor a, b, noise, fmap;

    Workspace(const EngineConfig& cfg, const Pipeline& p, int K, bool fused) {
        const int win = p.zl_window + 2 * kOverscanZl;
        std::size_t max_act = static_cast<std::size_t>(cfg.fields.d_zl + 3) * win * win;
        std::size_t max_noise = 1;
        std::size_t max_spatial = 0;
        for (const Stage& s : p.stages) {
            const std::size_t side = static_cast<std::size_t>(phys_out_size(s));
            max_act = std::max(max_act, static_cast<std::size_t>(s.out_ch) * side * side);
            max_spatial = std::max(max_spatial, side * side);
            if (s.noise_site >= 0) max_noise = std::max(max_noise, side * side);
        }
        a.reserve_elems(max_act);
        b.reserve_elems(max_act);
        noise.reserve_elems(max_noise);
        if (fused) fmap.reserve_elems(static_cast<std::size_t>(K) * max_spatial);
    }
};

struct EmitTarget {
    float* base = nullptr;      // interleaved RGB rows
    long long row_floats = 0;   // stride between rows
    int y0 = 0;                 // where the job's out_rect lands in the target
    int x0 = 0;
};

inline void run_job(const Prepared& P, const TileJob& job, Workspace& ws, const EmitTarget& target) {
    const EngineConfig& cfg = P.cfg;
    const Pipeline& p = P.pipe;
    const int win = job.zl_size;

    // Layer-0 input: z_l window channels then the three coordinate planes.
    ws.a.resize(cfg.fields.d_zl + 3, win, win);
    for (int c = 0; c < cfg.fields.d_zl; ++c)
        for (int r = 0; r < win; ++r)
            for (int col = 0; col < win; ++col)
                ws.a.at(c, r, col) = rng::normal_at(P.seed, Stream::local, 0, static_cast<std::uint64_t>(c),
                                                    job.zl_origin.iy + r, job.zl_origin.ix + col);
    for (int r = 0; r < win; ++r)
        for (int col = 0; col < win; ++col) {
            CoordEncoding e = encode({job.zl_origin.iy + r, job.zl_origin.ix + col}, cfg.coord.period,
                                     cfg.coord.v_scale);
            ws.a.at(cfg.fields.d_zl + 0, r, col) = e.tanh_y;
            ws.a.at(cfg.fields.d_zl + 1, r, col) = e.cos_x;
            ws.a.at(cfg.fields.d_zl + 2, r, col) = e.sin_x;
        }

    auto modulated_stage = [&](std::size_t i, const Stage& st, bool is_tconv) {
        const auto& w = P.stage_w[i];
        if (!P.fused) {
            if (is_tconv)
                tconv2d_stride2_valid_into(ws.a, w[0], ws.b);
            else
                conv2d_valid_into(ws.a, w[0], nullptr, ws.b);
        } else {
            int oh = is_tconv ? 2 * ws.a.height + 1 : ws.a.height - (st.kernel - 1);
            int ow = is_tconv ? 2 * ws.a.width + 1 : ws.a.width - (st.kernel - 1);
            fusion_map_window_into(P.centers, st, P.fusion_radius[i], p.out_scale, job.zl_origin, oh, ow,
                                   ws.fmap);
            if (is_tconv)
                fused_tconv_into(ws.a, w, ws.fmap, ws.b);
            else
                fused_conv_into(ws.a, w, ws.fmap, ws.b);
        }
    };

    for (std::size_t i = 0; i < p.stages.size(); ++i) {
        const Stage& st = p.stages[i];
        switch (st.kind) {
            case StageKind::unfold:
                unfold_into(ws.a, st.kernel, ws.b);
                std::swap(ws.a, ws.b);
                break;
            case StageKind::structure_conv:
            case StageKind::conv:
            case StageKind::to_rgb:
            case StageKind::tconv:
                modulated_stage(i, st, st.kind == StageKind::tconv);
                if (st.noise_site >= 0) {
                    const NoiseWindow& nw = job.noise[static_cast<std::size_t>(st.noise_site)];
                    fill_noise_window(P.seed, st.noise_site, nw.origin, nw.h, nw.w, ws.noise);
                    add_noise_inplace(ws.b, ws.noise, P.stage_noise[i]);
                }
                if (!P.stage_bias[i].empty()) add_bias_inplace(ws.b, P.stage_bias[i]);
                if (st.kind == StageKind::to_rgb)
                    tanh_inplace(ws.b);
                else if (st.activate)
                    scaled_leaky_relu_inplace(ws.b, 0.2f);
                std::swap(ws.a, ws.b);
                break;
            case StageKind::blur:
                blur3_into(ws.a, ws.b);
                scale_inplace(ws.b, kUpBlurGain);
                if (st.noise_site >= 0) {
                    const NoiseWindow& nw = job.noise[static_cast<std::size_t>(st.noise_site)];
                    fill_noise_window(P.seed, st.noise_site, nw.origin, nw.h, nw.w, ws.noise);
                    add_noise_inplace(ws.b, ws.noise, P.stage_noise[i]);
                }
                add_bias_inplace(ws.b, P.stage_bias[i]);
                scaled_leaky_relu_inplace(ws.b, 0.2f);
                std::swap(ws.a, ws.b);
                break;
        }
    }

    const int raw_patch = p.patch + 2 * kOverscanZl * p.stride;
    if (ws.a.channels != 3 || ws.a.height != raw_patch || ws.a.width != raw_patch)
        throw Error(Errc::shape_mismatch, "render: job produced unexpected patch shape");
    if (!all_finite(ws.a)) throw Error(Errc::non_finite, "render: non-finite pixel values");

    const Rect& r = job.out_rect;
    const std::size_t plane = static_cast<std::size_t>(raw_patch) * raw_patch;
    for (int y = 0; y < r.h; ++y) {
        float* dst = target.base + static_cast<std::size_t>(target.y0 + y) * target.row_floats +
                     static_cast<std::size_t>(target.x0) * 3;
        const std::size_t src_row = static_cast<std::size_t>(job.crop_top + y) * raw_patch + job.crop_left;
        for (int x = 0; x < r.w; ++x) {
            dst[3 * x + 0] = ws.a.data[0 * plane + src_row + x];
            dst[3 * x + 1] = ws.a.data[1 * plane + src_row + x];
            dst[3 * x + 2] = ws.a.data[2 * plane + src_row + x];
        }
    }
}

// Runs jobs [first, last) of the plan across `workers` threads that pull
// batches from a shared cursor. Workspaces are created up front, one per
// worker. The first job error (with its id) wins and is rethrown.
template <class TargetFor>
inline void run_jobs_parallel(const Prepared& P, const TilePlan& plan, int first, int last, int workers,
                              int batch, std::vector<Workspace>& wss, TargetFor&& target_for) {
    std::atomic<int> cursor{first};
    std::mutex err_mu;
    std::exception_ptr err;
    int stored_err_job = -1;

    auto worker_fn = [&](int wi) {
        for (;;) {
            int i0 = cursor.fetch_add(batch);
            if (i0 >= last) return;
            int i1 = std::min(last, i0 + batch);
            for (int i = i0; i < i1; ++i) {
                try {
                    run_job(P, plan.jobs[static_cast<std::size_t>(i)], wss[static_cast<std::size_t>(wi)],
                            target_for(plan.jobs[static_cast<std::size_t>(i)]));
                } catch (const std::exception&) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err || plan.jobs[static_cast<std::size_t>(i)].id < stored_err_job) {
                        err = std::current_exception();
                        stored_err_job = plan.jobs[static_cast<std::size_t>(i)].id;
                    }
                    return;
                }
            }
        }
    };

    if (workers <= 1) {
        worker_fn(0);
    } else {
        std::vector<std::thread> ts;
        ts.reserve(static_cast<std::size_t>(workers));
        for (int wi = 0; wi < workers; ++wi) ts.emplace_back(worker_fn, wi);
        for (auto& t : ts) t.join();
    }
    if (err) {
        try {
            std::rethrow_exception(err);
        } catch (const Error& e) {
            throw Error(e.code(), "job " + std::to_string(stored_err_job) + ": " + e.what());
        }
    }
}

}  // namespace detail

// One generated patch with its provenance, raw (uncropped) surface included.
struct Patch {
    Tensor rgb;
    long long y = 0;  // output-space position of rgb(0,0)
    long long x = 0;
    int job_id = 0;
};

// Runs a single job and returns its full raw patch. The emitted composition
// normally keeps only job.out_rect; this is the whole surface for inspection.
inline Patch render_patch(const TileJob& job, const EngineConfig& cfg, const WeightSet& weights,
                          std::uint64_t seed, const std::vector<StyleCenter>& centers = {}) {
    detail::Prepared P = detail::prepare_render(cfg, weights, seed, centers);
    detail::Workspace ws(cfg, P.pipe, P.K, P.fused);
    const int raw = P.pipe.patch + 2 * kOverscanZl * P.pipe.stride;
    Patch out;
    out.rgb = Tensor(3, raw, raw);
    out.y = job.patch_y;
    out.x = job.patch_x;
    out.job_id = job.id;
    TileJob whole = job;
    whole.out_rect = Rect{0, 0, raw, raw};
    whole.crop_top = 0;
    whole.crop_left = 0;
    detail::run_job(P, whole, ws, detail::EmitTarget{out.rgb.data.data(), 3LL * raw, 0, 0});
    // run_job writes interleaved; re-expand to planar channel-major
    Tensor planar(3, raw, raw);
    for (int y = 0; y < raw; ++y)
        for (int x = 0; x < raw; ++x)
            for (int c = 0; c < 3; ++c)
                planar.at(c, y, x) = out.rgb.data[(static_cast<std::size_t>(y) * raw + x) * 3 + c];
    out.rgb = std::move(planar);
    return out;
}

inline Canvas render(const RenderRequest& req, const EngineConfig& cfg, const WeightSet& weights) {
    if (req.workers < 1 || req.batch < 1)
        throw Error(Errc::invalid_argument, "render: workers and batch must be >= 1");
    TilePlan plan = plan_region(req.region, cfg);
    detail::Prepared P = detail::prepare_render(cfg, weights, req.seed, req.centers);
    Canvas canvas(req.region.h, req.region.w);

    std::vector<detail::Workspace> wss;
    wss.reserve(static_cast<std::size_t>(req.workers));
    for (int i = 0; i < req.workers; ++i) wss.emplace_back(cfg, P.pipe, P.K, P.fused);

    auto target_for = [&](const TileJob& job) {
        return detail::EmitTarget{canvas.rgb.data(), static_cast<long long>(canvas.w) * 3, job.out_rect.y,
                                  job.out_rect.x};
    };
    detail::run_jobs_parallel(P, plan, 0, static_cast<int>(plan.jobs.size()), req.workers, req.batch, wss,
                              target_for);
    return canvas;
}

// Streams the region to a RowWriter band by band: one horizontal band of jobs
// is rendered (in parallel), flushed, and its buffer reused. Live activation
// memory is workers * memory_bound(cfg) plus the single band buffer, for any
// region size.
inline void render_stream(const RenderRequest& req, const EngineConfig& cfg, const WeightSet& weights,
                          RowWriter& out) {
    if (req.workers < 1 || req.batch < 1)
        throw Error(Errc::invalid_argument, "render: workers and batch must be >= 1");
    TilePlan plan = plan_region(req.region, cfg);
    detail::Prepared P = detail::prepare_render(cfg, weights, req.seed, req.centers);

    std::vector<detail::Workspace> wss;
    wss.reserve(static_cast<std::size_t>(req.workers));
    for (int i = 0; i < req.workers; ++i) wss.emplace_back(cfg, P.pipe, P.K, P.fused);

    // Sized for the tallest possible band (a trailing band can own up to a
    // full patch of rows).
    FloatBuf band(static_cast<std::size_t>(plan.patch) * req.region.w * 3, 0.0f);
    for (int jy = 0; jy < plan.jobs_y; ++jy) {
        int first = jy * plan.jobs_x;
        int last = first + plan.jobs_x;
        const Rect& r0 = plan.jobs[static_cast<std::size_t>(first)].out_rect;
        auto target_for = [&](const TileJob& job) {
            return detail::EmitTarget{band.data(), static_cast<long long>(req.region.w) * 3,
                                      job.out_rect.y - r0.y, job.out_rect.x};
        };
        detail::run_jobs_parallel(P, plan, first, last, req.workers, req.batch, wss, target_for);
        out.write_rows(band.data(), r0.h);
    }
    out.finish();
}

// Style-fused render; identical to render() except that centers are required.
inline Canvas render_fused(const RenderRequest& req, const EngineConfig& cfg, const WeightSet& weights) {
    if (req.centers.empty())
        throw Error(Errc::invalid_argument, "render_fused: need at least one style center");
    return render(req, cfg, weights);
}

// --- benchmarking ------------------------------------------------------------

struct BenchResult {
    double serial_seconds = 0.0;
    double parallel_seconds = 0.0;
    double speedup = 1.0;
    bool outputs_identical = true;
    int jobs = 0;
};

// Wall-clock comparison of a 1-worker and an n-worker render of the same
// request, with the outputs verified identical.
inline BenchResult bench(const RenderRequest& req, const EngineConfig& cfg, const WeightSet& weights) {
    using clock = std::chrono::steady_clock;
    RenderRequest serial = req;
    serial.workers = 1;

    auto t0 = clock::now();
    Canvas a = render(serial, cfg, weights);
    auto t1 = clock::now();
    Canvas b = render(req, cfg, weights);
    auto t2 = clock::now();

    BenchResult r;
    r.jobs = static_cast<int>(plan_region(req.region, cfg).jobs.size());
    r.serial_seconds = std::chrono::duration<double>(t1 - t0).count();
    r.parallel_seconds = std::chrono::duration<double>(t2 - t1).count();
    if (req.workers == 1)
        r.speedup = 1.0;  // by definition
    else
        r.speedup = r.parallel_seconds > 0.0 ? r.serial_seconds / r.parallel_seconds : 1.0;
    r.outputs_identical = a.rgb.size() == b.rgb.size() &&
                          std::memcmp(a.rgb.data(), b.rgb.data(), a.rgb.size() * sizeof(float)) == 0;
    return r;
}

// Physical cores when /proc exposes the topology, logical count otherwise.
inline int physical_cores() {
    std::ifstream f("/proc/cpuinfo");
    if (f) {
        std::vector<std::pair<int, int>> seen;
        int phys = -1, core = -1;
        std::string line;
        auto flush = [&]() {
            if (core >= 0) {
                std::pair<int, int> key{phys, core};
                bool found = false;
                for (auto& k : seen)
                    if (k == key) found = true;
                if (!found) seen.push_back(key);
            }
            phys = core = -1;
        };
        while (std::getline(f, line)) {
            if (line.rfind("physical id", 0) == 0)
                phys = std::atoi(line.substr(line.find(':') + 1).c_str());
            else if (line.rfind("core id", 0) == 0)
                core = std::atoi(line.substr(line.find(':') + 1).c_str());
            else if (line.empty())
                flush();
        }
        flush();
        if (!seen.empty()) return static_cast<int>(seen.size());
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace infgen
