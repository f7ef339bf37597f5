// Command-line front end: plan inspection, weight management, patch-wise
// rendering (plain and style-fused), seam verification, and the parallel
// scheduling benchmark.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "infgen/infgen.hpp"

namespace {

infgen::EngineConfig load_config_arg(const std::string& arg) {
    if (arg == "test") return infgen::test_preset();
    if (arg == "full") return infgen::full_preset();
    std::ifstream f(arg);
    if (!f) throw infgen::Error(infgen::Errc::not_found, "config not found: '" + arg + "'");
    infgen::json j = infgen::json::parse(f, nullptr, true);
    return infgen::config_from_json(j);
}

infgen::Region parse_region(const std::string& s) {
    int h = 0, w = 0;
    long long oy = 0, ox = 0;
    if (std::sscanf(s.c_str(), "%dx%d%lld%lld", &h, &w, &oy, &ox) != 4 || h < 1 || w < 1)
        throw infgen::Error(infgen::Errc::invalid_argument,
                            "bad region '" + s + "', expected HxW+OY+OX (e.g. 64x64+0+0)");
    return infgen::Region{oy, ox, h, w};
}

std::vector<infgen::StyleCenter> parse_centers(const std::vector<std::string>& specs) {
    std::vector<infgen::StyleCenter> centers;
    for (const std::string& s : specs) {
        infgen::StyleCenter c;
        char extra;
        if (std::sscanf(s.c_str(), "%lf,%lf,%" SCNu64 "%c", &c.x, &c.y, &c.seed, &extra) != 3)
            throw infgen::Error(infgen::Errc::invalid_argument,
                                "bad --center '" + s + "', expected x,y,seed");
        centers.push_back(c);
    }
    return centers;
}

void write_canvas(const infgen::Canvas& canvas, const std::string& path, const std::string& format) {
    std::unique_ptr<infgen::RowWriter> w;
    if (format == "png")
        w = std::make_unique<infgen::PngWriter>(path, canvas.h, canvas.w);
    else if (format == "raw")
        w = std::make_unique<infgen::RawWriter>(path, canvas.h, canvas.w);
    else
        throw infgen::Error(infgen::Errc::invalid_argument, "unknown format '" + format + "'");
    w->write_rows(canvas.rgb.data(), canvas.h);
    w->finish();
}

struct GenerateArgs {
    std::string config = "test";
    std::string weights;
    std::string out = "out.png";
    std::string region = "64x64+0+0";
    std::string format = "png";
    std::uint64_t seed = 0;
    int workers = 1;
    int batch = 1;
    std::vector<std::string> centers;
};

void add_generate_flags(CLI::App* cmd, GenerateArgs& a, bool with_centers) {
    cmd->add_option("--config", a.config, "preset name (test|full) or config JSON path");
    cmd->add_option("--weights", a.weights, "IFGW weight file")->required();
    cmd->add_option("--seed", a.seed, "latent field seed");
    cmd->add_option("--region", a.region, "output region HxW+OY+OX");
    cmd->add_option("--out", a.out, "output path");
    cmd->add_option("--workers", a.workers, "worker threads");
    cmd->add_option("--batch", a.batch, "jobs per scheduler grab");
    cmd->add_option("--format", a.format, "png|raw");
    if (with_centers)
        cmd->add_option("--center", a.centers, "style center as x,y,seed (repeatable)")->required();
}

int run_generate(const GenerateArgs& a, bool fused) {
    infgen::EngineConfig cfg = load_config_arg(a.config);
    infgen::WeightSet ws = infgen::load_weights(a.weights, cfg);
    infgen::RenderRequest req;
    req.region = parse_region(a.region);
    req.seed = a.seed;
    req.workers = a.workers;
    req.batch = a.batch;
    if (fused) req.centers = parse_centers(a.centers);

    // Stream large outputs; tiny ones go through the canvas for simplicity.
    if (static_cast<long long>(req.region.h) * req.region.w > 8ll * 1024 * 1024) {
        std::unique_ptr<infgen::RowWriter> w;
        if (a.format == "png")
            w = std::make_unique<infgen::PngWriter>(a.out, req.region.h, req.region.w);
        else
            w = std::make_unique<infgen::RawWriter>(a.out, req.region.h, req.region.w);
        infgen::render_stream(req, cfg, ws, *w);
    } else {
        write_canvas(infgen::render(req, cfg, ws), a.out, a.format);
    }
    std::printf("wrote %s (%dx%d, %zu jobs)\n", a.out.c_str(), req.region.h, req.region.w,
                infgen::plan_region(req.region, cfg).jobs.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"patch-wise infinite-canvas image synthesis engine"};
    app.require_subcommand(1);

    // init
    auto* init_cmd = app.add_subcommand("init", "create a deterministic weight file");
    std::string init_config = "test", init_out = "weights.ifgw";
    std::uint64_t init_seed = 0;
    init_cmd->add_option("--config", init_config, "preset name or config JSON path");
    init_cmd->add_option("--seed", init_seed, "weight seed");
    init_cmd->add_option("--out", init_out, "output IFGW path")->required();

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "print the tile plan for a region as JSON");
    std::string plan_config = "test", plan_region_s = "64x64+0+0";
    plan_cmd->add_option("--config", plan_config, "preset name or config JSON path");
    plan_cmd->add_option("--region", plan_region_s, "output region HxW+OY+OX");

    // generate / fuse
    GenerateArgs gen_args, fuse_args;
    auto* gen_cmd = app.add_subcommand("generate", "render a region patch by patch");
    add_generate_flags(gen_cmd, gen_args, false);
    auto* fuse_cmd = app.add_subcommand("fuse", "render with spatial style fusion");
    add_generate_flags(fuse_cmd, fuse_args, true);

    // verify-seam
    auto* seam_cmd = app.add_subcommand("verify-seam", "run the seam property trials");
    std::string seam_config = "test";
    std::uint64_t seam_seed = 1;
    int seam_trials = 25;
    seam_cmd->add_option("--config", seam_config, "preset name or config JSON path");
    seam_cmd->add_option("--seed", seam_seed, "base seed");
    seam_cmd->add_option("--trials", seam_trials, "number of random trials");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "parallel scheduling benchmark");
    std::string bench_config = "test", bench_region = "88x88+0+0", bench_workers = "1,2,4", bench_weights;
    std::uint64_t bench_seed = 0;
    int bench_batch = 1;
    bench_cmd->add_option("--config", bench_config, "preset name or config JSON path");
    bench_cmd->add_option("--region", bench_region, "benchmark region HxW+OY+OX");
    bench_cmd->add_option("--workers", bench_workers, "comma-separated worker counts");
    bench_cmd->add_option("--weights", bench_weights, "IFGW weight file (default: init from seed)");
    bench_cmd->add_option("--seed", bench_seed, "seed for fields (and weights when no file given)");
    bench_cmd->add_option("--batch", bench_batch, "jobs per scheduler grab");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (init_cmd->parsed()) {
            infgen::EngineConfig cfg = load_config_arg(init_config);
            infgen::save_weights(infgen::init_weights(cfg, init_seed), init_out);
            std::printf("wrote %s\n", init_out.c_str());
            return 0;
        }
        if (plan_cmd->parsed()) {
            infgen::EngineConfig cfg = load_config_arg(plan_config);
            infgen::TilePlan plan = infgen::plan_region(parse_region(plan_region_s), cfg);
            std::cout << infgen::plan_to_json(plan).dump(2) << "\n";
            return 0;
        }
        if (gen_cmd->parsed()) return run_generate(gen_args, false);
        if (fuse_cmd->parsed()) return run_generate(fuse_args, true);
        if (seam_cmd->parsed()) {
            infgen::EngineConfig cfg = load_config_arg(seam_config);
            infgen::SeamTrialSummary s = infgen::run_seam_trials(cfg, seam_trials, seam_seed);
            std::printf("trials: %d\n", s.trials);
            std::printf("padding-free overlap (runtime): %s\n",
                        s.render_overlap_failures == 0 ? "bit-exact" : "MISMATCH");
            std::printf("padding-free overlap (op-level): %s\n",
                        s.op_overlap_failures == 0 ? "bit-exact" : "MISMATCH");
            std::printf("zero-padded twin: min max-abs overlap diff %.6g (%s)\n", s.min_padded_diff,
                        s.padded_not_failing == 0 ? "inconsistent as expected" : "UNEXPECTEDLY CONSISTENT");
            if (!s.ok()) {
                std::fprintf(stderr, "seam verification FAILED\n");
                return 1;
            }
            std::printf("seam verification passed\n");
            return 0;
        }
        if (bench_cmd->parsed()) {
            infgen::EngineConfig cfg = load_config_arg(bench_config);
            infgen::WeightSet ws = bench_weights.empty() ? infgen::init_weights(cfg, bench_seed)
                                                         : infgen::load_weights(bench_weights, cfg);
            infgen::RenderRequest req;
            req.region = parse_region(bench_region);
            req.seed = bench_seed;
            req.batch = bench_batch;
            std::vector<int> worker_counts;
            std::stringstream ss(bench_workers);
            for (std::string tok; std::getline(ss, tok, ',');) worker_counts.push_back(std::stoi(tok));
            std::printf("%-8s %-8s %-10s %-22s %-10s %s\n", "workers", "batch", "jobs", "time (s/image)",
                        "speedup", "output");
            for (int wcount : worker_counts) {
                req.workers = wcount;
                infgen::BenchResult r = infgen::bench(req, cfg, ws);
                std::printf("%-8d %-8d %-10d %-22.4f x%-9.2f %s\n", wcount, req.batch, r.jobs,
                            r.parallel_seconds, r.speedup, r.outputs_identical ? "identical" : "MISMATCH");
                if (!r.outputs_identical) return 1;
            }
            return 0;
        }
    } catch (const infgen::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
