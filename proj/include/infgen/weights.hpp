#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "infgen/config.hpp"
#include "infgen/fields.hpp"

namespace infgen {

struct Param {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

struct WeightSet {
    std::vector<Param> params;
    std::unordered_map<std::string, int> index;

    Param& at(const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) throw Error(Errc::not_found, "weights: no parameter named '" + name + "'");
        return params[it->second];
    }
    const Param& at(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) throw Error(Errc::not_found, "weights: no parameter named '" + name + "'");
        return params[it->second];
    }
    bool has(const std::string& name) const { return index.count(name) != 0; }

    void add(Param p) {
        if (index.count(p.name))
            throw Error(Errc::invalid_argument, "weights: duplicate parameter '" + p.name + "'");
        index[p.name] = static_cast<int>(params.size());
        params.push_back(std::move(p));
    }
};

// The full ordered parameter list implied by a config. init_weights fills it;
// load_weights checks files against it.
inline std::vector<Param> weight_manifest(const EngineConfig& cfg) {
    std::vector<Param> m;
    auto add = [&](std::string name, std::vector<std::uint32_t> dims) {
        m.push_back(Param{std::move(name), std::move(dims), {}});
    };

    Pipeline p = build_pipeline(cfg);

    // Mapping network: depth hidden layers, then the projection to the
    // concatenated per-stage style slices.
    int prev = cfg.fields.d_zg;
    for (int i = 0; i < cfg.mapping.depth; ++i) {
        add("map.l" + std::to_string(i) + ".weight",
            {static_cast<std::uint32_t>(cfg.mapping.width), static_cast<std::uint32_t>(prev)});
        add("map.l" + std::to_string(i) + ".bias", {static_cast<std::uint32_t>(cfg.mapping.width)});
        prev = cfg.mapping.width;
    }
    add("map.out.weight", {static_cast<std::uint32_t>(p.style_dim), static_cast<std::uint32_t>(prev)});
    add("map.out.bias", {static_cast<std::uint32_t>(p.style_dim)});

    for (const Stage& s : p.stages) {
        switch (s.kind) {
            case StageKind::unfold:
                break;  // no parameters
            case StageKind::structure_conv:
            case StageKind::to_rgb:
                add(s.name + ".weight", {static_cast<std::uint32_t>(s.out_ch), static_cast<std::uint32_t>(s.in_ch),
                                         static_cast<std::uint32_t>(s.kernel), static_cast<std::uint32_t>(s.kernel)});
                add(s.name + ".bias", {static_cast<std::uint32_t>(s.out_ch)});
                break;
            case StageKind::tconv:
                add(s.name + ".weight", {static_cast<std::uint32_t>(s.out_ch), static_cast<std::uint32_t>(s.in_ch),
                                         static_cast<std::uint32_t>(s.kernel), static_cast<std::uint32_t>(s.kernel)});
                break;
            case StageKind::blur:
                // bias and noise scale of the up path, applied after the blur
                add(s.name + ".bias", {static_cast<std::uint32_t>(s.out_ch)});
                add(s.name + ".noise", {static_cast<std::uint32_t>(s.out_ch)});
                break;
            case StageKind::conv:
                add(s.name + ".weight", {static_cast<std::uint32_t>(s.out_ch), static_cast<std::uint32_t>(s.in_ch),
                                         static_cast<std::uint32_t>(s.kernel), static_cast<std::uint32_t>(s.kernel)});
                add(s.name + ".bias", {static_cast<std::uint32_t>(s.out_ch)});
                add(s.name + ".noise", {static_cast<std::uint32_t>(s.out_ch)});
                break;
        }
    }

    const auto& d = cfg.disc;
    int in_ch = 3;
    for (std::size_t i = 0; i < d.channels.size(); ++i) {
        add("disc.c" + std::to_string(i) + ".weight",
            {static_cast<std::uint32_t>(d.channels[i]), static_cast<std::uint32_t>(in_ch),
             static_cast<std::uint32_t>(d.kernels[i]), static_cast<std::uint32_t>(d.kernels[i])});
        add("disc.c" + std::to_string(i) + ".bias", {static_cast<std::uint32_t>(d.channels[i])});
        in_ch = d.channels[i];
    }
    add("disc.real.weight", {1, static_cast<std::uint32_t>(in_ch), 1, 1});
    add("disc.real.bias", {1});
    add("disc.aux.weight", {1, static_cast<std::uint32_t>(in_ch), 1, 1});
    add("disc.aux.bias", {1});
    return m;
}

// Weight entries draw N(0, 1/sqrt(fan_in)) from the counter-based generator,
// keyed by parameter name and element index; biases and noise scales start at
// zero, except the style projection bias which starts at one so styles sit
// near identity modulation at init. Same (cfg, seed) reproduces byte-identical
// weights.
inline WeightSet init_weights(const EngineConfig& cfg, std::uint64_t seed) {
    WeightSet ws;
    for (Param& p : weight_manifest(cfg)) {
        p.values.assign(p.count(), p.name == "map.out.bias" ? 1.0f : 0.0f);
        bool is_weight = p.name.size() >= 7 && p.name.compare(p.name.size() - 7, 7, ".weight") == 0;
        if (is_weight) {
            std::size_t fan_in = 1;
            for (std::size_t i = 1; i < p.dims.size(); ++i) fan_in *= p.dims[i];
            float sigma = 1.0f / std::sqrt(static_cast<float>(fan_in));
            std::uint64_t tag = rng::fnv1a(p.name);
            for (std::size_t i = 0; i < p.values.size(); ++i)
                p.values[i] = sigma * rng::normal_at(seed, Stream::weight, tag, 0, 0, static_cast<std::int64_t>(i));
        }
        ws.add(std::move(p));
    }
    return ws;
}

// --- IFGW container ---------------------------------------------------------
// magic "IFGW" | u32 version | u32 entry count |
// entries: u16 name length | name bytes | u8 ndim | u32 dims... | f32 data...
// All integers and floats little-endian.

namespace detail {

constexpr std::uint32_t kWeightVersion = 1;

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

struct Reader {
    const unsigned char* p;
    std::size_t n;
    std::size_t at = 0;

    void need(std::size_t k, const char* what) {
        if (at + k > n)
            throw Error(Errc::corrupt_file, std::string("weights: truncated file while reading ") + what);
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(p[at] | (p[at + 1] << 8));
        at += 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[at + i]) << (8 * i);
        at += 4;
        return v;
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return p[at++];
    }
};

}  // namespace detail

inline std::string serialize_weights(const WeightSet& ws) {
    std::string out;
    out += "IFGW";
    detail::put_u32(out, detail::kWeightVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(ws.params.size()));
    for (const Param& p : ws.params) {
        detail::put_u16(out, static_cast<std::uint16_t>(p.name.size()));
        out += p.name;
        out.push_back(static_cast<char>(p.dims.size()));
        for (auto d : p.dims) detail::put_u32(out, d);
        for (float f : p.values) detail::put_f32(out, f);
    }
    return out;
}

inline void save_weights(const WeightSet& ws, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::io_failure, "weights: cannot open '" + path + "' for writing");
    std::string bytes = serialize_weights(ws);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(Errc::io_failure, "weights: write to '" + path + "' failed");
}

inline WeightSet parse_weights(const unsigned char* data, std::size_t n) {
    detail::Reader r{data, n};
    r.need(4, "magic");
    if (std::memcmp(data, "IFGW", 4) != 0) throw Error(Errc::corrupt_file, "weights: bad magic, not an IFGW file");
    r.at = 4;
    std::uint32_t version = r.u32("version");
    if (version != detail::kWeightVersion)
        throw Error(Errc::corrupt_file, "weights: unsupported version " + std::to_string(version));
    std::uint32_t count = r.u32("entry count");
    WeightSet ws;
    for (std::uint32_t e = 0; e < count; ++e) {
        Param p;
        std::uint16_t len = r.u16("name length");
        r.need(len, "name");
        p.name.assign(reinterpret_cast<const char*>(data + r.at), len);
        r.at += len;
        std::uint8_t ndim = r.u8("rank");
        for (int i = 0; i < ndim; ++i) p.dims.push_back(r.u32("dims"));
        std::size_t cnt = p.count();
        r.need(cnt * 4, "tensor data");
        p.values.resize(cnt);
        for (std::size_t i = 0; i < cnt; ++i) {
            std::uint32_t v = r.u32("tensor data");
            float f;
            std::memcpy(&f, &v, 4);
            p.values[i] = f;
        }
        ws.add(std::move(p));
    }
    if (r.at != n) throw Error(Errc::corrupt_file, "weights: trailing bytes after last entry");
    return ws;
}

// Loads and checks the file against the manifest implied by cfg. The first
// entry whose name or shape disagrees is named in the error.
inline WeightSet load_weights(const std::string& path, const EngineConfig& cfg) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::not_found, "weights not found: '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    WeightSet ws = parse_weights(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());

    std::vector<Param> manifest = weight_manifest(cfg);
    if (ws.params.size() != manifest.size())
        throw Error(Errc::shape_mismatch, "weights: file has " + std::to_string(ws.params.size()) +
                                              " entries, config expects " + std::to_string(manifest.size()));
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        if (ws.params[i].name != manifest[i].name)
            throw Error(Errc::shape_mismatch, "weights: entry " + std::to_string(i) + " is '" + ws.params[i].name +
                                                  "', config expects '" + manifest[i].name + "'");
        if (ws.params[i].dims != manifest[i].dims)
            throw Error(Errc::shape_mismatch,
                        "weights: shape mismatch for '" + ws.params[i].name + "' vs config");
    }
    return ws;
}

// Convenience view of a conv parameter as ConvWeights.
inline ConvWeights as_conv(const Param& p) {
    if (p.dims.size() != 4)
        throw Error(Errc::shape_mismatch, "weights: '" + p.name + "' is not a conv tensor");
    ConvWeights w(static_cast<int>(p.dims[0]), static_cast<int>(p.dims[1]), static_cast<int>(p.dims[2]),
                  static_cast<int>(p.dims[3]));
    w.values = p.values;
    return w;
}

}  // namespace infgen
