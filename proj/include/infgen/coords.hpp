#pragma once

#include <cmath>
#include <numbers>

#include "infgen/tensor.hpp"

namespace infgen {

// Integer position on the z_l lattice. Valid over |i| <= 2^40; all derived
// lattice arithmetic in the planner stays inside int64.
struct GlobalIndex {
    long long iy = 0;
    long long ix = 0;

    friend bool operator==(const GlobalIndex&, const GlobalIndex&) = default;
};

struct CoordEncoding {
    float tanh_y;
    float cos_x;
    float sin_x;
};

// Horizontal axis: phase on a literal integer period (cos/sin pair). The
// horizontal index is reduced mod period in integer arithmetic first, so
// encode(i_x + period) is bit-identical to encode(i_x). Vertical axis:
// saturating tanh of i_y / v_scale.
inline CoordEncoding encode(GlobalIndex idx, long long period, double v_scale) {
    if (period < 2) throw Error(Errc::invalid_argument, "encode: period must be >= 2");
    if (!(v_scale > 0.0)) throw Error(Errc::invalid_argument, "encode: v_scale must be positive");
    long long m = idx.ix % period;
    if (m < 0) m += period;
    double phase = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(period);
    return CoordEncoding{
        static_cast<float>(std::tanh(static_cast<double>(idx.iy) / v_scale)),
        static_cast<float>(std::cos(phase)),
        static_cast<float>(std::sin(phase)),
    };
}

// Per-pixel encoded coordinates for a window of the z_l lattice.
// Channel 0: tanh(i_y / v_scale), channel 1: cos, channel 2: sin.
struct CoordGrid {
    GlobalIndex origin;
    Tensor planes;
};

inline CoordGrid build_grid(GlobalIndex origin, int h, int w, long long period, double v_scale) {
    if (h < 1 || w < 1) throw Error(Errc::invalid_argument, "build_grid: size must be >= 1");
    CoordGrid g;
    g.origin = origin;
    g.planes = Tensor(3, h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            CoordEncoding e = encode({origin.iy + r, origin.ix + c}, period, v_scale);
            g.planes.at(0, r, c) = e.tanh_y;
            g.planes.at(1, r, c) = e.cos_x;
            g.planes.at(2, r, c) = e.sin_x;
        }
    return g;
}

}  // namespace infgen
