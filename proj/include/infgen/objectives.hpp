#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "infgen/config.hpp"
#include "infgen/kernels.hpp"
#include "infgen/weights.hpp"

// Executable evaluators for the training objective. No autograd: the two
// gradient regularizers are central finite differences over the provided
// forward functions, computed in double so they match analytic values on
// linear maps to ~1e-8.

namespace infgen {

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

struct AdvLosses {
    double d_loss = 0.0;
    double g_loss = 0.0;
};

// Non-saturating logistic losses from raw discriminator scores.
inline AdvLosses adv_losses(std::span<const double> d_real, std::span<const double> d_fake) {
    if (d_real.empty() || d_fake.empty())
        throw Error(Errc::invalid_argument, "adv_losses: empty score batch");
    double dr = 0.0, df = 0.0, g = 0.0;
    for (double v : d_real) dr += softplus(-v);
    for (double v : d_fake) {
        df += softplus(v);
        g += softplus(-v);
    }
    return AdvLosses{dr / static_cast<double>(d_real.size()) + df / static_cast<double>(d_fake.size()),
                     g / static_cast<double>(d_fake.size())};
}

// Mean L1 between predicted and target vertical coordinates.
inline double aux_coord_loss(std::span<const double> c_hat_y, std::span<const double> c_bar_y) {
    if (c_hat_y.size() != c_bar_y.size())
        throw Error(Errc::shape_mismatch, "aux_coord_loss: length mismatch " + std::to_string(c_hat_y.size()) +
                                              " vs " + std::to_string(c_bar_y.size()));
    if (c_hat_y.empty()) throw Error(Errc::invalid_argument, "aux_coord_loss: empty batch");
    double s = 0.0;
    for (std::size_t i = 0; i < c_hat_y.size(); ++i) s += std::abs(c_hat_y[i] - c_bar_y[i]);
    return s / static_cast<double>(c_hat_y.size());
}

using ScalarFn = std::function<double(std::span<const double>)>;
using VectorFn = std::function<std::vector<double>(std::span<const double>)>;

// 1/2 * ||grad_x D(x)||^2 by central differences, one probe pair per element.
inline double r1_penalty_fd(const ScalarFn& d_forward, std::span<const double> x, double h) {
    if (!(h > 0.0)) throw Error(Errc::invalid_argument, "r1_penalty_fd: h must be positive");
    std::vector<double> p(x.begin(), x.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double keep = p[i];
        p[i] = keep + h;
        double up = d_forward(p);
        p[i] = keep - h;
        double dn = d_forward(p);
        p[i] = keep;
        if (!std::isfinite(up) || !std::isfinite(dn))
            throw Error(Errc::non_finite, "r1_penalty_fd: non-finite discriminator output");
        double g = (up - dn) / (2.0 * h);
        acc += g * g;
    }
    return 0.5 * acc;
}

// (||J^T y|| - a)^2 with J^T y estimated by one probe pair per latent
// coordinate: (J^T y)_i = <(G(z+h e_i) - G(z-h e_i)) / 2h, y>.
inline double path_length_fd(const VectorFn& g_forward, std::span<const double> z, std::span<const double> y,
                             double a, double h) {
    if (!(h > 0.0)) throw Error(Errc::invalid_argument, "path_length_fd: h must be positive");
    std::vector<double> p(z.begin(), z.end());
    double norm2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double keep = p[i];
        p[i] = keep + h;
        std::vector<double> up = g_forward(p);
        p[i] = keep - h;
        std::vector<double> dn = g_forward(p);
        p[i] = keep;
        if (up.size() != y.size() || dn.size() != y.size())
            throw Error(Errc::shape_mismatch, "path_length_fd: generator output does not match y");
        double dot = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) {
            double d = (up[j] - dn[j]) / (2.0 * h);
            if (!std::isfinite(d)) throw Error(Errc::non_finite, "path_length_fd: non-finite generator output");
            dot += d * y[j];
        }
        norm2 += dot * dot;
    }
    double n = std::sqrt(norm2);
    return (n - a) * (n - a);
}

struct ObjectiveComponents {
    AdvLosses adv;
    double l_ar = 0.0;
    double l_div = 0.0;
    double l_r1 = 0.0;
    double l_path = 0.0;
};

struct TotalObjectives {
    double d_total = 0.0;
    double g_total = 0.0;
};

// Weighted sums of the discriminator and generator objectives. adv.g_loss is
// already the generator's minimization form of the adversarial term.
inline TotalObjectives total_objectives(const ObjectiveComponents& c, const LossWeights& w) {
    TotalObjectives t;
    t.d_total = c.adv.d_loss + w.ar * c.l_ar + w.r1 * c.l_r1;
    t.g_total = c.adv.g_loss + w.ar * c.l_ar + w.div * c.l_div + w.path * c.l_path;
    return t;
}

// Regression target for a real crop: its vertical center row mapped onto
// tanh's range over the full image height.
inline double real_vertical_target(long long patch_center_row, long long image_height) {
    if (image_height < 2) throw Error(Errc::invalid_argument, "real_vertical_target: image height must be >= 2");
    return 2.0 * static_cast<double>(patch_center_row) / static_cast<double>(image_height - 1) - 1.0;
}

struct DiscriminatorScores {
    double realness = 0.0;
    double c_hat_y = 0.0;
};

// Strided valid conv trunk down to 1x1, then two 1x1 heads off the same
// features: a realness score and the vertical-coordinate regression.
inline DiscriminatorScores forward_discriminator(const Tensor& x, const EngineConfig& cfg, const WeightSet& ws) {
    const auto& d = cfg.disc;
    if (x.channels != 3 || x.height != patch_size(cfg) || x.width != patch_size(cfg))
        throw Error(Errc::shape_mismatch, "discriminator: input must be 3x" + std::to_string(patch_size(cfg)) +
                                              "x" + std::to_string(patch_size(cfg)));
    Tensor cur = x;
    for (std::size_t i = 0; i < d.channels.size(); ++i) {
        const Param& wp = ws.at("disc.c" + std::to_string(i) + ".weight");
        const Param& bp = ws.at("disc.c" + std::to_string(i) + ".bias");
        ConvWeights w = as_conv(wp);
        int stride = d.strides[i];
        Tensor full = conv2d_valid(cur, w, bp.values);
        if (stride > 1) {
            int oh = (full.height - 1) / stride + 1;
            int ow = (full.width - 1) / stride + 1;
            Tensor sub(full.channels, oh, ow);
            for (int c = 0; c < full.channels; ++c)
                for (int yy = 0; yy < oh; ++yy)
                    for (int xx = 0; xx < ow; ++xx) sub.at(c, yy, xx) = full.at(c, yy * stride, xx * stride);
            cur = std::move(sub);
        } else {
            cur = std::move(full);
        }
        scaled_leaky_relu_inplace(cur, 0.2f);
    }
    if (cur.height != 1 || cur.width != 1)
        throw Error(Errc::shape_mismatch, "discriminator: trunk did not reduce to 1x1");

    auto head = [&](const std::string& name) {
        const Param& wp = ws.at(name + ".weight");
        const Param& bp = ws.at(name + ".bias");
        double acc = bp.values[0];
        for (int c = 0; c < cur.channels; ++c) acc += double(wp.values[static_cast<std::size_t>(c)]) * cur.at(c, 0, 0);
        return acc;
    };
    return DiscriminatorScores{head("disc.real"), head("disc.aux")};
}

}  // namespace infgen
