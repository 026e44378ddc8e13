#pragma once

// Independent reference implementation of the autoencoder: plain nested
// loops in double precision, no im2col, no shared code with the library.

#include "autodetect/autoencoder.hpp"
#include "autodetect/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace autodetect::testing {

struct Volume {
    int c = 0, side = 0;
    std::vector<double> v;  // [c][y][x]
    double& at(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * side + y) * side + x]; }
    double at(int ch, int y, int x) const { return v[(static_cast<std::size_t>(ch) * side + y) * side + x]; }
};

inline Volume oracle_upsample(const Volume& in) {
    Volume out{in.c, in.side * 2, std::vector<double>(in.v.size() * 4)};
    for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < out.side; ++y)
            for (int x = 0; x < out.side; ++x) out.at(c, y, x) = in.at(c, y / 2, x / 2);
    return out;
}

// 3x3 conv, zero padding 1; weights [out][in][ky][kx] then bias [out].
inline Volume oracle_conv(const Volume& in, const double* w, const double* b, int out_c, int stride) {
    const int side = (in.side - 1) / stride + 1;
    Volume out{out_c, side, std::vector<double>(static_cast<std::size_t>(out_c) * side * side)};
    for (int o = 0; o < out_c; ++o)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                double acc = b[o];
                for (int i = 0; i < in.c; ++i)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int iy = y * stride + ky - 1, ix = x * stride + kx - 1;
                            if (iy < 0 || ix < 0 || iy >= in.side || ix >= in.side) continue;
                            acc += w[((o * in.c + i) * 3 + ky) * 3 + kx] * in.at(i, iy, ix);
                        }
                out.at(o, y, x) = acc;
            }
    return out;
}

inline std::vector<double> oracle_forward(const ae::ArchDescriptor& arch, const std::vector<double>& params,
                                          const std::vector<double>& input) {
    const auto [c1, c2, c3] = arch.widths;
    const int chans[7] = {arch.channels, c1, c2, c3, c2, c1, arch.channels};
    Volume x{arch.channels, arch.input_side, input};
    std::size_t off = 0;
    for (int l = 0; l < 6; ++l) {
        const int in_c = chans[l], out_c = chans[l + 1];
        if (l >= 3) x = oracle_upsample(x);
        const double* w = params.data() + off;
        off += static_cast<std::size_t>(out_c) * in_c * 9;
        const double* b = params.data() + off;
        off += out_c;
        x = oracle_conv(x, w, b, out_c, l < 3 ? 2 : 1);
        for (auto& z : x.v) z = l < 5 ? std::max(z, 0.0) : 1.0 / (1.0 + std::exp(-z));
    }
    return x.v;
}

inline double oracle_loss(const ae::ArchDescriptor& arch, const std::vector<double>& params,
                          const std::vector<std::vector<double>>& batch) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& in : batch) {
        const auto out = oracle_forward(arch, params, in);
        for (std::size_t i = 0; i < in.size(); ++i) sum += (out[i] - in[i]) * (out[i] - in[i]);
        n += in.size();
    }
    return sum / static_cast<double>(n);
}

struct GradCheck {
    double max_rel_error = 0.0;
    int components = 0;
};

// Compares the library's analytic gradients of a tiny double model against
// central differences of the oracle loss on `count` sampled components.
inline GradCheck gradient_check(std::uint64_t seed, int count, double h = 1e-5) {
    ae::ArchDescriptor arch{8, 3, {2, 2, 2}};
    auto model = ae::init_model_as<double>(arch, seed);
    RngState rng{seed ^ 0x5bd1e995ULL};
    // Non-zero biases so bias gradients flow through every ReLU pattern.
    for (const auto& s : ae::layer_shapes(arch))
        for (int o = 0; o < s.out_channels; ++o) model.params[s.bias_offset + o] = rng_uniform(rng, -0.1, 0.1);

    std::vector<std::vector<double>> batch(2, std::vector<double>(8 * 8 * 3));
    for (auto& img : batch)
        for (auto& v : img) v = rng_uniform(rng);

    std::vector<double> grads;
    ae::loss_and_grads<double>(model, batch, grads);

    GradCheck result;
    for (int k = 0; k < count; ++k) {
        const auto i = static_cast<std::size_t>(rng_below(rng, model.params.size()));
        auto p = model.params;
        p[i] += h;
        const double up = oracle_loss(arch, p, batch);
        p[i] -= 2 * h;
        const double down = oracle_loss(arch, p, batch);
        const double fd = (up - down) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(grads[i]), 1e-8});
        result.max_rel_error = std::max(result.max_rel_error, std::abs(fd - grads[i]) / denom);
        ++result.components;
    }
    return result;
}

}  // namespace autodetect::testing
