#pragma once

// Independent reference implementations used to check the library. Everything
// here is written from first principles (direct loops, closed forms,
// quadrature) and must stay decoupled from the code under test: when the
// library and an oracle disagree, the oracle wins the argument.

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "ram/glimpse.hpp"
#include "ram/tensor.hpp"

namespace oracles {

// --- convolution ------------------------------------------------------------

// Six-nested-loop cross-correlation, same or valid padding.
inline std::vector<double> conv2d_reference(const std::vector<double>& input,
                                            int c_in, int h, int w,
                                            const std::vector<double>& kernels,
                                            int c_out, int k,
                                            const std::vector<double>& bias,
                                            bool same) {
    const int half = k / 2;
    const int oh = same ? h : h - k + 1;
    const int ow = same ? w : w - k + 1;
    std::vector<double> out(static_cast<std::size_t>(c_out) * oh * ow, 0.0);
    for (int co = 0; co < c_out; ++co) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bias[static_cast<std::size_t>(co)];
                for (int ci = 0; ci < c_in; ++ci) {
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = same ? oy + ky - half : oy + ky;
                            const int ix = same ? ox + kx - half : ox + kx;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            const auto ii = (static_cast<std::size_t>(ci) * h + iy) * w + ix;
                            const auto ki = ((static_cast<std::size_t>(co) * c_in + ci) * k + ky) * k + kx;
                            acc += input[ii] * kernels[ki];
                        }
                    }
                }
                out[(static_cast<std::size_t>(co) * oh + oy) * ow + ox] = acc;
            }
        }
    }
    return out;
}

// --- max pooling ------------------------------------------------------------

// Brute-force 2x2/stride-2 windowed max.
inline std::vector<double> maxpool2d_reference(const std::vector<double>& input,
                                               int c, int h, int w) {
    std::vector<double> out(static_cast<std::size_t>(c) * (h / 2) * (w / 2));
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < h / 2; ++oy) {
            for (int ox = 0; ox < w / 2; ++ox) {
                double best = input[(static_cast<std::size_t>(ch) * h + 2 * oy) * w + 2 * ox];
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const double v =
                            input[(static_cast<std::size_t>(ch) * h + 2 * oy + dy) * w + 2 * ox + dx];
                        if (v > best) best = v;
                    }
                }
                out[(static_cast<std::size_t>(ch) * (h / 2) + oy) * (w / 2) + ox] = best;
            }
        }
    }
    return out;
}

// --- glimpse extraction -------------------------------------------------

// One pixel of the source image, or the pad value outside it.
inline double pixel_or_pad(const ram::TensorPtr& image, int row, int col,
                           double pad) {
    const int side = image->shape[1];
    if (row < 0 || row >= side || col < 0 || col >= side) return pad;
    return image->data[static_cast<std::size_t>(row) * side + col];
}

struct GlimpsePatches {
    std::vector<double> fine;   // g*g
    std::vector<double> coarse; // g*g, block-averaged from the g*scale crop
};

// Per-pixel reference extraction. The window anchor is the rounded center
// pixel minus half the patch side; coarse blocks are summed in row-major
// order and divided once, matching the documented averaging contract.
inline GlimpsePatches reference_glimpse(const ram::TensorPtr& image,
                                        const ram::Location& loc, int g,
                                        int scale, double pad) {
    const int side = image->shape[1];
    const double col_f = (loc.x + 1.0) / 2.0 * (side - 1);
    const double row_f = (loc.y + 1.0) / 2.0 * (side - 1);
    const int crow = static_cast<int>(std::floor(row_f + 0.5));
    const int ccol = static_cast<int>(std::floor(col_f + 0.5));

    GlimpsePatches out;
    out.fine.resize(static_cast<std::size_t>(g) * g);
    const int fine_top = crow - g / 2;
    const int fine_left = ccol - g / 2;
    for (int r = 0; r < g; ++r) {
        for (int c = 0; c < g; ++c) {
            out.fine[static_cast<std::size_t>(r) * g + c] =
                pixel_or_pad(image, fine_top + r, fine_left + c, pad);
        }
    }

    const int big = g * scale;
    const int big_top = crow - big / 2;
    const int big_left = ccol - big / 2;
    out.coarse.resize(static_cast<std::size_t>(g) * g);
    for (int r = 0; r < g; ++r) {
        for (int c = 0; c < g; ++c) {
            double acc = 0.0;
            for (int dy = 0; dy < scale; ++dy) {
                for (int dx = 0; dx < scale; ++dx) {
                    acc += pixel_or_pad(image, big_top + r * scale + dy,
                                        big_left + c * scale + dx, pad);
                }
            }
            out.coarse[static_cast<std::size_t>(r) * g + c] =
                acc / (scale * scale);
        }
    }
    return out;
}

// --- area downscaling ---------------------------------------------------

// Integer-factor box filter: plain mean of each factor x factor block.
inline std::vector<double> block_mean_reference(const std::vector<double>& input,
                                                int h, int w, int factor) {
    const int oh = h / factor;
    const int ow = w / factor;
    std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            double acc = 0.0;
            for (int dy = 0; dy < factor; ++dy) {
                for (int dx = 0; dx < factor; ++dx) {
                    acc += input[(static_cast<std::size_t>(oy) * factor + dy) * w +
                                 ox * factor + dx];
                }
            }
            out[static_cast<std::size_t>(oy) * ow + ox] = acc / (factor * factor);
        }
    }
    return out;
}

// --- one-step Gaussian bandit ---------------------------------------------

// Policy l ~ N(mu, sigma^2 I_2), reward R(l) = -|l - tau|^2. Closed form:
// E[R] = -(|mu - tau|^2 + 2 sigma^2), so dE[R]/dmu = -2 (mu - tau).
inline std::array<double, 2> bandit_grad_closed_form(
    const std::array<double, 2>& mu, const std::array<double, 2>& tau) {
    return {-2.0 * (mu[0] - tau[0]), -2.0 * (mu[1] - tau[1])};
}

// The same gradient by quadrature over the score-function identity,
// dE[R]/dmu_x = Int R(l) * (x - mu_x)/sigma^2 * N(l) dl. The reward splits
// into per-axis terms and the cross term integrates to zero, leaving a
// single 1-D integral per component. Composite Simpson over +-12 sigma.
inline std::array<double, 2> bandit_grad_quadrature(
    const std::array<double, 2>& mu, const std::array<double, 2>& tau,
    double sigma) {
    auto component = [&](double m, double t) {
        const int n = 4000; // even
        const double lo = m - 12.0 * sigma;
        const double hi = m + 12.0 * sigma;
        const double step = (hi - lo) / n;
        const double norm = 1.0 / (std::sqrt(2.0 * M_PI) * sigma);
        auto f = [&](double x) {
            const double pdf =
                norm * std::exp(-(x - m) * (x - m) / (2.0 * sigma * sigma));
            return -(x - t) * (x - t) * (x - m) / (sigma * sigma) * pdf;
        };
        double acc = f(lo) + f(hi);
        for (int i = 1; i < n; ++i) {
            acc += f(lo + i * step) * (i % 2 == 1 ? 4.0 : 2.0);
        }
        return acc * step / 3.0;
    };
    return {component(mu[0], tau[0]), component(mu[1], tau[1])};
}

} // namespace oracles
