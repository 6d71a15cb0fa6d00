#pragma once

// Shared test machinery: the central finite-difference gradient checker and
// small fixture builders used across the suites.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ram/model_config.hpp"
#include "ram/rng.hpp"
#include "ram/tensor.hpp"

namespace ramtest {

// Rebuilds the full forward graph and returns the scalar loss node. Called
// once for the analytic pass and twice per checked entry for the numeric one.
using LossFn = std::function<ram::TensorPtr()>;

struct GradCheck {
    double max_err = 0.0;
    int entries = 0;
    std::string worst; // "name[i]" of the largest error
};

// |analytic - numeric| relative to max(|analytic|, |numeric|, floor). The
// floor keeps finite-difference roundoff on near-zero entries from being
// amplified into spurious relative errors; above it the measure is the
// plain relative error.
inline double scaled_err(double analytic, double numeric, double floor_v) {
    const double m =
        std::max({std::abs(analytic), std::abs(numeric), floor_v});
    return std::abs(analytic - numeric) / m;
}

inline GradCheck check_gradients(
    const std::vector<std::pair<std::string, ram::TensorPtr>>& params,
    const LossFn& loss_fn, double h = 1e-5, double floor_v = 1e-3) {
    for (const auto& [name, p] : params) p->zero_grad();
    ram::backward(loss_fn());

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& [name, p] : params) {
        analytic.push_back(p->grad.empty()
                               ? std::vector<double>(p->data.size(), 0.0)
                               : p->grad);
    }

    GradCheck result;
    ram::NoGradGuard guard;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi].second;
        for (std::size_t i = 0; i < p->data.size(); ++i) {
            const double orig = p->data[i];
            p->data[i] = orig + h;
            const double f_plus = loss_fn()->value();
            p->data[i] = orig - h;
            const double f_minus = loss_fn()->value();
            p->data[i] = orig;
            const double numeric = (f_plus - f_minus) / (2.0 * h);
            const double err = scaled_err(analytic[pi][i], numeric, floor_v);
            ++result.entries;
            if (err > result.max_err) {
                result.max_err = err;
                result.worst =
                    params[pi].first + "[" + std::to_string(i) + "]";
            }
        }
    }
    for (const auto& [name, p] : params) p->zero_grad();
    return result;
}

// Fixed pseudo-random weights in [0.5, 1.5], so a probe-weighted sum is
// sensitive to every output entry with a distinct coefficient.
inline ram::TensorPtr probe_like(const ram::TensorPtr& t, ram::Rng& rng) {
    std::vector<double> w(t->data.size());
    for (auto& v : w) v = rng.uniform(0.5, 1.5);
    return ram::make_tensor(t->shape, std::move(w));
}

inline ram::TensorPtr random_tensor(std::vector<int> shape, ram::Rng& rng,
                                    double lo = -1.0, double hi = 1.0,
                                    bool requires_grad = false) {
    const int n = ram::numel_of(shape);
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = rng.uniform(lo, hi);
    return ram::make_tensor(std::move(shape), std::move(data), requires_grad);
}

inline ram::TensorPtr random_image(int side, ram::Rng& rng) {
    std::vector<double> data(static_cast<std::size_t>(side) * side);
    for (auto& v : data) v = rng.uniform01();
    return ram::make_tensor({1, side, side}, std::move(data));
}

// Small architecture used by the composed gradient checks and the trainer
// suites: big enough to exercise every path, small enough for per-entry
// finite differencing.
inline ram::ModelConfig tiny_model_config() {
    ram::ModelConfig cfg;
    cfg.image_side = 32;
    cfg.glimpse_size = 8;
    cfg.glimpse_scale = 2;
    cfg.enc1_channels = 4;
    cfg.enc2_channels = 6;
    cfg.kernel_size = 3;
    cfg.loc_feature_dim = 8;
    cfg.glimpse_feature_dim = 16;
    cfg.hidden_dim = 16;
    cfg.num_classes = 2;
    cfg.n_glimpses = 4;
    cfg.sigma = 0.2;
    return cfg;
}

} // namespace ramtest
