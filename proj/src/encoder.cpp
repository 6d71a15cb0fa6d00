#include "ram/encoder.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <numeric>

#include "ram/errors.hpp"
#include "ram/optimizer.hpp"

namespace ram {

ConvAutoencoder make_cae(int in_channels, int out_channels, int kernel_size,
                         Rng& rng) {
    const int k = kernel_size;
    ConvAutoencoder cae;
    cae.enc_kernels =
        init_uniform({out_channels, in_channels, k, k}, in_channels * k * k, rng);
    cae.enc_bias = init_constant({out_channels}, 0.0);
    cae.dec_kernels =
        init_uniform({in_channels, out_channels, k, k}, out_channels * k * k, rng);
    cae.dec_bias = init_constant({in_channels}, 0.0);
    return cae;
}

TensorPtr cae_encode(const ConvAutoencoder& cae, const TensorPtr& input) {
    return maxpool2d(relu(conv2d(input, cae.enc_kernels, cae.enc_bias,
                                 Padding::Same)));
}

static TensorPtr cae_decode(const ConvAutoencoder& cae, const TensorPtr& code) {
    return sigmoid(conv2d(upsample_nearest2(code), cae.dec_kernels, cae.dec_bias,
                          Padding::Same));
}

CaeForward cae_forward(const ConvAutoencoder& cae, const TensorPtr& input) {
    CaeForward out;
    out.code = cae_encode(cae, input);
    out.reconstruction = cae_decode(cae, out.code);
    return out;
}

CaeStack make_cae_stack(const ModelConfig& cfg, Rng& rng) {
    CaeStack stack;
    stack.cae1 = make_cae(1, cfg.enc1_channels, cfg.kernel_size, rng);
    stack.cae2 = make_cae(cfg.enc1_channels, cfg.enc2_channels, cfg.kernel_size, rng);
    return stack;
}

TensorPtr stack_encode(const CaeStack& stack, const TensorPtr& patch) {
    return cae_encode(stack.cae2, cae_encode(stack.cae1, patch));
}

TensorPtr stack_reconstruct(const CaeStack& stack, const TensorPtr& patch) {
    const auto code2 = stack_encode(stack, patch);
    return cae_decode(stack.cae1, cae_decode(stack.cae2, code2));
}

static std::vector<double> pretrain_layer(ConvAutoencoder& cae,
                                          const std::vector<TensorPtr>& targets,
                                          int epochs, const PretrainOptions& opts,
                                          Rng& rng) {
    const std::vector<TensorPtr> params = {cae.enc_kernels, cae.enc_bias,
                                           cae.dec_kernels, cae.dec_bias};
    SgdMomentum opt(opts.lr, opts.momentum);
    std::vector<int> order(targets.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> curve;
    curve.reserve(static_cast<std::size_t>(epochs));
    for (int epoch = 0; epoch < epochs; ++epoch) {
        shuffle(order, rng);
        double loss_sum = 0.0;
        std::size_t done = 0;
        while (done < order.size()) {
            const auto batch = std::min<std::size_t>(
                static_cast<std::size_t>(opts.batch_size), order.size() - done);
            for (const auto& p : params) p->zero_grad();
            for (std::size_t j = 0; j < batch; ++j) {
                const auto& target = targets[static_cast<std::size_t>(order[done + j])];
                const auto fwd = cae_forward(cae, target);
                const auto loss = mse_loss(fwd.reconstruction, target->data);
                loss_sum += loss->value();
                backward(scale(loss, 1.0 / static_cast<double>(batch)));
            }
            opt.step(params);
            done += batch;
        }
        curve.push_back(loss_sum / static_cast<double>(order.size()));
    }
    return curve;
}

// The per-epoch training MSE is expected not to rise across any 5-epoch
// window; a violation is survivable (stochastic batches) but worth flagging.
static bool curve_plateau_warning(const char* layer,
                                  const std::vector<double>& curve) {
    bool warned = false;
    for (std::size_t e = 0; e + 5 < curve.size(); ++e) {
        if (curve[e + 5] > curve[e] + 1e-12) {
            std::fprintf(stderr,
                         "warning: %s pretraining MSE rose over epochs %zu..%zu "
                         "(%.6g -> %.6g)\n",
                         layer, e, e + 5, curve[e], curve[e + 5]);
            warned = true;
        }
    }
    return warned;
}

PretrainResult cae_pretrain(CaeStack& stack, const std::vector<TensorPtr>& patches,
                            int epochs, const PretrainOptions& opts, Rng& rng) {
    if (patches.empty()) throw ArgumentError("cae_pretrain: empty patch dataset");
    if (epochs < 0) throw ArgumentError("cae_pretrain: negative epoch count");
    PretrainResult result;
    if (epochs == 0) return result;

    result.cae1_curve = pretrain_layer(stack.cae1, patches, epochs, opts, rng);

    // Freeze cae1 and re-express the dataset as codes for the second layer.
    std::vector<TensorPtr> codes;
    codes.reserve(patches.size());
    {
        NoGradGuard guard;
        for (const auto& p : patches) codes.push_back(cae_encode(stack.cae1, p));
    }
    result.cae2_curve = pretrain_layer(stack.cae2, codes, epochs, opts, rng);

    const bool w1 = curve_plateau_warning("cae1", result.cae1_curve);
    const bool w2 = curve_plateau_warning("cae2", result.cae2_curve);
    result.plateau_warning = w1 || w2;
    return result;
}

static double mean_mse(const std::vector<TensorPtr>& patches,
                       const std::function<TensorPtr(const TensorPtr&)>& recon) {
    if (patches.empty()) throw ArgumentError("reconstruction MSE: empty patch set");
    NoGradGuard guard;
    double total = 0.0;
    for (const auto& p : patches) total += mse_loss(recon(p), p->data)->value();
    return total / static_cast<double>(patches.size());
}

double stack_reconstruction_mse(const CaeStack& stack,
                                const std::vector<TensorPtr>& patches) {
    return mean_mse(patches, [&stack](const TensorPtr& p) {
        return stack_reconstruct(stack, p);
    });
}

double cae1_reconstruction_mse(const CaeStack& stack,
                               const std::vector<TensorPtr>& patches) {
    return mean_mse(patches, [&stack](const TensorPtr& p) {
        return cae_forward(stack.cae1, p).reconstruction;
    });
}

TensorPtr encode_glimpse(const CaeStack& stack, const Glimpse& glimpse) {
    const auto fine = stack_encode(stack, glimpse.fine);
    const auto coarse = stack_encode(stack, glimpse.coarse);
    return concat({reshape(fine, {fine->numel()}),
                   reshape(coarse, {coarse->numel()})});
}

GlimpseNetParams make_glimpse_net(const ModelConfig& cfg, Rng& rng) {
    GlimpseNetParams p;
    const int d_img = cfg.img_feature_dim();
    const int d_loc = cfg.loc_feature_dim;
    p.loc_w = init_uniform({d_loc, 2}, 2, rng);
    p.loc_b = init_constant({d_loc}, 0.0);
    p.fuse_w = init_uniform({cfg.glimpse_feature_dim, d_img + d_loc}, d_img + d_loc, rng);
    p.fuse_b = init_constant({cfg.glimpse_feature_dim}, 0.0);
    return p;
}

TensorPtr glimpse_net(const GlimpseNetParams& params, const TensorPtr& img_feat,
                      const Location& loc) {
    const auto loc_in = make_tensor({2}, {loc.x, loc.y});
    const auto loc_feat = relu(linear(params.loc_w, params.loc_b, loc_in));
    const auto fused = concat({img_feat, loc_feat});
    return relu(linear(params.fuse_w, params.fuse_b, fused));
}

} // namespace ram
