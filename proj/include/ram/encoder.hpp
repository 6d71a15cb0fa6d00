#pragma once

#include <utility>
#include <vector>

#include "ram/glimpse.hpp"
#include "ram/model_config.hpp"
#include "ram/ops.hpp"
#include "ram/rng.hpp"
#include "ram/tensor.hpp"

namespace ram {

// One convolutional autoencoder layer. The encoder half is
// maxpool(relu(conv)), the decoder half sigmoid(conv(upsample)); both convs
// use same-padding so a [C_in x H x W] patch round-trips to its own shape.
struct ConvAutoencoder {
    TensorPtr enc_kernels; // [C_out x C_in x k x k]
    TensorPtr enc_bias;    // [C_out]
    TensorPtr dec_kernels; // [C_in x C_out x k x k]
    TensorPtr dec_bias;    // [C_in]

    int in_channels() const { return enc_kernels->shape[1]; }
    int out_channels() const { return enc_kernels->shape[0]; }
};

ConvAutoencoder make_cae(int in_channels, int out_channels, int kernel_size,
                         Rng& rng);

// Encoder half only: [C_in x H x W] -> [C_out x H/2 x W/2].
TensorPtr cae_encode(const ConvAutoencoder& cae, const TensorPtr& input);

struct CaeForward {
    TensorPtr code;           // [C_out x H/2 x W/2]
    TensorPtr reconstruction; // [C_in x H x W], values in (0, 1)
};

CaeForward cae_forward(const ConvAutoencoder& cae, const TensorPtr& input);

// Two-layer stack applied to every glimpse patch. Both patches (fine and
// coarse) share these weights.
struct CaeStack {
    ConvAutoencoder cae1; // 1 -> C1 channels
    ConvAutoencoder cae2; // C1 -> C2 channels
};

CaeStack make_cae_stack(const ModelConfig& cfg, Rng& rng);

// Patch -> code1 -> code2 without building reconstruction nodes.
TensorPtr stack_encode(const CaeStack& stack, const TensorPtr& patch);

// Patch -> code1 -> code2 -> decoded code1 -> decoded patch.
TensorPtr stack_reconstruct(const CaeStack& stack, const TensorPtr& patch);

struct PretrainOptions {
    double lr = 0.01;
    double momentum = 0.9;
    int batch_size = 16;
};

struct PretrainResult {
    std::vector<double> cae1_curve; // mean training MSE per epoch
    std::vector<double> cae2_curve;
    bool plateau_warning = false;   // some 5-epoch window saw the MSE rise
};

// Layer-wise pretraining: cae1 learns to reconstruct raw patches, then cae2
// learns to reconstruct cae1 codes (computed with cae1 frozen). Each layer
// trains for `epochs` epochs; epochs == 0 is a no-op.
PretrainResult cae_pretrain(CaeStack& stack,
                            const std::vector<TensorPtr>& patches, int epochs,
                            const PretrainOptions& opts, Rng& rng);

// Mean reconstruction MSE over patches, full stack (both layers). No graph.
double stack_reconstruction_mse(const CaeStack& stack,
                                const std::vector<TensorPtr>& patches);

// Mean reconstruction MSE over patches through cae1 alone. No graph.
double cae1_reconstruction_mse(const CaeStack& stack,
                               const std::vector<TensorPtr>& patches);

// Encodes both patches of a glimpse through the stack and concatenates the
// flattened codes into a single feature vector of length
// ModelConfig::img_feature_dim().
TensorPtr encode_glimpse(const CaeStack& stack, const Glimpse& glimpse);

// Location pathway + fusion producing the per-step input b_t to the core.
struct GlimpseNetParams {
    TensorPtr loc_w;  // [d_loc x 2]
    TensorPtr loc_b;  // [d_loc]
    TensorPtr fuse_w; // [d_b x (d_img + d_loc)]
    TensorPtr fuse_b; // [d_b]
};

GlimpseNetParams make_glimpse_net(const ModelConfig& cfg, Rng& rng);

TensorPtr glimpse_net(const GlimpseNetParams& params, const TensorPtr& img_feat,
                      const Location& loc);

} // namespace ram
