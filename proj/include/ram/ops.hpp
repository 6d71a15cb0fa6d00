#pragma once

#include <array>
#include <memory>
#include <vector>

#include "ram/rng.hpp"
#include "ram/tensor.hpp"

namespace ram {

enum class Padding { Same, Valid };

// Trainable parameter with entries drawn uniformly from ±1/sqrt(fan_in).
TensorPtr init_uniform(const std::vector<int>& shape, int fan_in, Rng& rng);

// Trainable parameter filled with a constant (typically a bias).
TensorPtr init_constant(const std::vector<int>& shape, double value);

// --- linear algebra -------------------------------------------------------

// [m x k] * [k x n] -> [m x n].
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

// Fused dense layer: w [out x in], b [out], x [in] -> [out].
TensorPtr linear(const TensorPtr& w, const TensorPtr& b, const TensorPtr& x);

// --- convolution stack -----------------------------------------------------

// input [C_in x H x W], kernels [C_out x C_in x k x k] (k odd), bias [C_out].
// Cross-correlation convention; Same pads with zeros, Valid shrinks.
TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernels,
                 const TensorPtr& bias, Padding padding);

struct MaxPool2dResult {
    TensorPtr output;                          // [C x H/2 x W/2]
    std::shared_ptr<std::vector<int>> argmax;  // flat input index per output
};

// 2x2 max pooling, stride 2; H and W must be even. Ties go to the first
// position in row-major order, and backward routes only to the argmax.
MaxPool2dResult maxpool2d_with_indices(const TensorPtr& input);
TensorPtr maxpool2d(const TensorPtr& input);

// Nearest-neighbour 2x upsampling: [C x H x W] -> [C x 2H x 2W].
TensorPtr upsample_nearest2(const TensorPtr& input);

// --- elementwise -----------------------------------------------------------

TensorPtr relu(const TensorPtr& t);
TensorPtr tanh(const TensorPtr& t);
TensorPtr sigmoid(const TensorPtr& t);
TensorPtr add(const TensorPtr& a, const TensorPtr& b);   // equal shapes
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);   // equal shapes
TensorPtr scale(const TensorPtr& t, double c);           // scalar multiplier

// --- shape -----------------------------------------------------------------

TensorPtr reshape(const TensorPtr& t, std::vector<int> shape);
TensorPtr concat(const std::vector<TensorPtr>& parts);   // rank-1 operands
TensorPtr detach(const TensorPtr& t);

// --- reductions and losses -------------------------------------------------

TensorPtr sum(const TensorPtr& t);

// Mean squared error against a constant target of equal element count.
TensorPtr mse_loss(const TensorPtr& pred, const std::vector<double>& target);

// Numerically stabilised cross entropy on raw logits [K], K >= 2.
TensorPtr softmax_cross_entropy(const TensorPtr& logits, int label);

// log N(x; mean, sigma^2 I_2) for a 2-vector. Gradient flows into mean only.
TensorPtr gaussian_log_pdf(const std::array<double, 2>& x, const TensorPtr& mean,
                           double sigma);

std::vector<double> softmax(const std::vector<double>& logits);

} // namespace ram
