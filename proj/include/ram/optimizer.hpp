#pragma once

#include <unordered_map>
#include <vector>

#include "ram/tensor.hpp"

namespace ram {

// SGD with classical momentum: v <- momentum * v + g; p <- p - lr * v.
// Velocity buffers are keyed by parameter identity and created lazily.
class SgdMomentum {
public:
    SgdMomentum(double lr, double momentum);

    // One update over the given parameters using their accumulated grads.
    // Empty grads count as zero (momentum still decays).
    void step(const std::vector<TensorPtr>& params);

    double lr() const { return lr_; }
    void set_lr(double lr);

private:
    double lr_;
    double momentum_;
    std::unordered_map<const Tensor*, std::vector<double>> velocity_;
};

} // namespace ram
