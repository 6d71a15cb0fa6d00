#include "ram/optimizer.hpp"

namespace ram {

SgdMomentum::SgdMomentum(double lr, double momentum) : lr_(lr), momentum_(momentum) {
    if (lr < 0.0) throw ConfigError("sgd: learning rate must not be negative");
    if (momentum < 0.0 || momentum >= 1.0) {
        throw ConfigError("sgd: momentum must lie in [0, 1)");
    }
}

void SgdMomentum::set_lr(double lr) {
    if (lr < 0.0) throw ConfigError("sgd: learning rate must not be negative");
    lr_ = lr;
}

void SgdMomentum::step(const std::vector<TensorPtr>& params) {
    for (const auto& p : params) {
        if (!p->grad.empty() && p->grad.size() != p->data.size()) {
            throw DimensionError("sgd: gradient shape mismatch");
        }
        auto& v = velocity_[p.get()];
        if (v.size() != p->data.size()) v.assign(p->data.size(), 0.0);
        for (std::size_t i = 0; i < p->data.size(); ++i) {
            const double g = p->grad.empty() ? 0.0 : p->grad[i];
            v[i] = momentum_ * v[i] + g;
            p->data[i] -= lr_ * v[i];
        }
    }
}

} // namespace ram
