#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ram/errors.hpp"

namespace ram {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Thread-local switch for graph construction. While disabled, operators
// compute values only and attach no parents or backward rules.
class GradMode {
public:
    static bool enabled();
    static void set(bool on);

    // RAII guard disabling graph construction in the current scope.
    class NoGradGuard {
    public:
        NoGradGuard();
        ~NoGradGuard();
        NoGradGuard(const NoGradGuard&) = delete;
        NoGradGuard& operator=(const NoGradGuard&) = delete;

    private:
        bool prev_;
    };
};

using NoGradGuard = GradMode::NoGradGuard;

// Dense row-major tensor of 64-bit floats. Doubles as a node in the
// per-forward-pass autodiff tape: interior nodes carry their operand
// references and a local gradient rule.
class Tensor : public std::enable_shared_from_this<Tensor> {
public:
    std::vector<int> shape;
    std::vector<double> data;   // row-major, size == product(shape)
    std::vector<double> grad;   // empty until first accumulation
    bool requires_grad = false;

    std::vector<TensorPtr> parents;
    // Local gradient rule: reads this->grad, accumulates into parents.
    std::function<void(Tensor&)> backward_fn;
    bool backward_done = false;

    Tensor(std::vector<int> shape_, std::vector<double> data_, bool requires_grad_);

    int numel() const { return static_cast<int>(data.size()); }
    bool is_scalar() const { return data.size() == 1; }

    // Scalar value; throws ArgumentError on non-scalars.
    double value() const;

    // Allocate (or keep) a zero gradient buffer matching data.
    void ensure_grad();
    void zero_grad();
    void accumulate_grad(const std::vector<double>& g);

    // True if any stored value or gradient entry is NaN or infinite.
    bool has_nonfinite() const;
};

int numel_of(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data,
                      bool requires_grad = false);
TensorPtr zeros(std::vector<int> shape, bool requires_grad = false);
TensorPtr full(std::vector<int> shape, double v, bool requires_grad = false);
TensorPtr scalar_tensor(double v, bool requires_grad = false);

// Shared constructor for operator results. When grad mode is on and any
// parent requires grad, the node joins the tape with the given rule;
// otherwise a plain constant tensor is returned.
TensorPtr make_node(std::vector<int> shape, std::vector<double> data,
                    std::vector<TensorPtr> parents,
                    std::function<void(Tensor&)> backward_fn);

// Reverse-topological gradient accumulation from a scalar loss.
// Throws ArgumentError on non-scalar losses, GraphError when the loss is
// detached from any graph or backward already ran on it. Gradients
// accumulate additively into leaves across repeated calls on distinct
// losses; zero them explicitly between optimizer steps.
void backward(const TensorPtr& loss);

} // namespace ram
