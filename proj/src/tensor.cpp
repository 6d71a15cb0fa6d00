#include "ram/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace ram {

namespace {
thread_local bool g_grad_enabled = true;
}

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set(bool on) { g_grad_enabled = on; }

GradMode::NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
GradMode::NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

int numel_of(const std::vector<int>& shape) {
    int n = 1;
    for (int e : shape) {
        if (e <= 0) throw DimensionError("tensor extents must be positive");
        n *= e;
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_, bool requires_grad_)
    : shape(std::move(shape_)), data(std::move(data_)), requires_grad(requires_grad_) {
    if (numel_of(shape) != static_cast<int>(data.size())) {
        throw DimensionError("tensor data length does not match shape " + shape_str(shape));
    }
}

double Tensor::value() const {
    if (!is_scalar()) throw ArgumentError("value() requires a scalar tensor");
    return data[0];
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    grad.assign(data.size(), 0.0);
}

void Tensor::accumulate_grad(const std::vector<double>& g) {
    if (g.size() != data.size()) throw DimensionError("gradient size mismatch");
    ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

bool Tensor::has_nonfinite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return true;
    }
    for (double v : grad) {
        if (!std::isfinite(v)) return true;
    }
    return false;
}

TensorPtr make_tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), std::move(data), requires_grad);
}

TensorPtr zeros(std::vector<int> shape, bool requires_grad) {
    const int n = numel_of(shape);
    return make_tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

TensorPtr full(std::vector<int> shape, double v, bool requires_grad) {
    const int n = numel_of(shape);
    return make_tensor(std::move(shape), std::vector<double>(n, v), requires_grad);
}

TensorPtr scalar_tensor(double v, bool requires_grad) {
    return make_tensor({1}, {v}, requires_grad);
}

TensorPtr make_node(std::vector<int> shape, std::vector<double> data,
                    std::vector<TensorPtr> parents,
                    std::function<void(Tensor&)> backward_fn) {
    bool track = false;
    if (GradMode::enabled()) {
        for (const auto& p : parents) {
            if (p && p->requires_grad) {
                track = true;
                break;
            }
        }
    }
    auto out = make_tensor(std::move(shape), std::move(data), false);
    if (track) {
        out->requires_grad = true;
        out->parents = std::move(parents);
        out->backward_fn = std::move(backward_fn);
    }
    return out;
}

void backward(const TensorPtr& loss) {
    if (!loss) throw ArgumentError("backward: null loss");
    if (!loss->is_scalar()) throw ArgumentError("backward: loss must be a scalar");
    if (loss->parents.empty()) {
        throw GraphError("backward: tensor is not part of a graph");
    }
    if (loss->backward_done) {
        throw GraphError("backward: already called on this loss");
    }
    loss->backward_done = true;

    // Iterative post-order DFS; reverse of the resulting order is the
    // backward visitation order.
    std::vector<Tensor*> topo;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->parents.size()) {
            Tensor* p = node->parents[next_child].get();
            ++next_child;
            if (p && p->requires_grad && visited.insert(p).second) {
                stack.emplace_back(p, 0);
            }
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    loss->ensure_grad();
    loss->grad[0] += 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Tensor* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            node->backward_fn(*node);
        }
    }
}

} // namespace ram
