#include "ram/ops.hpp"

#include <algorithm>
#include <cmath>

namespace ram {

namespace {

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a->shape) +
                             " vs " + shape_str(b->shape));
    }
}

void require_rank(const TensorPtr& t, int rank, const char* op) {
    if (static_cast<int>(t->shape.size()) != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                             ", got " + shape_str(t->shape));
    }
}

} // namespace

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const int m = a->shape[0], k = a->shape[1];
    const int k2 = b->shape[0], n = b->shape[1];
    if (k != k2) {
        throw DimensionError("matmul: inner dimensions disagree " + shape_str(a->shape) +
                             " vs " + shape_str(b->shape));
    }
    std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
    const double* A = a->data.data();
    const double* B = b->data.data();
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            const double* Brow = B + p * n;
            double* Orow = out.data() + i * n;
            for (int j = 0; j < n; ++j) Orow[j] += av * Brow[j];
        }
    }
    return make_node({m, n}, std::move(out), {a, b}, [a, b, m, k, n](Tensor& o) {
        const double* G = o.grad.data();
        if (a->requires_grad) {
            a->ensure_grad();
            double* dA = a->grad.data();
            const double* B = b->data.data();
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double g = G[i * n + j];
                    const double* Brow = B + j; // column j
                    for (int p = 0; p < k; ++p) dA[i * k + p] += g * Brow[p * n];
                }
            }
        }
        if (b->requires_grad) {
            b->ensure_grad();
            double* dB = b->grad.data();
            const double* A = a->data.data();
            for (int p = 0; p < k; ++p) {
                for (int i = 0; i < m; ++i) {
                    const double av = A[i * k + p];
                    const double* Grow = G + i * n;
                    double* Brow = dB + p * n;
                    for (int j = 0; j < n; ++j) Brow[j] += av * Grow[j];
                }
            }
        }
    });
}

TensorPtr linear(const TensorPtr& w, const TensorPtr& b, const TensorPtr& x) {
    require_rank(w, 2, "linear");
    require_rank(b, 1, "linear");
    require_rank(x, 1, "linear");
    const int out_dim = w->shape[0], in_dim = w->shape[1];
    if (x->shape[0] != in_dim) {
        throw DimensionError("linear: input size " + shape_str(x->shape) +
                             " does not match weight " + shape_str(w->shape));
    }
    if (b->shape[0] != out_dim) {
        throw DimensionError("linear: bias size " + shape_str(b->shape) +
                             " does not match weight " + shape_str(w->shape));
    }
    std::vector<double> out(out_dim);
    const double* W = w->data.data();
    const double* X = x->data.data();
    for (int i = 0; i < out_dim; ++i) {
        double acc = b->data[i];
        const double* Wrow = W + static_cast<std::size_t>(i) * in_dim;
        for (int j = 0; j < in_dim; ++j) acc += Wrow[j] * X[j];
        out[i] = acc;
    }
    return make_node({out_dim}, std::move(out), {w, b, x},
                     [w, b, x, out_dim, in_dim](Tensor& o) {
        const double* G = o.grad.data();
        if (w->requires_grad) {
            w->ensure_grad();
            double* dW = w->grad.data();
            const double* X = x->data.data();
            for (int i = 0; i < out_dim; ++i) {
                const double g = G[i];
                double* row = dW + static_cast<std::size_t>(i) * in_dim;
                for (int j = 0; j < in_dim; ++j) row[j] += g * X[j];
            }
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (int i = 0; i < out_dim; ++i) b->grad[i] += G[i];
        }
        if (x->requires_grad) {
            x->ensure_grad();
            double* dX = x->grad.data();
            const double* W = w->data.data();
            for (int i = 0; i < out_dim; ++i) {
                const double g = G[i];
                const double* row = W + static_cast<std::size_t>(i) * in_dim;
                for (int j = 0; j < in_dim; ++j) dX[j] += g * row[j];
            }
        }
    });
}

TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernels,
                 const TensorPtr& bias, Padding padding) {
    require_rank(input, 3, "conv2d");
    require_rank(kernels, 4, "conv2d");
    require_rank(bias, 1, "conv2d");
    const int c_in = input->shape[0], H = input->shape[1], W = input->shape[2];
    const int c_out = kernels->shape[0];
    const int k = kernels->shape[2];
    if (kernels->shape[2] != kernels->shape[3]) {
        throw ConfigError("conv2d: kernels must be square");
    }
    if (k % 2 == 0) throw ConfigError("conv2d: kernel size must be odd");
    if (kernels->shape[1] != c_in) {
        throw DimensionError("conv2d: kernel channel count " + shape_str(kernels->shape) +
                             " does not match input " + shape_str(input->shape));
    }
    if (bias->shape[0] != c_out) {
        throw DimensionError("conv2d: bias size does not match kernel count");
    }
    if (padding == Padding::Valid && (k > H || k > W)) {
        throw DimensionError("conv2d: kernel larger than input for valid padding");
    }
    const int pad = padding == Padding::Same ? k / 2 : 0;
    const int Ho = padding == Padding::Same ? H : H - k + 1;
    const int Wo = padding == Padding::Same ? W : W - k + 1;

    std::vector<double> out(static_cast<std::size_t>(c_out) * Ho * Wo);
    const double* IN = input->data.data();
    const double* K = kernels->data.data();
    for (int o = 0; o < c_out; ++o) {
        const double bv = bias->data[o];
        for (int y = 0; y < Ho; ++y) {
            for (int x = 0; x < Wo; ++x) {
                double acc = bv;
                for (int c = 0; c < c_in; ++c) {
                    const double* plane = IN + (static_cast<std::size_t>(c) * H) * W;
                    const double* ker = K + ((static_cast<std::size_t>(o) * c_in + c) * k) * k;
                    for (int i = 0; i < k; ++i) {
                        const int yy = y + i - pad;
                        if (yy < 0 || yy >= H) continue;
                        for (int j = 0; j < k; ++j) {
                            const int xx = x + j - pad;
                            if (xx < 0 || xx >= W) continue;
                            acc += plane[yy * W + xx] * ker[i * k + j];
                        }
                    }
                }
                out[(static_cast<std::size_t>(o) * Ho + y) * Wo + x] = acc;
            }
        }
    }
    return make_node({c_out, Ho, Wo}, std::move(out), {input, kernels, bias},
                     [input, kernels, bias, c_in, c_out, H, W, Ho, Wo, k, pad](Tensor& o) {
        const double* G = o.grad.data();
        if (bias->requires_grad) {
            bias->ensure_grad();
            for (int oc = 0; oc < c_out; ++oc) {
                double acc = 0.0;
                const double* g = G + static_cast<std::size_t>(oc) * Ho * Wo;
                for (int i = 0; i < Ho * Wo; ++i) acc += g[i];
                bias->grad[oc] += acc;
            }
        }
        if (kernels->requires_grad) {
            kernels->ensure_grad();
            double* dK = kernels->grad.data();
            const double* IN = input->data.data();
            for (int oc = 0; oc < c_out; ++oc) {
                for (int c = 0; c < c_in; ++c) {
                    const double* plane = IN + (static_cast<std::size_t>(c) * H) * W;
                    double* dk = dK + ((static_cast<std::size_t>(oc) * c_in + c) * k) * k;
                    for (int i = 0; i < k; ++i) {
                        for (int j = 0; j < k; ++j) {
                            double acc = 0.0;
                            for (int y = 0; y < Ho; ++y) {
                                const int yy = y + i - pad;
                                if (yy < 0 || yy >= H) continue;
                                const double* grow =
                                    G + (static_cast<std::size_t>(oc) * Ho + y) * Wo;
                                for (int x = 0; x < Wo; ++x) {
                                    const int xx = x + j - pad;
                                    if (xx < 0 || xx >= W) continue;
                                    acc += grow[x] * plane[yy * W + xx];
                                }
                            }
                            dk[i * k + j] += acc;
                        }
                    }
                }
            }
        }
        if (input->requires_grad) {
            input->ensure_grad();
            double* dI = input->grad.data();
            const double* K = kernels->data.data();
            for (int oc = 0; oc < c_out; ++oc) {
                for (int y = 0; y < Ho; ++y) {
                    const double* grow = G + (static_cast<std::size_t>(oc) * Ho + y) * Wo;
                    for (int x = 0; x < Wo; ++x) {
                        const double g = grow[x];
                        if (g == 0.0) continue;
                        for (int c = 0; c < c_in; ++c) {
                            double* plane = dI + (static_cast<std::size_t>(c) * H) * W;
                            const double* ker =
                                K + ((static_cast<std::size_t>(oc) * c_in + c) * k) * k;
                            for (int i = 0; i < k; ++i) {
                                const int yy = y + i - pad;
                                if (yy < 0 || yy >= H) continue;
                                for (int j = 0; j < k; ++j) {
                                    const int xx = x + j - pad;
                                    if (xx < 0 || xx >= W) continue;
                                    plane[yy * W + xx] += g * ker[i * k + j];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
}

MaxPool2dResult maxpool2d_with_indices(const TensorPtr& input) {
    require_rank(input, 3, "maxpool2d");
    const int C = input->shape[0], H = input->shape[1], W = input->shape[2];
    if (H % 2 != 0 || W % 2 != 0) {
        throw DimensionError("maxpool2d: spatial extents must be even, got " +
                             shape_str(input->shape));
    }
    const int Ho = H / 2, Wo = W / 2;
    std::vector<double> out(static_cast<std::size_t>(C) * Ho * Wo);
    auto argmax = std::make_shared<std::vector<int>>(out.size());
    const double* IN = input->data.data();
    for (int c = 0; c < C; ++c) {
        for (int y = 0; y < Ho; ++y) {
            for (int x = 0; x < Wo; ++x) {
                // Row-major scan with strict > keeps the first max on ties.
                double best = -1.0;
                int best_idx = -1;
                for (int i = 0; i < 2; ++i) {
                    for (int j = 0; j < 2; ++j) {
                        const int idx = (c * H + 2 * y + i) * W + 2 * x + j;
                        if (best_idx < 0 || IN[idx] > best) {
                            best = IN[idx];
                            best_idx = idx;
                        }
                    }
                }
                const int oidx = (c * Ho + y) * Wo + x;
                out[oidx] = best;
                (*argmax)[oidx] = best_idx;
            }
        }
    }
    auto node = make_node({C, Ho, Wo}, std::move(out), {input}, [input, argmax](Tensor& o) {
        if (!input->requires_grad) return;
        input->ensure_grad();
        for (std::size_t i = 0; i < argmax->size(); ++i) {
            input->grad[(*argmax)[i]] += o.grad[i];
        }
    });
    return {node, argmax};
}

TensorPtr maxpool2d(const TensorPtr& input) {
    return maxpool2d_with_indices(input).output;
}

TensorPtr upsample_nearest2(const TensorPtr& input) {
    require_rank(input, 3, "upsample_nearest2");
    const int C = input->shape[0], H = input->shape[1], W = input->shape[2];
    std::vector<double> out(static_cast<std::size_t>(C) * 4 * H * W);
    const double* IN = input->data.data();
    for (int c = 0; c < C; ++c) {
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                const double v = IN[(c * H + y) * W + x];
                const int base = (c * 2 * H + 2 * y) * 2 * W + 2 * x;
                out[base] = v;
                out[base + 1] = v;
                out[base + 2 * W] = v;
                out[base + 2 * W + 1] = v;
            }
        }
    }
    return make_node({C, 2 * H, 2 * W}, std::move(out), {input}, [input, C, H, W](Tensor& o) {
        if (!input->requires_grad) return;
        input->ensure_grad();
        const double* G = o.grad.data();
        for (int c = 0; c < C; ++c) {
            for (int y = 0; y < H; ++y) {
                for (int x = 0; x < W; ++x) {
                    const int base = (c * 2 * H + 2 * y) * 2 * W + 2 * x;
                    input->grad[(c * H + y) * W + x] +=
                        G[base] + G[base + 1] + G[base + 2 * W] + G[base + 2 * W + 1];
                }
            }
        }
    });
}

TensorPtr relu(const TensorPtr& t) {
    std::vector<double> out(t->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = t->data[i] > 0.0 ? t->data[i] : 0.0;
    return make_node(t->shape, std::move(out), {t}, [t](Tensor& o) {
        if (!t->requires_grad) return;
        t->ensure_grad();
        // Subgradient at exactly 0 is 0.
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
            if (t->data[i] > 0.0) t->grad[i] += o.grad[i];
        }
    });
}

TensorPtr tanh(const TensorPtr& t) {
    std::vector<double> out(t->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(t->data[i]);
    return make_node(t->shape, std::move(out), {t}, [t](Tensor& o) {
        if (!t->requires_grad) return;
        t->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
            t->grad[i] += o.grad[i] * (1.0 - o.data[i] * o.data[i]);
        }
    });
}

TensorPtr sigmoid(const TensorPtr& t) {
    std::vector<double> out(t->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = t->data[i];
        out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                          : std::exp(v) / (1.0 + std::exp(v));
    }
    return make_node(t->shape, std::move(out), {t}, [t](Tensor& o) {
        if (!t->requires_grad) return;
        t->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
            t->grad[i] += o.grad[i] * o.data[i] * (1.0 - o.data[i]);
        }
    });
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
    return make_node(a->shape, std::move(out), {a, b}, [a, b](Tensor& o) {
        if (a->requires_grad) a->accumulate_grad(o.grad);
        if (b->requires_grad) b->accumulate_grad(o.grad);
    });
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
    return make_node(a->shape, std::move(out), {a, b}, [a, b](Tensor& o) {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) a->grad[i] += o.grad[i] * b->data[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) b->grad[i] += o.grad[i] * a->data[i];
        }
    });
}

TensorPtr scale(const TensorPtr& t, double c) {
    std::vector<double> out(t->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = t->data[i] * c;
    return make_node(t->shape, std::move(out), {t}, [t, c](Tensor& o) {
        if (!t->requires_grad) return;
        t->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) t->grad[i] += o.grad[i] * c;
    });
}

TensorPtr reshape(const TensorPtr& t, std::vector<int> shape) {
    if (numel_of(shape) != t->numel()) {
        throw DimensionError("reshape: element count mismatch " + shape_str(t->shape) +
                             " -> " + shape_str(shape));
    }
    return make_node(std::move(shape), t->data, {t}, [t](Tensor& o) {
        if (t->requires_grad) t->accumulate_grad(o.grad);
    });
}

TensorPtr concat(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw ArgumentError("concat: no operands");
    std::vector<double> out;
    for (const auto& p : parts) {
        require_rank(p, 1, "concat");
        out.insert(out.end(), p->data.begin(), p->data.end());
    }
    const int total = static_cast<int>(out.size());
    return make_node({total}, std::move(out), parts, [parts](Tensor& o) {
        std::size_t off = 0;
        for (const auto& p : parts) {
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::size_t i = 0; i < p->data.size(); ++i) p->grad[i] += o.grad[off + i];
            }
            off += p->data.size();
        }
    });
}

TensorPtr detach(const TensorPtr& t) {
    return make_tensor(t->shape, t->data, false);
}

TensorPtr sum(const TensorPtr& t) {
    double acc = 0.0;
    for (double v : t->data) acc += v;
    return make_node({1}, {acc}, {t}, [t](Tensor& o) {
        if (!t->requires_grad) return;
        t->ensure_grad();
        const double g = o.grad[0];
        for (std::size_t i = 0; i < t->grad.size(); ++i) t->grad[i] += g;
    });
}

TensorPtr mse_loss(const TensorPtr& pred, const std::vector<double>& target) {
    if (pred->data.size() != target.size()) {
        throw DimensionError("mse_loss: target size mismatch");
    }
    const double n = static_cast<double>(target.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = pred->data[i] - target[i];
        acc += d * d;
    }
    return make_node({1}, {acc / n}, {pred}, [pred, target, n](Tensor& o) {
        if (!pred->requires_grad) return;
        pred->ensure_grad();
        const double g = o.grad[0] * 2.0 / n;
        for (std::size_t i = 0; i < target.size(); ++i) {
            pred->grad[i] += g * (pred->data[i] - target[i]);
        }
    });
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

TensorPtr softmax_cross_entropy(const TensorPtr& logits, int label) {
    require_rank(logits, 1, "softmax_cross_entropy");
    const int K = logits->shape[0];
    if (K < 2) throw DimensionError("softmax_cross_entropy: need at least two classes");
    if (label < 0 || label >= K) {
        throw ArgumentError("softmax_cross_entropy: label " + std::to_string(label) +
                            " out of range [0," + std::to_string(K) + ")");
    }
    // loss = logsumexp(logits) - logits[label], max-subtracted for stability.
    const double mx = *std::max_element(logits->data.begin(), logits->data.end());
    double z = 0.0;
    for (double v : logits->data) z += std::exp(v - mx);
    const double loss = mx + std::log(z) - logits->data[label];
    return make_node({1}, {loss}, {logits}, [logits, label](Tensor& o) {
        if (!logits->requires_grad) return;
        logits->ensure_grad();
        const auto p = softmax(logits->data);
        const double g = o.grad[0];
        for (std::size_t i = 0; i < p.size(); ++i) {
            logits->grad[i] += g * (p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
        }
    });
}

TensorPtr init_uniform(const std::vector<int>& shape, int fan_in, Rng& rng) {
    if (fan_in < 1) throw ArgumentError("init_uniform: fan_in must be positive");
    auto t = zeros(shape, /*requires_grad=*/true);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t->data) v = rng.uniform(-bound, bound);
    return t;
}

TensorPtr init_constant(const std::vector<int>& shape, double value) {
    auto t = zeros(shape, /*requires_grad=*/true);
    for (auto& v : t->data) v = value;
    return t;
}

TensorPtr gaussian_log_pdf(const std::array<double, 2>& x, const TensorPtr& mean,
                           double sigma) {
    require_rank(mean, 1, "gaussian_log_pdf");
    if (mean->shape[0] != 2) {
        throw DimensionError("gaussian_log_pdf: mean must be a 2-vector");
    }
    if (sigma <= 0.0) throw ConfigError("gaussian_log_pdf: sigma must be positive");
    const double var = sigma * sigma;
    const double dx = x[0] - mean->data[0];
    const double dy = x[1] - mean->data[1];
    const double logp = -std::log(2.0 * M_PI * var) - (dx * dx + dy * dy) / (2.0 * var);
    return make_node({1}, {logp}, {mean}, [mean, x, var](Tensor& o) {
        if (!mean->requires_grad) return;
        mean->ensure_grad();
        const double g = o.grad[0];
        mean->grad[0] += g * (x[0] - mean->data[0]) / var;
        mean->grad[1] += g * (x[1] - mean->data[1]) / var;
    });
}

} // namespace ram
