#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "stegattn/ops.hpp"
#include "stegattn/tensor.hpp"

namespace stegattn {

/// Reverse-mode tape. Each operation returns a node holding its forward value
/// plus a closure that pushes the node's gradient into its parents. backward()
/// runs the closures in reverse topological order.
template <typename T>
class Var {
public:
    Tensor<T> value;
    Tensor<T> grad;  // allocated by backward() for reachable tracked nodes
    bool requires_grad = false;
    bool grad_valid = false;
    const char* op_name = "leaf";
    std::vector<std::shared_ptr<Var>> parents;
    std::function<void(Var&)> backprop;
};

template <typename T>
using VarPtr = std::shared_ptr<Var<T>>;

/// Trainable leaf: participates in gradient computation.
template <typename T>
VarPtr<T> make_leaf(Tensor<T> value) {
    auto v = std::make_shared<Var<T>>();
    v->value = std::move(value);
    v->requires_grad = true;
    return v;
}

/// Non-trainable input (images, fixed targets).
template <typename T>
VarPtr<T> make_constant(Tensor<T> value) {
    auto v = std::make_shared<Var<T>>();
    v->value = std::move(value);
    return v;
}

namespace detail {

// Test hook: when set to an op name, backward() perturbs that op's first
// parent gradient so finite-difference checks must fail.
inline std::string& corrupt_backward_op() {
    static std::string name;
    return name;
}

template <typename T>
VarPtr<T> make_node(const char* op, std::vector<VarPtr<T>> parents, Tensor<T> value,
                    std::function<void(Var<T>&)> backprop) {
    auto v = std::make_shared<Var<T>>();
    v->op_name = op;
    v->value = std::move(value);
    v->parents = std::move(parents);
    for (const auto& p : v->parents)
        if (p->requires_grad) v->requires_grad = true;
    if (v->requires_grad) v->backprop = std::move(backprop);
    return v;
}

template <typename T>
void ensure_grad(const VarPtr<T>& v) {
    if (v->requires_grad && v->grad.empty())
        v->grad = Tensor<T>(v->value.n, v->value.c, v->value.h, v->value.w);
}

}  // namespace detail

// ---- differentiable operations ----

template <typename T>
VarPtr<T> conv2d(const VarPtr<T>& x, const VarPtr<T>& weight, const VarPtr<T>& bias,
                 const Padding& pad) {
    Tensor<T> y = conv2d_forward(x->value, weight->value, bias->value, pad);
    return detail::make_node<T>(
        "conv2d", {x, weight, bias}, std::move(y), [pad](Var<T>& self) {
            auto &x = self.parents[0], &w = self.parents[1], &b = self.parents[2];
            conv2d_backward(x->value, w->value, pad, self.grad,
                            x->requires_grad ? &x->grad : nullptr,
                            w->requires_grad ? &w->grad : nullptr,
                            b->requires_grad ? &b->grad : nullptr);
        });
}

template <typename T>
VarPtr<T> relu(const VarPtr<T>& x) {
    return detail::make_node<T>("relu", {x}, relu_forward(x->value), [](Var<T>& self) {
        auto& x = self.parents[0];
        if (!x->requires_grad) return;
        for (std::size_t i = 0; i < x->grad.size(); ++i)
            if (x->value.data[i] > T(0)) x->grad.data[i] += self.grad.data[i];
    });
}

template <typename T>
VarPtr<T> sigmoid(const VarPtr<T>& x) {
    return detail::make_node<T>("sigmoid", {x}, sigmoid_forward(x->value), [](Var<T>& self) {
        auto& x = self.parents[0];
        if (!x->requires_grad) return;
        for (std::size_t i = 0; i < x->grad.size(); ++i) {
            T s = self.value.data[i];
            x->grad.data[i] += self.grad.data[i] * s * (T(1) - s);
        }
    });
}

template <typename T>
VarPtr<T> concat_channels(const std::vector<VarPtr<T>>& parts) {
    std::vector<const Tensor<T>*> raw;
    raw.reserve(parts.size());
    for (const auto& p : parts) raw.push_back(&p->value);
    return detail::make_node<T>("concat_channels", parts, concat_channels_forward(raw),
                                [](Var<T>& self) {
                                    int coff = 0;
                                    for (auto& p : self.parents) {
                                        if (p->requires_grad) {
                                            const std::size_t chw =
                                                static_cast<std::size_t>(p->value.c) *
                                                p->value.h * p->value.w;
                                            for (int in = 0; in < p->value.n; ++in) {
                                                const T* src =
                                                    &self.grad.data[self.grad.index(in, coff, 0, 0)];
                                                T* dst = &p->grad.data[p->grad.index(in, 0, 0, 0)];
                                                for (std::size_t i = 0; i < chw; ++i) dst[i] += src[i];
                                            }
                                        }
                                        coff += p->value.c;
                                    }
                                });
}

template <typename T>
VarPtr<T> global_pool(const VarPtr<T>& x, PoolKind kind) {
    auto argmax = std::make_shared<std::vector<int>>();
    Tensor<T> y = global_pool_forward(x->value, kind, kind == PoolKind::Max ? argmax.get() : nullptr);
    return detail::make_node<T>("global_pool", {x}, std::move(y), [kind, argmax](Var<T>& self) {
        auto& x = self.parents[0];
        if (!x->requires_grad) return;
        const std::size_t hw = static_cast<std::size_t>(x->value.h) * x->value.w;
        for (int in = 0; in < x->value.n; ++in)
            for (int ic = 0; ic < x->value.c; ++ic) {
                T g = self.grad.at(in, ic, 0, 0);
                T* dst = &x->grad.data[x->grad.index(in, ic, 0, 0)];
                if (kind == PoolKind::Avg) {
                    T gshare = g / static_cast<T>(hw);
                    for (std::size_t i = 0; i < hw; ++i) dst[i] += gshare;
                } else {
                    dst[(*argmax)[static_cast<std::size_t>(in) * x->value.c + ic]] += g;
                }
            }
    });
}

template <typename T>
VarPtr<T> channel_pool(const VarPtr<T>& x, PoolKind kind) {
    auto argmax = std::make_shared<std::vector<int>>();
    Tensor<T> y = channel_pool_forward(x->value, kind, kind == PoolKind::Max ? argmax.get() : nullptr);
    return detail::make_node<T>("channel_pool", {x}, std::move(y), [kind, argmax](Var<T>& self) {
        auto& x = self.parents[0];
        if (!x->requires_grad) return;
        const std::size_t hw = static_cast<std::size_t>(x->value.h) * x->value.w;
        for (int in = 0; in < x->value.n; ++in) {
            const T* g = &self.grad.data[self.grad.index(in, 0, 0, 0)];
            T* dst = &x->grad.data[x->grad.index(in, 0, 0, 0)];
            if (kind == PoolKind::Avg) {
                for (int ic = 0; ic < x->value.c; ++ic)
                    for (std::size_t i = 0; i < hw; ++i)
                        dst[ic * hw + i] += g[i] / static_cast<T>(x->value.c);
            } else {
                for (std::size_t i = 0; i < hw; ++i)
                    dst[(*argmax)[static_cast<std::size_t>(in) * hw + i] * hw + i] += g[i];
            }
        }
    });
}

template <typename T>
VarPtr<T> broadcast_mul(const VarPtr<T>& x, const VarPtr<T>& map) {
    Tensor<T> y = broadcast_mul_forward(x->value, map->value);
    return detail::make_node<T>("broadcast_mul", {x, map}, std::move(y), [](Var<T>& self) {
        auto &x = self.parents[0], &m = self.parents[1];
        const bool per_channel = (m->value.h == 1 && m->value.w == 1);
        const std::size_t hw = static_cast<std::size_t>(x->value.h) * x->value.w;
        for (int in = 0; in < x->value.n; ++in)
            for (int ic = 0; ic < x->value.c; ++ic) {
                const T* g = &self.grad.data[self.grad.index(in, ic, 0, 0)];
                const T* xv = &x->value.data[x->value.index(in, ic, 0, 0)];
                if (per_channel) {
                    T mv = m->value.at(in, ic, 0, 0);
                    if (x->requires_grad) {
                        T* dst = &x->grad.data[x->grad.index(in, ic, 0, 0)];
                        for (std::size_t i = 0; i < hw; ++i) dst[i] += g[i] * mv;
                    }
                    if (m->requires_grad) {
                        T acc = 0;
                        for (std::size_t i = 0; i < hw; ++i) acc += g[i] * xv[i];
                        m->grad.at(in, ic, 0, 0) += acc;
                    }
                } else {
                    const T* mv = &m->value.data[m->value.index(in, 0, 0, 0)];
                    if (x->requires_grad) {
                        T* dst = &x->grad.data[x->grad.index(in, ic, 0, 0)];
                        for (std::size_t i = 0; i < hw; ++i) dst[i] += g[i] * mv[i];
                    }
                    if (m->requires_grad) {
                        T* dst = &m->grad.data[m->grad.index(in, 0, 0, 0)];
                        for (std::size_t i = 0; i < hw; ++i) dst[i] += g[i] * xv[i];
                    }
                }
            }
    });
}

template <typename T>
VarPtr<T> dense(const VarPtr<T>& x, const VarPtr<T>& weight, const VarPtr<T>& bias) {
    Tensor<T> y = dense_forward(x->value, weight->value, bias->value);
    return detail::make_node<T>("dense", {x, weight, bias}, std::move(y), [](Var<T>& self) {
        auto &x = self.parents[0], &w = self.parents[1], &b = self.parents[2];
        const int n = x->value.n, in_dim = w->value.c, out_dim = w->value.n;
        if (x->requires_grad)  // dX += gY * W
            detail::gemm<T>(CblasNoTrans, CblasNoTrans, n, in_dim, out_dim, T(1),
                            self.grad.data.data(), out_dim, w->value.data.data(), in_dim, T(1),
                            x->grad.data.data(), in_dim);
        if (w->requires_grad)  // dW += gY^T * X
            detail::gemm<T>(CblasTrans, CblasNoTrans, out_dim, in_dim, n, T(1),
                            self.grad.data.data(), out_dim, x->value.data.data(), in_dim, T(1),
                            w->grad.data.data(), in_dim);
        if (b->requires_grad)
            for (int in = 0; in < n; ++in)
                for (int o = 0; o < out_dim; ++o)
                    b->grad.data[o] += self.grad.at(in, o, 0, 0);
    });
}

template <typename T>
VarPtr<T> add(const VarPtr<T>& a, const VarPtr<T>& b) {
    require_same_shape(a->value, b->value, "add");
    Tensor<T> y = a->value;
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += b->value.data[i];
    return detail::make_node<T>("add", {a, b}, std::move(y), [](Var<T>& self) {
        for (auto& p : self.parents)
            if (p->requires_grad)
                for (std::size_t i = 0; i < p->grad.size(); ++i)
                    p->grad.data[i] += self.grad.data[i];
    });
}

template <typename T>
VarPtr<T> scale(const VarPtr<T>& x, T s) {
    Tensor<T> y = x->value;
    for (T& v : y.data) v *= s;
    return detail::make_node<T>("scale", {x}, std::move(y), [s](Var<T>& self) {
        auto& x = self.parents[0];
        if (!x->requires_grad) return;
        for (std::size_t i = 0; i < x->grad.size(); ++i)
            x->grad.data[i] += s * self.grad.data[i];
    });
}

/// Mean squared error as a 1x1x1x1 graph node.
template <typename T>
VarPtr<T> mse(const VarPtr<T>& a, const VarPtr<T>& b) {
    Tensor<T> y(1, 1, 1, 1);
    y.data[0] = mse_forward(a->value, b->value);
    return detail::make_node<T>("mse", {a, b}, std::move(y), [](Var<T>& self) {
        auto &a = self.parents[0], &b = self.parents[1];
        const T g = self.grad.data[0] * T(2) / static_cast<T>(a->value.size());
        for (std::size_t i = 0; i < a->value.size(); ++i) {
            T d = g * (a->value.data[i] - b->value.data[i]);
            if (a->requires_grad) a->grad.data[i] += d;
            if (b->requires_grad) b->grad.data[i] -= d;
        }
    });
}

// ---- backward driver ----

/// Accumulates d(loss)/d(node) into node->grad for every tracked node
/// reachable from the scalar loss. Existing grads in the graph are reset.
template <typename T>
void backward(const VarPtr<T>& loss) {
    if (loss->value.size() != 1)
        throw UsageError("backward: loss must be scalar, got " + loss->value.shape_str());

    // Iterative post-order topological sort.
    std::vector<Var<T>*> order;
    std::unordered_set<Var<T>*> visited;
    std::vector<std::pair<VarPtr<T>, std::size_t>> stack;
    stack.emplace_back(loss, 0);
    visited.insert(loss.get());
    std::vector<VarPtr<T>> keepalive;  // topo order as shared ptrs
    keepalive.push_back(loss);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            auto& p = node->parents[next++];
            if (visited.insert(p.get()).second) {
                keepalive.push_back(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node.get());
            stack.pop_back();
        }
    }

    for (auto& v : keepalive) {
        v->grad_valid = true;
        if (v->requires_grad) {
            detail::ensure_grad(v);
            std::fill(v->grad.data.begin(), v->grad.data.end(), T(0));
        }
    }
    if (!loss->requires_grad) return;
    loss->grad.data[0] = T(1);
    const std::string& corrupt = detail::corrupt_backward_op();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Var<T>* v = *it;
        if (v->requires_grad && v->backprop) {
            v->backprop(*v);
            if (!corrupt.empty() && corrupt == v->op_name)
                for (auto& p : v->parents)
                    if (p->requires_grad && !p->grad.empty()) {
                        p->grad.data[0] += T(0.05);
                        break;
                    }
        }
    }
}

/// d(loss)/d(v) after backward(). Exactly zero when the loss reached v but
/// does not depend on it; UsageError when v was not in the graph at all.
template <typename T>
const Tensor<T>& grad(const VarPtr<T>& v) {
    if (!v->grad_valid || v->grad.empty())
        throw UsageError("grad: value is not part of the differentiated graph");
    return v->grad;
}

/// Like grad(), but nullptr for values the graph never touched (e.g. the
/// attention parameters of a wiring that does not use them).
template <typename T>
const Tensor<T>* grad_if_present(const VarPtr<T>& v) {
    return (v->grad_valid && !v->grad.empty()) ? &v->grad : nullptr;
}

}  // namespace stegattn
