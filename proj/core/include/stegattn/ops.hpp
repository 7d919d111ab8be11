#pragma once

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "stegattn/parallel.hpp"
#include "stegattn/tensor.hpp"

namespace stegattn {

/// Zero padding around the input, one extent per edge. Asymmetric padding is
/// needed for even kernels (4x4 keeps h,w constant only with (1,2,1,2)).
struct Padding {
    int top = 0, bottom = 0, left = 0, right = 0;
};

inline Padding same_padding_for_kernel(int k) {
    switch (k) {
        case 1: return {0, 0, 0, 0};
        case 3: return {1, 1, 1, 1};
        case 4: return {1, 2, 1, 2};
        case 5: return {2, 2, 2, 2};
        case 7: return {3, 3, 3, 3};
        default:
            throw ShapeError("no same-padding rule for kernel size " + std::to_string(k));
    }
}

enum class PoolKind { Avg, Max };

namespace detail {

template <typename T>
inline void gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, int m, int n, int k,
                 T alpha, const T* a, int lda, const T* b, int ldb, T beta, T* c, int ldc) {
    if constexpr (std::is_same_v<T, float>)
        cblas_sgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    else
        cblas_dgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// Unrolls one image (c, h, w) into a (c*kh*kw) x (oh*ow) matrix with zero
// padding, matching the row-major (cout, cin, kh, kw) weight layout.
template <typename T>
void im2col(const T* img, int c, int h, int w, int kh, int kw, const Padding& pad,
            int oh, int ow, T* col) {
    for (int ic = 0; ic < c; ++ic) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                T* row = col + (static_cast<std::size_t>(ic) * kh * kw + ky * kw + kx) *
                                   (static_cast<std::size_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy + ky - pad.top;
                    if (iy < 0 || iy >= h) {
                        std::fill(row + static_cast<std::size_t>(oy) * ow,
                                  row + static_cast<std::size_t>(oy + 1) * ow, T(0));
                        continue;
                    }
                    const T* src = img + (static_cast<std::size_t>(ic) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox + kx - pad.left;
                        row[static_cast<std::size_t>(oy) * ow + ox] =
                            (ix >= 0 && ix < w) ? src[ix] : T(0);
                    }
                }
            }
        }
    }
}

// Scatter-add inverse of im2col.
template <typename T>
void col2im(const T* col, int c, int h, int w, int kh, int kw, const Padding& pad,
            int oh, int ow, T* img) {
    for (int ic = 0; ic < c; ++ic) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                const T* row = col + (static_cast<std::size_t>(ic) * kh * kw + ky * kw + kx) *
                                         (static_cast<std::size_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy + ky - pad.top;
                    if (iy < 0 || iy >= h) continue;
                    T* dst = img + (static_cast<std::size_t>(ic) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox + kx - pad.left;
                        if (ix >= 0 && ix < w) dst[ix] += row[static_cast<std::size_t>(oy) * ow + ox];
                    }
                }
            }
        }
    }
}

}  // namespace detail

/// Cross-correlation with zero padding, stride 1. weight: (cout, cin, kh, kw),
/// bias: (1, cout, 1, 1).
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                         const Padding& pad) {
    const int cout = weight.n, cin = weight.c, kh = weight.h, kw = weight.w;
    if (x.c != cin)
        throw ShapeError("conv2d: input has " + std::to_string(x.c) +
                         " channels but weight expects " + std::to_string(cin));
    if (bias.c != cout || bias.n != 1 || bias.h != 1 || bias.w != 1)
        throw ShapeError("conv2d: bias shape " + bias.shape_str() + " != 1x" +
                         std::to_string(cout) + "x1x1");
    const int oh = x.h + pad.top + pad.bottom - kh + 1;
    const int ow = x.w + pad.left + pad.right - kw + 1;
    if (oh < 1 || ow < 1)
        throw ShapeError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                         " larger than padded input " + x.shape_str());

    Tensor<T> y(x.n, cout, oh, ow);
    const std::size_t K = static_cast<std::size_t>(cin) * kh * kw;
    const std::size_t HW = static_cast<std::size_t>(oh) * ow;
    parallel_for(x.n, [&](int in) {
        std::vector<T> col(K * HW);
        detail::im2col(&x.data[x.index(in, 0, 0, 0)], cin, x.h, x.w, kh, kw, pad, oh, ow,
                       col.data());
        T* out = &y.data[y.index(in, 0, 0, 0)];
        detail::gemm<T>(CblasNoTrans, CblasNoTrans, cout, static_cast<int>(HW),
                        static_cast<int>(K), T(1), weight.data.data(), static_cast<int>(K),
                        col.data(), static_cast<int>(HW), T(0), out, static_cast<int>(HW));
        for (int oc = 0; oc < cout; ++oc) {
            T b = bias.data[oc];
            T* ch = out + static_cast<std::size_t>(oc) * HW;
            for (std::size_t i = 0; i < HW; ++i) ch[i] += b;
        }
    });
    return y;
}

/// Gradients of conv2d_forward. Any of the output pointers may be null to
/// skip that gradient. Accumulates into pre-zeroed tensors of the right shape.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Padding& pad,
                     const Tensor<T>& gy, Tensor<T>* gx, Tensor<T>* gw, Tensor<T>* gb) {
    const int cout = weight.n, cin = weight.c, kh = weight.h, kw = weight.w;
    const int oh = gy.h, ow = gy.w;
    const std::size_t K = static_cast<std::size_t>(cin) * kh * kw;
    const std::size_t HW = static_cast<std::size_t>(oh) * ow;

    if (gb) {
        for (int in = 0; in < x.n; ++in)
            for (int oc = 0; oc < cout; ++oc) {
                const T* ch = &gy.data[gy.index(in, oc, 0, 0)];
                T s = 0;
                for (std::size_t i = 0; i < HW; ++i) s += ch[i];
                gb->data[oc] += s;
            }
    }
    if (!gx && !gw) return;

    // Per-image weight-gradient buffers keep the accumulation order fixed
    // regardless of thread count; summed sequentially afterwards.
    std::vector<Tensor<T>> gw_per;
    if (gw) gw_per.assign(x.n, Tensor<T>(cout, cin, kh, kw));
    parallel_for(x.n, [&](int in) {
        std::vector<T> col(K * HW);
        detail::im2col(&x.data[x.index(in, 0, 0, 0)], cin, x.h, x.w, kh, kw, pad, oh, ow,
                       col.data());
        const T* g = &gy.data[gy.index(in, 0, 0, 0)];
        if (gw) {
            // dW = gY (cout x HW) * col^T (HW x K)
            detail::gemm<T>(CblasNoTrans, CblasTrans, cout, static_cast<int>(K),
                            static_cast<int>(HW), T(1), g, static_cast<int>(HW), col.data(),
                            static_cast<int>(HW), T(0), gw_per[in].data.data(),
                            static_cast<int>(K));
        }
        if (gx) {
            // dcol = W^T (K x cout) * gY (cout x HW), then scatter back.
            detail::gemm<T>(CblasTrans, CblasNoTrans, static_cast<int>(K),
                            static_cast<int>(HW), cout, T(1), weight.data.data(),
                            static_cast<int>(K), g, static_cast<int>(HW), T(0), col.data(),
                            static_cast<int>(HW));
            detail::col2im(col.data(), cin, x.h, x.w, kh, kw, pad, oh, ow,
                           &gx->data[gx->index(in, 0, 0, 0)]);
        }
    });
    if (gw)
        for (int in = 0; in < x.n; ++in)
            for (std::size_t i = 0; i < gw->size(); ++i) gw->data[i] += gw_per[in].data[i];
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> y = x;
    for (T& v : y.data) v = std::max(T(0), v);
    return y;
}

template <typename T>
T sigmoid_scalar(T v) {
    // Split on sign so exp never overflows; clamp into the open interval so
    // saturated inputs cannot round to exactly 0 or 1.
    T s;
    if (v >= 0) {
        s = T(1) / (T(1) + std::exp(-v));
    } else {
        T e = std::exp(v);
        s = e / (T(1) + e);
    }
    const T hi = T(1) - std::numeric_limits<T>::epsilon() / T(2);
    const T lo = std::numeric_limits<T>::min();
    return std::clamp(s, lo, hi);
}

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& x) {
    Tensor<T> y = x;
    for (T& v : y.data) v = sigmoid_scalar(v);
    return y;
}

template <typename T>
Tensor<T> concat_channels_forward(const std::vector<const Tensor<T>*>& parts) {
    if (parts.empty()) throw ShapeError("concat_channels: no parts");
    int ctot = 0;
    for (const auto* p : parts) {
        if (p->n != parts[0]->n || p->h != parts[0]->h || p->w != parts[0]->w)
            throw ShapeError("concat_channels: part " + p->shape_str() +
                             " incompatible with " + parts[0]->shape_str());
        ctot += p->c;
    }
    Tensor<T> y(parts[0]->n, ctot, parts[0]->h, parts[0]->w);
    for (int in = 0; in < y.n; ++in) {
        int coff = 0;
        for (const auto* p : parts) {
            std::copy(&p->data[p->index(in, 0, 0, 0)],
                      &p->data[p->index(in, 0, 0, 0)] + static_cast<std::size_t>(p->c) * p->h * p->w,
                      &y.data[y.index(in, coff, 0, 0)]);
            coff += p->c;
        }
    }
    return y;
}

/// Channels [c0, c0+len) of x as a standalone tensor.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c0, int len) {
    if (c0 < 0 || len < 1 || c0 + len > x.c)
        throw ShapeError("slice_channels: [" + std::to_string(c0) + "," +
                         std::to_string(c0 + len) + ") out of " + std::to_string(x.c));
    Tensor<T> y(x.n, len, x.h, x.w);
    for (int in = 0; in < x.n; ++in)
        std::copy(&x.data[x.index(in, c0, 0, 0)],
                  &x.data[x.index(in, c0, 0, 0)] + static_cast<std::size_t>(len) * x.h * x.w,
                  &y.data[y.index(in, 0, 0, 0)]);
    return y;
}

/// (n,c,h,w) -> (n,c,1,1): mean or max over each spatial slice. argmax, when
/// requested, records the first maximal flat index per (n,c).
template <typename T>
Tensor<T> global_pool_forward(const Tensor<T>& x, PoolKind kind,
                              std::vector<int>* argmax = nullptr) {
    Tensor<T> y(x.n, x.c, 1, 1);
    if (argmax) argmax->assign(static_cast<std::size_t>(x.n) * x.c, 0);
    const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic) {
            const T* s = &x.data[x.index(in, ic, 0, 0)];
            if (kind == PoolKind::Avg) {
                T acc = 0;
                for (std::size_t i = 0; i < hw; ++i) acc += s[i];
                y.at(in, ic, 0, 0) = acc / static_cast<T>(hw);
            } else {
                std::size_t best = 0;
                for (std::size_t i = 1; i < hw; ++i)
                    if (s[i] > s[best]) best = i;
                y.at(in, ic, 0, 0) = s[best];
                if (argmax) (*argmax)[static_cast<std::size_t>(in) * x.c + ic] = static_cast<int>(best);
            }
        }
    return y;
}

/// (n,c,h,w) -> (n,1,h,w): mean or max across channels per pixel. argmax
/// records the first maximal channel per (n,h,w).
template <typename T>
Tensor<T> channel_pool_forward(const Tensor<T>& x, PoolKind kind,
                               std::vector<int>* argmax = nullptr) {
    Tensor<T> y(x.n, 1, x.h, x.w);
    const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
    if (argmax) argmax->assign(static_cast<std::size_t>(x.n) * hw, 0);
    for (int in = 0; in < x.n; ++in)
        for (std::size_t i = 0; i < hw; ++i) {
            const T* base = &x.data[x.index(in, 0, 0, 0)];
            if (kind == PoolKind::Avg) {
                T acc = 0;
                for (int ic = 0; ic < x.c; ++ic) acc += base[ic * hw + i];
                y.data[y.index(in, 0, 0, 0) + i] = acc / static_cast<T>(x.c);
            } else {
                int best = 0;
                for (int ic = 1; ic < x.c; ++ic)
                    if (base[ic * hw + i] > base[best * hw + i]) best = ic;
                y.data[y.index(in, 0, 0, 0) + i] = base[best * hw + i];
                if (argmax) (*argmax)[static_cast<std::size_t>(in) * hw + i] = best;
            }
        }
    return y;
}

/// x * map with map broadcast from (n,c,1,1) or (n,1,h,w).
template <typename T>
Tensor<T> broadcast_mul_forward(const Tensor<T>& x, const Tensor<T>& map) {
    const bool per_channel = (map.n == x.n && map.c == x.c && map.h == 1 && map.w == 1);
    const bool per_pixel = (map.n == x.n && map.c == 1 && map.h == x.h && map.w == x.w);
    if (!per_channel && !per_pixel)
        throw ShapeError("broadcast_mul: map " + map.shape_str() + " does not broadcast to " +
                         x.shape_str());
    Tensor<T> y(x.n, x.c, x.h, x.w);
    const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic) {
            const T* s = &x.data[x.index(in, ic, 0, 0)];
            T* d = &y.data[y.index(in, ic, 0, 0)];
            if (per_channel) {
                T m = map.at(in, ic, 0, 0);
                for (std::size_t i = 0; i < hw; ++i) d[i] = s[i] * m;
            } else {
                const T* m = &map.data[map.index(in, 0, 0, 0)];
                for (std::size_t i = 0; i < hw; ++i) d[i] = s[i] * m[i];
            }
        }
    return y;
}

/// Row-batched affine map: y = x W^T + b. x: (n, in, 1, 1), weight:
/// (out, in, 1, 1), bias: (1, out, 1, 1), y: (n, out, 1, 1).
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
    const int out_dim = weight.n, in_dim = weight.c;
    if (x.c != in_dim || x.h != 1 || x.w != 1)
        throw ShapeError("dense: input " + x.shape_str() + " incompatible with weight " +
                         weight.shape_str());
    Tensor<T> y(x.n, out_dim, 1, 1);
    detail::gemm<T>(CblasNoTrans, CblasTrans, x.n, out_dim, in_dim, T(1), x.data.data(),
                    in_dim, weight.data.data(), in_dim, T(0), y.data.data(), out_dim);
    for (int in = 0; in < x.n; ++in)
        for (int o = 0; o < out_dim; ++o) y.at(in, o, 0, 0) += bias.data[o];
    return y;
}

template <typename T>
T mse_forward(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "mse");
    T acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        T d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<T>(a.size());
}

}  // namespace stegattn
