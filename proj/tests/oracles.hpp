// Definitional loop oracles, written independently of the library kernels.
// Everything here is deliberately naive: nested loops straight from the
// textbook definitions, no gemm, no im2col, no filtering tricks.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "stegattn/tensor.hpp"

namespace oracle {

using stegattn::Tensor;

template <typename T>
Tensor<T> random_tensor(int n, int c, int h, int w, std::mt19937_64& rng, T lo = T(-1),
                        T hi = T(1)) {
    Tensor<T> t(n, c, h, w);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (T& v : t.data) v = static_cast<T>(dist(rng));
    return t;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const std::vector<T>& bias,
                 int pt, int pb, int pl, int pr) {
    const int cout = weight.n, cin = weight.c, kh = weight.h, kw = weight.w;
    const int oh = x.h + pt + pb - kh + 1;
    const int ow = x.w + pl + pr - kw + 1;
    Tensor<T> y(x.n, cout, oh, ow);
    for (int in = 0; in < x.n; ++in)
        for (int oc = 0; oc < cout; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = bias[oc];
                    for (int ic = 0; ic < cin; ++ic)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                int iy = oy + ky - pt;
                                int ix = ox + kx - pl;
                                if (iy >= 0 && iy < x.h && ix >= 0 && ix < x.w)
                                    acc += static_cast<double>(weight.at(oc, ic, ky, kx)) *
                                           x.at(in, ic, iy, ix);
                            }
                    y.at(in, oc, oy, ox) = static_cast<T>(acc);
                }
    return y;
}

template <typename T>
Tensor<T> global_pool(const Tensor<T>& x, bool take_max) {
    Tensor<T> y(x.n, x.c, 1, 1);
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic) {
            double acc = take_max ? -1e300 : 0.0;
            for (int iy = 0; iy < x.h; ++iy)
                for (int ix = 0; ix < x.w; ++ix) {
                    double v = x.at(in, ic, iy, ix);
                    acc = take_max ? std::max(acc, v) : acc + v;
                }
            y.at(in, ic, 0, 0) = static_cast<T>(take_max ? acc : acc / (x.h * x.w));
        }
    return y;
}

template <typename T>
Tensor<T> channel_pool(const Tensor<T>& x, bool take_max) {
    Tensor<T> y(x.n, 1, x.h, x.w);
    for (int in = 0; in < x.n; ++in)
        for (int iy = 0; iy < x.h; ++iy)
            for (int ix = 0; ix < x.w; ++ix) {
                double acc = take_max ? -1e300 : 0.0;
                for (int ic = 0; ic < x.c; ++ic) {
                    double v = x.at(in, ic, iy, ix);
                    acc = take_max ? std::max(acc, v) : acc + v;
                }
                y.at(in, 0, iy, ix) = static_cast<T>(take_max ? acc : acc / x.c);
            }
    return y;
}

template <typename T>
Tensor<T> broadcast_mul(const Tensor<T>& x, const Tensor<T>& map) {
    // Explicit replication of the map to full shape, then elementwise product.
    Tensor<T> full(x.n, x.c, x.h, x.w);
    for (int in = 0; in < x.n; ++in)
        for (int ic = 0; ic < x.c; ++ic)
            for (int iy = 0; iy < x.h; ++iy)
                for (int ix = 0; ix < x.w; ++ix)
                    full.at(in, ic, iy, ix) = (map.h == 1 && map.w == 1)
                                                  ? map.at(in, ic, 0, 0)
                                                  : map.at(in, 0, iy, ix);
    Tensor<T> y(x.n, x.c, x.h, x.w);
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] = x.data[i] * full.data[i];
    return y;
}

// Triple-loop x W^T + b; x is (n, in, 1, 1), weight (out, in, 1, 1).
template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& weight, const std::vector<T>& bias) {
    Tensor<T> y(x.n, weight.n, 1, 1);
    for (int in = 0; in < x.n; ++in)
        for (int o = 0; o < weight.n; ++o) {
            double acc = bias[o];
            for (int i = 0; i < weight.c; ++i)
                acc += static_cast<double>(x.at(in, i, 0, 0)) * weight.at(o, i, 0, 0);
            y.at(in, o, 0, 0) = static_cast<T>(acc);
        }
    return y;
}

template <typename T>
double mse(const Tensor<T>& a, const Tensor<T>& b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

inline double psnr(double mse_val, double max_val) {
    if (mse_val == 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(max_val * max_val / mse_val);
}

// Per-window SSIM: weighted mean/variance/covariance computed directly inside
// each valid 11x11 window, per channel, averaged.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b) {
    constexpr int W = 11;
    constexpr double sigma = 1.5, K1 = 0.01, K2 = 0.03, L = 1.0;
    const double C1 = (K1 * L) * (K1 * L), C2 = (K2 * L) * (K2 * L);
    double kernel[W][W];
    double ksum = 0;
    for (int i = 0; i < W; ++i)
        for (int j = 0; j < W; ++j) {
            double dy = i - W / 2, dx = j - W / 2;
            kernel[i][j] = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
            ksum += kernel[i][j];
        }
    for (int i = 0; i < W; ++i)
        for (int j = 0; j < W; ++j) kernel[i][j] /= ksum;

    double total = 0;
    long count = 0;
    for (int ic = 0; ic < a.c; ++ic)
        for (int wy = 0; wy + W <= a.h; ++wy)
            for (int wx = 0; wx + W <= a.w; ++wx) {
                double ma = 0, mb = 0;
                for (int i = 0; i < W; ++i)
                    for (int j = 0; j < W; ++j) {
                        ma += kernel[i][j] * a.at(0, ic, wy + i, wx + j);
                        mb += kernel[i][j] * b.at(0, ic, wy + i, wx + j);
                    }
                double va = 0, vb = 0, cab = 0;
                for (int i = 0; i < W; ++i)
                    for (int j = 0; j < W; ++j) {
                        double da = a.at(0, ic, wy + i, wx + j) - ma;
                        double db = b.at(0, ic, wy + i, wx + j) - mb;
                        va += kernel[i][j] * da * da;
                        vb += kernel[i][j] * db * db;
                        cab += kernel[i][j] * da * db;
                    }
                total += ((2 * ma * mb + C1) * (2 * cab + C2)) /
                         ((ma * ma + mb * mb + C1) * (va + vb + C2));
                ++count;
            }
    return total / count;
}

}  // namespace oracle
