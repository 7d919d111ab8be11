#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "stegattn/errors.hpp"

namespace stegattn {

/// Dense 4-axis array in row-major (n, c, h, w) order. All activations,
/// images and convolution weights live in this container; 2-d dense
/// parameters use the (rows, cols, 1, 1) form.
template <typename T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_) {
        if (n < 1 || c < 1 || h < 1 || w < 1)
            throw ShapeError("tensor extents must all be >= 1, got (" + shape_str() + ")");
        data.assign(static_cast<std::size_t>(n) * c * h * w, fill);
    }

    static Tensor from(int n_, int c_, int h_, int w_, std::initializer_list<T> vals) {
        Tensor t(n_, c_, h_, w_);
        if (vals.size() != t.size())
            throw ShapeError("initializer size does not match shape (" + t.shape_str() + ")");
        std::size_t i = 0;
        for (T v : vals) t.data[i++] = v;
        return t;
    }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    std::size_t index(int in, int ic, int ih, int iw) const {
        return ((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw;
    }
    T& at(int in, int ic, int ih, int iw) { return data[index(in, ic, ih, iw)]; }
    const T& at(int in, int ic, int ih, int iw) const { return data[index(in, ic, ih, iw)]; }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::string shape_str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" +
               std::to_string(h) + "x" + std::to_string(w);
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(n, c, h, w);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

template <typename T>
inline void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* where) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(where) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
}

}  // namespace stegattn
