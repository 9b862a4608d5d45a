#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmccd {

// Dense NCHW tensor. Single images use n == 1; per-channel 2D data is (1, c, h, w).
template <typename T>
struct TensorT {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    TensorT() = default;
    TensorT(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {
        if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0)
            throw std::invalid_argument("tensor: negative dimension");
    }

    static TensorT image(int c_, int h_, int w_) { return TensorT(1, c_, h_, w_); }

    size_t size() const { return v.size(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    T& at(int in, int ic, int iy, int ix) {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    T at(int in, int ic, int iy, int ix) const {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }

    bool same_shape(const TensorT& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }
    void fill(T x) { std::fill(v.begin(), v.end(), x); }
    void zero() { fill(T(0)); }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
inline bool all_finite(const TensorT<T>& t) {
    for (T x : t.v)
        if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
}

// Binary image (predictions, ground-truth masks).
struct BoolImage {
    int h = 0, w = 0;
    std::vector<uint8_t> v;

    BoolImage() = default;
    BoolImage(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0) {}

    uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
    size_t count() const {
        size_t s = 0;
        for (uint8_t b : v) s += b != 0;
        return s;
    }
    bool operator==(const BoolImage& o) const { return h == o.h && w == o.w && v == o.v; }
};

}  // namespace mmccd
