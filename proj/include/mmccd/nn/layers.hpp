#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "mmccd/core/rng.hpp"
#include "mmccd/core/tensor.hpp"
#include "mmccd/kernels/kernels.hpp"
#include "mmccd/kernels/scalar_ref.hpp"

// Layer zoo used by the UNet and the reconstruction baselines. Everything is
// templated on the scalar type: float routes through the dispatched kernels,
// double through the reference kernels (used by the finite-difference checks).
namespace mmccd::nn {

template <typename T>
struct ParamRef {
    std::string name;
    TensorT<T>* value;
    TensorT<T>* grad;
};

namespace detail {

template <typename T>
void gemm(bool trans_a, bool trans_b, int M, int N, int K, T alpha, const T* A, int lda,
          const T* B, int ldb, T beta, T* C, int ldc) {
    if constexpr (std::is_same_v<T, float>) {
        kernels::gemm(trans_a, trans_b, M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
    } else {
        std::vector<T> abuf, bbuf;
        const T* a = A;
        int la = lda;
        if (trans_a) {
            abuf.resize(static_cast<size_t>(M) * K);
            for (int i = 0; i < M; ++i)
                for (int k = 0; k < K; ++k)
                    abuf[static_cast<size_t>(i) * K + k] = A[static_cast<size_t>(k) * lda + i];
            a = abuf.data();
            la = K;
        }
        const T* b = B;
        int lb = ldb;
        if (trans_b) {
            bbuf.resize(static_cast<size_t>(K) * N);
            for (int k = 0; k < K; ++k)
                for (int j = 0; j < N; ++j)
                    bbuf[static_cast<size_t>(k) * N + j] = B[static_cast<size_t>(j) * ldb + k];
            b = bbuf.data();
            lb = N;
        }
        kernels::ref::gemm_nn(M, N, K, alpha, a, la, b, lb, beta, C, ldc);
    }
}

template <typename T>
void silu_fwd(size_t n, const T* x, T* out) {
    if constexpr (std::is_same_v<T, float>)
        kernels::ops().silu(n, x, out);
    else
        kernels::ref::silu(n, x, out);
}

// gin += gout * silu'(x)
template <typename T>
void silu_bwd(size_t n, const T* x, const T* gout, T* gin) {
    if constexpr (std::is_same_v<T, float>)
        kernels::ops().silu_grad(n, x, gout, gin);
    else
        kernels::ref::silu_grad(n, x, gout, gin);
}

}  // namespace detail

template <typename T>
TensorT<T> silu(const TensorT<T>& x) {
    TensorT<T> out(x.n, x.c, x.h, x.w);
    detail::silu_fwd(x.size(), x.data(), out.data());
    return out;
}

template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw std::invalid_argument("concat_channels: shape mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
    TensorT<T> out(a.n, a.c + b.c, a.h, a.w);
    size_t plane = static_cast<size_t>(a.h) * a.w;
    for (int s = 0; s < a.n; ++s) {
        T* dst = out.data() + static_cast<size_t>(s) * out.c * plane;
        std::copy_n(a.data() + static_cast<size_t>(s) * a.c * plane, a.c * plane, dst);
        std::copy_n(b.data() + static_cast<size_t>(s) * b.c * plane, b.c * plane,
                    dst + static_cast<size_t>(a.c) * plane);
    }
    return out;
}

template <typename T>
std::pair<TensorT<T>, TensorT<T>> split_channels(const TensorT<T>& x, int c_first) {
    if (c_first <= 0 || c_first >= x.c)
        throw std::invalid_argument("split_channels: bad split point");
    TensorT<T> a(x.n, c_first, x.h, x.w), b(x.n, x.c - c_first, x.h, x.w);
    size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int s = 0; s < x.n; ++s) {
        const T* src = x.data() + static_cast<size_t>(s) * x.c * plane;
        std::copy_n(src, static_cast<size_t>(c_first) * plane,
                    a.data() + static_cast<size_t>(s) * a.c * plane);
        std::copy_n(src + static_cast<size_t>(c_first) * plane,
                    static_cast<size_t>(x.c - c_first) * plane,
                    b.data() + static_cast<size_t>(s) * b.c * plane);
    }
    return {std::move(a), std::move(b)};
}

// 3x3 (pad 1) or 1x1 convolution via im2col + GEMM; backward recomputes the
// column buffer instead of saving it.
template <typename T>
struct Conv2dT {
    int in_c = 0, out_c = 0, k = 3, pad = 1;
    TensorT<T> w, dw;  // (out_c, in_c, k, k)
    TensorT<T> b, db;  // (1, out_c, 1, 1)
    TensorT<T> x_saved;

    Conv2dT() = default;
    Conv2dT(int in, int out, int kernel)
        : in_c(in), out_c(out), k(kernel), pad(kernel / 2),
          w(out, in, kernel, kernel), dw(out, in, kernel, kernel),
          b(1, out, 1, 1), db(1, out, 1, 1) {
        if (kernel != 1 && kernel != 3)
            throw std::invalid_argument("conv: kernel must be 1 or 3");
        if (in <= 0 || out <= 0) throw std::invalid_argument("conv: bad channel count");
    }

    void init(Rng& rng) {
        double s = std::sqrt(2.0 / (static_cast<double>(in_c) * k * k));
        for (auto& x : w.v) x = static_cast<T>(rng.normal() * s);
        b.zero();
    }

    void im2col(const TensorT<T>& x, int s, T* col) const {
        int H = x.h, W = x.w;
        size_t idx = 0;
        for (int c = 0; c < in_c; ++c)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx)
                    for (int y = 0; y < H; ++y) {
                        int iy = y + ky - pad;
                        if (iy < 0 || iy >= H) {
                            for (int xx = 0; xx < W; ++xx) col[idx++] = T(0);
                            continue;
                        }
                        for (int xx = 0; xx < W; ++xx) {
                            int ix = xx + kx - pad;
                            col[idx++] =
                                (ix >= 0 && ix < W) ? x.at(s, c, iy, ix) : T(0);
                        }
                    }
    }

    TensorT<T> forward(const TensorT<T>& x, bool save) {
        if (x.c != in_c)
            throw std::invalid_argument("conv: expected " + std::to_string(in_c) +
                                        " input channels, got " + x.shape_str());
        if (save) x_saved = x;
        TensorT<T> y(x.n, out_c, x.h, x.w);
        int hw = x.h * x.w, ckk = in_c * k * k;
        std::vector<T> col(static_cast<size_t>(ckk) * hw);
        for (int s = 0; s < x.n; ++s) {
            im2col(x, s, col.data());
            detail::gemm<T>(false, false, out_c, hw, ckk, T(1), w.data(), ckk, col.data(), hw,
                            T(0), y.data() + static_cast<size_t>(s) * out_c * hw, hw);
            for (int c = 0; c < out_c; ++c) {
                T* row = y.data() + (static_cast<size_t>(s) * out_c + c) * hw;
                T bias = b.v[static_cast<size_t>(c)];
                for (int i = 0; i < hw; ++i) row[i] += bias;
            }
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        const TensorT<T>& x = x_saved;
        if (x.size() == 0) throw std::logic_error("conv backward before forward(save=true)");
        int hw = x.h * x.w, ckk = in_c * k * k;
        TensorT<T> dx(x.n, in_c, x.h, x.w);
        std::vector<T> col(static_cast<size_t>(ckk) * hw);
        std::vector<T> dcol(static_cast<size_t>(ckk) * hw);
        for (int s = 0; s < x.n; ++s) {
            const T* dy_s = dy.data() + static_cast<size_t>(s) * out_c * hw;
            im2col(x, s, col.data());
            // dW += dY * col^T
            detail::gemm<T>(false, true, out_c, ckk, hw, T(1), dy_s, hw, col.data(), hw, T(1),
                            dw.data(), ckk);
            for (int c = 0; c < out_c; ++c)
                db.v[static_cast<size_t>(c)] +=
                    static_cast<T>(kernels::ref::sum(static_cast<size_t>(hw),
                                                     dy_s + static_cast<size_t>(c) * hw));
            // dcol = W^T * dY, then scatter back
            detail::gemm<T>(true, false, ckk, hw, out_c, T(1), w.data(), ckk, dy_s, hw, T(0),
                            dcol.data(), hw);
            size_t idx = 0;
            for (int c = 0; c < in_c; ++c)
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx)
                        for (int y = 0; y < x.h; ++y) {
                            int iy = y + ky - pad;
                            if (iy < 0 || iy >= x.h) {
                                idx += static_cast<size_t>(x.w);
                                continue;
                            }
                            for (int xx = 0; xx < x.w; ++xx, ++idx) {
                                int ix = xx + kx - pad;
                                if (ix >= 0 && ix < x.w) dx.at(s, c, iy, ix) += dcol[idx];
                            }
                        }
        }
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".w", &w, &dw});
        out.push_back({prefix + ".b", &b, &db});
    }
};

template <typename T>
struct LinearT {
    int in_f = 0, out_f = 0;
    TensorT<T> w, dw;  // (out_f, in_f, 1, 1)
    TensorT<T> b, db;  // (1, out_f, 1, 1)
    TensorT<T> x_saved;

    LinearT() = default;
    LinearT(int in, int out)
        : in_f(in), out_f(out), w(out, in, 1, 1), dw(out, in, 1, 1), b(1, out, 1, 1),
          db(1, out, 1, 1) {
        if (in <= 0 || out <= 0) throw std::invalid_argument("linear: bad feature count");
    }

    void init(Rng& rng) {
        double s = 1.0 / std::sqrt(static_cast<double>(in_f));
        for (auto& x : w.v) x = static_cast<T>(rng.normal() * s);
        b.zero();
    }

    // x: (n, in_f, 1, 1) -> (n, out_f, 1, 1)
    TensorT<T> forward(const TensorT<T>& x, bool save) {
        if (x.c != in_f || x.h != 1 || x.w != 1)
            throw std::invalid_argument("linear: expected (n," + std::to_string(in_f) +
                                        ",1,1), got " + x.shape_str());
        if (save) x_saved = x;
        TensorT<T> y(x.n, out_f, 1, 1);
        detail::gemm<T>(false, true, x.n, out_f, in_f, T(1), x.data(), in_f, w.data(), in_f,
                        T(0), y.data(), out_f);
        for (int s = 0; s < x.n; ++s)
            for (int c = 0; c < out_f; ++c)
                y.v[static_cast<size_t>(s) * out_f + c] += b.v[static_cast<size_t>(c)];
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        const TensorT<T>& x = x_saved;
        if (x.size() == 0) throw std::logic_error("linear backward before forward(save=true)");
        detail::gemm<T>(true, false, out_f, in_f, x.n, T(1), dy.data(), out_f, x.data(), in_f,
                        T(1), dw.data(), in_f);
        for (int s = 0; s < x.n; ++s)
            for (int c = 0; c < out_f; ++c)
                db.v[static_cast<size_t>(c)] += dy.v[static_cast<size_t>(s) * out_f + c];
        TensorT<T> dx(x.n, in_f, 1, 1);
        detail::gemm<T>(false, false, x.n, in_f, out_f, T(1), dy.data(), out_f, w.data(), in_f,
                        T(0), dx.data(), in_f);
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        out.push_back({prefix + ".w", &w, &dw});
        out.push_back({prefix + ".b", &b, &db});
    }
};

template <typename T>
TensorT<T> avgpool2(const TensorT<T>& x) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
        throw std::invalid_argument("avgpool2: odd spatial size " + x.shape_str());
    TensorT<T> y(x.n, x.c, x.h / 2, x.w / 2);
    for (int s = 0; s < x.n; ++s)
        for (int c = 0; c < x.c; ++c)
            for (int iy = 0; iy < y.h; ++iy)
                for (int ix = 0; ix < y.w; ++ix)
                    y.at(s, c, iy, ix) =
                        (x.at(s, c, 2 * iy, 2 * ix) + x.at(s, c, 2 * iy, 2 * ix + 1) +
                         x.at(s, c, 2 * iy + 1, 2 * ix) + x.at(s, c, 2 * iy + 1, 2 * ix + 1)) /
                        T(4);
    return y;
}

template <typename T>
TensorT<T> avgpool2_backward(const TensorT<T>& dy) {
    TensorT<T> dx(dy.n, dy.c, dy.h * 2, dy.w * 2);
    for (int s = 0; s < dy.n; ++s)
        for (int c = 0; c < dy.c; ++c)
            for (int iy = 0; iy < dy.h; ++iy)
                for (int ix = 0; ix < dy.w; ++ix) {
                    T g = dy.at(s, c, iy, ix) / T(4);
                    dx.at(s, c, 2 * iy, 2 * ix) = g;
                    dx.at(s, c, 2 * iy, 2 * ix + 1) = g;
                    dx.at(s, c, 2 * iy + 1, 2 * ix) = g;
                    dx.at(s, c, 2 * iy + 1, 2 * ix + 1) = g;
                }
    return dx;
}

// nearest-neighbor 2x upsampling
template <typename T>
TensorT<T> upsample2(const TensorT<T>& x) {
    TensorT<T> y(x.n, x.c, x.h * 2, x.w * 2);
    for (int s = 0; s < x.n; ++s)
        for (int c = 0; c < x.c; ++c)
            for (int iy = 0; iy < y.h; ++iy)
                for (int ix = 0; ix < y.w; ++ix)
                    y.at(s, c, iy, ix) = x.at(s, c, iy / 2, ix / 2);
    return y;
}

template <typename T>
TensorT<T> upsample2_backward(const TensorT<T>& dy) {
    if (dy.h % 2 != 0 || dy.w % 2 != 0)
        throw std::invalid_argument("upsample2_backward: odd spatial size");
    TensorT<T> dx(dy.n, dy.c, dy.h / 2, dy.w / 2);
    for (int s = 0; s < dy.n; ++s)
        for (int c = 0; c < dy.c; ++c)
            for (int iy = 0; iy < dy.h; ++iy)
                for (int ix = 0; ix < dy.w; ++ix)
                    dx.at(s, c, iy / 2, ix / 2) += dy.at(s, c, iy, ix);
    return dx;
}

// Standard sinusoidal position code of the step index, (n, dim, 1, 1).
template <typename T>
TensorT<T> time_embedding(const std::vector<int>& t, int dim) {
    if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("time_embedding: dim must be even");
    int half = dim / 2;
    TensorT<T> out(static_cast<int>(t.size()), dim, 1, 1);
    for (size_t s = 0; s < t.size(); ++s)
        for (int i = 0; i < half; ++i) {
            double f = std::exp(-std::log(10000.0) * i / (half > 1 ? half - 1 : 1));
            double arg = static_cast<double>(t[s]) * f;
            out.v[s * dim + static_cast<size_t>(i)] = static_cast<T>(std::sin(arg));
            out.v[s * dim + static_cast<size_t>(half + i)] = static_cast<T>(std::cos(arg));
        }
    return out;
}

// conv3x3 -> (+ per-channel step bias) -> SiLU -> conv3x3 -> SiLU
template <typename T>
struct ConvBlockT {
    Conv2dT<T> conv1, conv2;
    std::optional<LinearT<T>> time_proj;  // emb -> out_c bias
    TensorT<T> h1_saved, h3_saved;        // pre-activations

    ConvBlockT(int in_c, int out_c, int emb_dim)
        : conv1(in_c, out_c, 3), conv2(out_c, out_c, 3) {
        if (emb_dim > 0) time_proj.emplace(emb_dim, out_c);
    }

    void init(Rng& rng) {
        conv1.init(rng);
        conv2.init(rng);
        if (time_proj) time_proj->init(rng);
    }

    TensorT<T> forward(const TensorT<T>& x, const TensorT<T>* emb, bool save) {
        TensorT<T> h1 = conv1.forward(x, save);
        if (time_proj) {
            if (!emb) throw std::logic_error("conv block: missing step embedding");
            TensorT<T> tb = time_proj->forward(*emb, save);
            size_t plane = static_cast<size_t>(h1.h) * h1.w;
            for (int s = 0; s < h1.n; ++s)
                for (int c = 0; c < h1.c; ++c) {
                    T bias = tb.v[static_cast<size_t>(s) * h1.c + c];
                    T* row = h1.data() + (static_cast<size_t>(s) * h1.c + c) * plane;
                    for (size_t i = 0; i < plane; ++i) row[i] += bias;
                }
        }
        if (save) h1_saved = h1;
        TensorT<T> h3 = conv2.forward(silu(h1), save);
        if (save) h3_saved = h3;
        return silu(h3);
    }

    // Returns dx; when time-conditioned, accumulates the embedding gradient.
    TensorT<T> backward(const TensorT<T>& dy, TensorT<T>* demb) {
        TensorT<T> dh3(h3_saved.n, h3_saved.c, h3_saved.h, h3_saved.w);
        detail::silu_bwd(h3_saved.size(), h3_saved.data(), dy.data(), dh3.data());
        TensorT<T> dh2 = conv2.backward(dh3);
        TensorT<T> dh1(h1_saved.n, h1_saved.c, h1_saved.h, h1_saved.w);
        detail::silu_bwd(h1_saved.size(), h1_saved.data(), dh2.data(), dh1.data());
        if (time_proj) {
            TensorT<T> dtb(dh1.n, dh1.c, 1, 1);
            size_t plane = static_cast<size_t>(dh1.h) * dh1.w;
            for (int s = 0; s < dh1.n; ++s)
                for (int c = 0; c < dh1.c; ++c)
                    dtb.v[static_cast<size_t>(s) * dh1.c + c] = static_cast<T>(
                        kernels::ref::sum(plane, dh1.data() + (static_cast<size_t>(s) * dh1.c + c) * plane));
            TensorT<T> de = time_proj->backward(dtb);
            if (demb) {
                if constexpr (std::is_same_v<T, float>)
                    kernels::ops().axpy(de.size(), 1.0f, de.data(), demb->data());
                else
                    kernels::ref::axpy(de.size(), T(1), de.data(), demb->data());
            }
        }
        return conv1.backward(dh1);
    }

    void collect(std::vector<ParamRef<T>>& out, const std::string& prefix) {
        conv1.collect(out, prefix + ".conv1");
        conv2.collect(out, prefix + ".conv2");
        if (time_proj) time_proj->collect(out, prefix + ".temb");
    }
};

}  // namespace mmccd::nn
