#pragma once

#include <cmath>
#include <cstddef>

// Reference implementations shared by the scalar float backend and the double
// instantiations used by tests and gradient checks. Kept free of any vector
// intrinsics so they stay the ground truth the SIMD variants are tested against.
namespace mmccd::kernels::ref {

template <typename T>
void axpby(size_t n, T a, const T* x, T b, const T* y, T* out) {
    for (size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

template <typename T>
void axpy(size_t n, T a, const T* x, T* y) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void scale(size_t n, T a, const T* x, T* out) {
    for (size_t i = 0; i < n; ++i) out[i] = a * x[i];
}

template <typename T>
void vadd(size_t n, const T* a, const T* b, T* out) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void vmul(size_t n, const T* a, const T* b, T* out) {
    for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

// out = mask != 0 ? on : off. A branch, not arithmetic, so unmasked lanes are
// bit-identical to `off` (including signed zeros).
template <typename T>
void select(size_t n, const T* mask, const T* on, const T* off, T* out) {
    for (size_t i = 0; i < n; ++i) out[i] = mask[i] != T(0) ? on[i] : off[i];
}

template <typename T>
void sq_diff(size_t n, const T* a, const T* b, T* out) {
    for (size_t i = 0; i < n; ++i) {
        T d = a[i] - b[i];
        out[i] = d * d;
    }
}

template <typename T>
void abs_diff(size_t n, const T* a, const T* b, T* out) {
    for (size_t i = 0; i < n; ++i) out[i] = std::abs(a[i] - b[i]);
}

template <typename T>
void silu(size_t n, const T* x, T* out) {
    for (size_t i = 0; i < n; ++i) out[i] = x[i] / (T(1) + std::exp(-x[i]));
}

// gin += gout * silu'(x), silu'(x) = s(x) * (1 + x * (1 - s(x))), s = sigmoid
template <typename T>
void silu_grad(size_t n, const T* x, const T* gout, T* gin) {
    for (size_t i = 0; i < n; ++i) {
        T s = T(1) / (T(1) + std::exp(-x[i]));
        gin[i] += gout[i] * s * (T(1) + x[i] * (T(1) - s));
    }
}

template <typename T>
double sum(size_t n, const T* x) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]);
    return acc;
}

template <typename T>
double sum_sq(size_t n, const T* x) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d = static_cast<double>(x[i]);
        acc += d * d;
    }
    return acc;
}

template <typename T>
double sq_diff_sum(size_t n, const T* a, const T* b) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

// Row-major C(M,N) = alpha * A(M,K) * B(K,N) + beta * C
template <typename T>
void gemm_nn(int M, int N, int K, T alpha, const T* A, int lda, const T* B, int ldb,
             T beta, T* C, int ldc) {
    for (int i = 0; i < M; ++i) {
        T* crow = C + static_cast<size_t>(i) * ldc;
        if (beta == T(0)) {
            for (int j = 0; j < N; ++j) crow[j] = T(0);
        } else if (beta != T(1)) {
            for (int j = 0; j < N; ++j) crow[j] *= beta;
        }
        const T* arow = A + static_cast<size_t>(i) * lda;
        for (int k = 0; k < K; ++k) {
            T a = alpha * arow[k];
            const T* brow = B + static_cast<size_t>(k) * ldb;
            for (int j = 0; j < N; ++j) crow[j] += a * brow[j];
        }
    }
}

template <typename T>
void adam_step(size_t n, T* w, const T* g, T* m, T* v, T lr, T beta1, T beta2, T eps,
               T c1, T c2) {
    for (size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
        v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
        w[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
    }
}

}  // namespace mmccd::kernels::ref
