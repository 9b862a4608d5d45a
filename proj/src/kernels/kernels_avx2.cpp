// AVX2+FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; dispatch.cpp installs the table only after a cpuid check.

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "mmccd/kernels/kernels.hpp"

namespace mmccd::kernels {
namespace {

// Cephes-style exp for 8 float lanes, ~1 ulp over the clamped range.
inline __m256 exp256_ps(__m256 x) {
    const __m256 hi = _mm256_set1_ps(88.3762626647949f);
    const __m256 lo = _mm256_set1_ps(-88.3762626647949f);
    const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
    const __m256 c1 = _mm256_set1_ps(0.693359375f);
    const __m256 c2 = _mm256_set1_ps(-2.12194440e-4f);
    const __m256 p0 = _mm256_set1_ps(1.9875691500e-4f);
    const __m256 p1 = _mm256_set1_ps(1.3981999507e-3f);
    const __m256 p2 = _mm256_set1_ps(8.3334519073e-3f);
    const __m256 p3 = _mm256_set1_ps(4.1665795894e-2f);
    const __m256 p4 = _mm256_set1_ps(1.6666665459e-1f);
    const __m256 p5 = _mm256_set1_ps(5.0000001201e-1f);
    const __m256 one = _mm256_set1_ps(1.0f);

    x = _mm256_min_ps(x, hi);
    x = _mm256_max_ps(x, lo);

    __m256 fx = _mm256_fmadd_ps(x, log2e, _mm256_set1_ps(0.5f));
    fx = _mm256_floor_ps(fx);
    x = _mm256_fnmadd_ps(fx, c1, x);
    x = _mm256_fnmadd_ps(fx, c2, x);

    __m256 z = _mm256_mul_ps(x, x);
    __m256 y = p0;
    y = _mm256_fmadd_ps(y, x, p1);
    y = _mm256_fmadd_ps(y, x, p2);
    y = _mm256_fmadd_ps(y, x, p3);
    y = _mm256_fmadd_ps(y, x, p4);
    y = _mm256_fmadd_ps(y, x, p5);
    y = _mm256_fmadd_ps(y, z, x);
    y = _mm256_add_ps(y, one);

    __m256i n = _mm256_cvttps_epi32(fx);
    n = _mm256_add_epi32(n, _mm256_set1_epi32(0x7f));
    n = _mm256_slli_epi32(n, 23);
    return _mm256_mul_ps(y, _mm256_castsi256_ps(n));
}

void axpby_avx2(size_t n, float a, const float* x, float b, const float* y, float* out) {
    __m256 va = _mm256_set1_ps(a), vb = _mm256_set1_ps(b);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 r = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        r = _mm256_fmadd_ps(vb, _mm256_loadu_ps(y + i), r);
        _mm256_storeu_ps(out + i, r);
    }
    for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void axpy_avx2(size_t n, float a, const float* x, float* y) {
    __m256 va = _mm256_set1_ps(a);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 r = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
        _mm256_storeu_ps(y + i, r);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(size_t n, float a, const float* x, float* out) {
    __m256 va = _mm256_set1_ps(a);
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) out[i] = a * x[i];
}

void vadd_avx2(size_t n, const float* a, const float* b, float* out) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vmul_avx2(size_t n, const float* a, const float* b, float* out) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void select_avx2(size_t n, const float* mask, const float* on, const float* off, float* out) {
    const __m256 zero = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 cond = _mm256_cmp_ps(_mm256_loadu_ps(mask + i), zero, _CMP_NEQ_OQ);
        _mm256_storeu_ps(out + i,
                         _mm256_blendv_ps(_mm256_loadu_ps(off + i), _mm256_loadu_ps(on + i), cond));
    }
    for (; i < n; ++i) out[i] = mask[i] != 0.0f ? on[i] : off[i];
}

void sq_diff_avx2(size_t n, const float* a, const float* b, float* out) {
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        _mm256_storeu_ps(out + i, _mm256_mul_ps(d, d));
    }
    for (; i < n; ++i) {
        float d = a[i] - b[i];
        out[i] = d * d;
    }
}

void abs_diff_avx2(size_t n, const float* a, const float* b, float* out) {
    const __m256 signmask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7FFFFFFF));
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        _mm256_storeu_ps(out + i, _mm256_and_ps(d, signmask));
    }
    for (; i < n; ++i) out[i] = std::abs(a[i] - b[i]);
}

void silu_avx2(size_t n, const float* x, float* out) {
    const __m256 one = _mm256_set1_ps(1.0f);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        __m256 e = exp256_ps(_mm256_sub_ps(_mm256_setzero_ps(), v));
        _mm256_storeu_ps(out + i, _mm256_div_ps(v, _mm256_add_ps(one, e)));
    }
    for (; i < n; ++i) out[i] = x[i] / (1.0f + std::exp(-x[i]));
}

void silu_grad_avx2(size_t n, const float* x, const float* gout, float* gin) {
    const __m256 one = _mm256_set1_ps(1.0f);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        __m256 e = exp256_ps(_mm256_sub_ps(_mm256_setzero_ps(), v));
        __m256 s = _mm256_div_ps(one, _mm256_add_ps(one, e));
        __m256 d = _mm256_mul_ps(s, _mm256_fmadd_ps(v, _mm256_sub_ps(one, s), one));
        __m256 r = _mm256_fmadd_ps(_mm256_loadu_ps(gout + i), d, _mm256_loadu_ps(gin + i));
        _mm256_storeu_ps(gin + i, r);
    }
    for (; i < n; ++i) {
        float s = 1.0f / (1.0f + std::exp(-x[i]));
        gin[i] += gout[i] * s * (1.0f + x[i] * (1.0f - s));
    }
}

inline double hsum_pd(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double sum_avx2(size_t n, const float* x) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
    }
    double acc = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += static_cast<double>(x[i]);
    return acc;
}

double sum_sq_avx2(size_t n, const float* x) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        __m256d d0 = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
        __m256d d1 = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double acc = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        double d = static_cast<double>(x[i]);
        acc += d * d;
    }
    return acc;
}

double sq_diff_sum_avx2(size_t n, const float* a, const float* b) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 va = _mm256_loadu_ps(a + i);
        __m256 vb = _mm256_loadu_ps(b + i);
        __m256d d0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                                   _mm256_cvtps_pd(_mm256_castps256_ps128(vb)));
        __m256d d1 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                                   _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double acc = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

void gemm_nn_avx2(int M, int N, int K, float alpha, const float* A, int lda,
                  const float* B, int ldb, float beta, float* C, int ldc) {
    for (int i = 0; i < M; ++i) {
        float* crow = C + static_cast<size_t>(i) * ldc;
        if (beta == 0.0f) {
            std::memset(crow, 0, sizeof(float) * static_cast<size_t>(N));
        } else if (beta != 1.0f) {
            scale_avx2(static_cast<size_t>(N), beta, crow, crow);
        }
    }

    int i = 0;
    for (; i + 4 <= M; i += 4) {
        const float* a0 = A + static_cast<size_t>(i + 0) * lda;
        const float* a1 = A + static_cast<size_t>(i + 1) * lda;
        const float* a2 = A + static_cast<size_t>(i + 2) * lda;
        const float* a3 = A + static_cast<size_t>(i + 3) * lda;
        float* c0 = C + static_cast<size_t>(i + 0) * ldc;
        float* c1 = C + static_cast<size_t>(i + 1) * ldc;
        float* c2 = C + static_cast<size_t>(i + 2) * ldc;
        float* c3 = C + static_cast<size_t>(i + 3) * ldc;
        int j = 0;
        for (; j + 8 <= N; j += 8) {
            __m256 s0 = _mm256_loadu_ps(c0 + j);
            __m256 s1 = _mm256_loadu_ps(c1 + j);
            __m256 s2 = _mm256_loadu_ps(c2 + j);
            __m256 s3 = _mm256_loadu_ps(c3 + j);
            for (int k = 0; k < K; ++k) {
                __m256 b = _mm256_loadu_ps(B + static_cast<size_t>(k) * ldb + j);
                s0 = _mm256_fmadd_ps(_mm256_set1_ps(alpha * a0[k]), b, s0);
                s1 = _mm256_fmadd_ps(_mm256_set1_ps(alpha * a1[k]), b, s1);
                s2 = _mm256_fmadd_ps(_mm256_set1_ps(alpha * a2[k]), b, s2);
                s3 = _mm256_fmadd_ps(_mm256_set1_ps(alpha * a3[k]), b, s3);
            }
            _mm256_storeu_ps(c0 + j, s0);
            _mm256_storeu_ps(c1 + j, s1);
            _mm256_storeu_ps(c2 + j, s2);
            _mm256_storeu_ps(c3 + j, s3);
        }
        for (; j < N; ++j) {
            float acc0 = c0[j], acc1 = c1[j], acc2 = c2[j], acc3 = c3[j];
            for (int k = 0; k < K; ++k) {
                float b = B[static_cast<size_t>(k) * ldb + j];
                acc0 += alpha * a0[k] * b;
                acc1 += alpha * a1[k] * b;
                acc2 += alpha * a2[k] * b;
                acc3 += alpha * a3[k] * b;
            }
            c0[j] = acc0;
            c1[j] = acc1;
            c2[j] = acc2;
            c3[j] = acc3;
        }
    }
    for (; i < M; ++i) {
        const float* a = A + static_cast<size_t>(i) * lda;
        float* crow = C + static_cast<size_t>(i) * ldc;
        int j = 0;
        for (; j + 8 <= N; j += 8) {
            __m256 s = _mm256_loadu_ps(crow + j);
            for (int k = 0; k < K; ++k) {
                __m256 b = _mm256_loadu_ps(B + static_cast<size_t>(k) * ldb + j);
                s = _mm256_fmadd_ps(_mm256_set1_ps(alpha * a[k]), b, s);
            }
            _mm256_storeu_ps(crow + j, s);
        }
        for (; j < N; ++j) {
            float acc = crow[j];
            for (int k = 0; k < K; ++k) acc += alpha * a[k] * B[static_cast<size_t>(k) * ldb + j];
            crow[j] = acc;
        }
    }
}

void adam_step_avx2(size_t n, float* w, const float* g, float* m, float* v, float lr,
                    float beta1, float beta2, float eps, float c1, float c2) {
    const __m256 vb1 = _mm256_set1_ps(beta1), vib1 = _mm256_set1_ps(1.0f - beta1);
    const __m256 vb2 = _mm256_set1_ps(beta2), vib2 = _mm256_set1_ps(1.0f - beta2);
    const __m256 vlr = _mm256_set1_ps(lr), vc1 = _mm256_set1_ps(c1);
    const __m256 vc2 = _mm256_set1_ps(c2), veps = _mm256_set1_ps(eps);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 gv = _mm256_loadu_ps(g + i);
        __m256 mv = _mm256_fmadd_ps(vib1, gv, _mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)));
        __m256 g2 = _mm256_mul_ps(gv, gv);
        __m256 vv = _mm256_fmadd_ps(vib2, g2, _mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)));
        _mm256_storeu_ps(m + i, mv);
        _mm256_storeu_ps(v + i, vv);
        __m256 num = _mm256_mul_ps(vlr, _mm256_mul_ps(mv, vc1));
        __m256 den = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vv, vc2)), veps);
        __m256 wv = _mm256_sub_ps(_mm256_loadu_ps(w + i), _mm256_div_ps(num, den));
        _mm256_storeu_ps(w + i, wv);
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
        w[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
    }
}

const Ops kAvx2Ops = {
    "avx2",
    &axpby_avx2,
    &axpy_avx2,
    &scale_avx2,
    &vadd_avx2,
    &vmul_avx2,
    &select_avx2,
    &sq_diff_avx2,
    &abs_diff_avx2,
    &silu_avx2,
    &silu_grad_avx2,
    &sum_avx2,
    &sum_sq_avx2,
    &sq_diff_sum_avx2,
    &gemm_nn_avx2,
    &adam_step_avx2,
};

}  // namespace

const Ops* avx2_ops() { return &kAvx2Ops; }

}  // namespace mmccd::kernels
